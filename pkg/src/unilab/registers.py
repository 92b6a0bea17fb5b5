"""Single-writer multi-reader append-only logs.

One log per process. Only the owner may append; anyone may read. A read
returns the whole log as it stands at the read's linearization point, so
every snapshot is a prefix of every later one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .codec import decode
from .errors import AclViolation


@dataclass
class RegisterLog:
    owner: int
    entries: list[tuple[int, bytes]] = field(default_factory=list)


class RegisterBank:
    def __init__(self, n: int):
        self.logs = [RegisterLog(i) for i in range(n)]
        self._digests = [0] * n

    def append(self, caller: int, owner: int, round: int, payload: bytes) -> int:
        """Append ``(round, payload)`` to ``owner``'s log; returns the new length."""
        if caller != owner:
            raise AclViolation(f"process {caller} cannot append to object o{owner}")
        log = self.logs[owner]
        entry = (round, bytes(payload))
        log.entries.append(entry)
        self._digests[owner] = hash((self._digests[owner], entry))
        return len(log.entries)

    def read(self, reader: int, owner: int) -> tuple[tuple[int, bytes], ...]:
        return tuple(self.logs[owner].entries)

    def length(self, owner: int) -> int:
        return len(self.logs[owner].entries)

    def fingerprint(self) -> tuple:
        return tuple(self._digests)

    def fork(self) -> "RegisterBank":
        other = RegisterBank.__new__(RegisterBank)
        other.logs = [RegisterLog(log.owner, list(log.entries)) for log in self.logs]
        other._digests = list(self._digests)
        return other


def check_linearizable(trace) -> list[str]:
    """Audit register operations recorded in a trace.

    Every read must return exactly the appends to that object that precede
    it in the trace, and snapshots seen by one reader never shrink.
    Returns a list of human-readable problems (empty when clean).
    """
    appended: dict[int, int] = {}
    last_seen: dict[tuple[int, int], int] = {}
    problems = []
    for obs in trace.observations():
        if obs.action == "append":
            appended[obs.pid] = appended.get(obs.pid, 0) + 1
        elif obs.action == "read":
            owner, count = decode(obs.payload)
            expected = appended.get(owner, 0)
            if count != expected:
                problems.append(
                    f"seq {obs.seq}: p{obs.pid} read {count} entries of o{owner}, "
                    f"{expected} appended before")
            key = (obs.pid, owner)
            if count < last_seen.get(key, 0):
                problems.append(f"seq {obs.seq}: p{obs.pid} saw o{owner} shrink")
            last_seen[key] = count
    return problems
