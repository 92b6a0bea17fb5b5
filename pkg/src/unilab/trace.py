"""Trace entries and the line-oriented trace format.

One entry per line::

    <seq> <kind> <origin> -> <target> <hex payload>     kernel event
    <seq> ! <action> <pid> <hex payload>                 observable action

Header and trailer lines start with ``#``. Observations carry the seq of
the event during which they happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .codec import decode, encode

MAGIC = "# unilab-trace 1"


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    origin: str
    target: int
    payload: bytes

    def line(self) -> str:
        return f"{self.seq} {self.kind} {self.origin} -> {self.target} {self.payload.hex()}"


@dataclass(frozen=True)
class Observation:
    seq: int
    action: str
    pid: int
    payload: bytes

    @property
    def value(self):
        return decode(self.payload)

    def line(self) -> str:
        return f"{self.seq} ! {self.action} {self.pid} {self.payload.hex()}"


def observation(seq: int, action: str, pid: int, value) -> Observation:
    return Observation(seq, action, pid, encode(value))


@dataclass
class Trace:
    meta: dict[str, str] = field(default_factory=dict)
    entries: list = field(default_factory=list)
    horizon_exceeded: bool = False
    held: int = 0
    _index: tuple = field(default=(-1, {}), repr=False, compare=False)

    def events(self) -> list[Event]:
        return [e for e in self.entries if isinstance(e, Event)]

    def observations(self, action: str | None = None) -> list[Observation]:
        size, index = self._index
        if size != len(self.entries):
            index = {None: [e for e in self.entries if isinstance(e, Observation)]}
            for obs in index[None]:
                index.setdefault(obs.action, []).append(obs)
            self._index = (len(self.entries), index)
        return list(index.get(action, ()))

    @property
    def n(self) -> int:
        return int(self.meta["n"])

    @property
    def t(self) -> int:
        return int(self.meta["t"])

    @property
    def byzantine(self) -> frozenset[int]:
        raw = self.meta.get("byzantine", "")
        return frozenset(int(x) for x in raw.split(",") if x)

    @property
    def correct(self) -> list[int]:
        byz = self.byzantine
        return [p for p in range(self.n) if p not in byz]

    def dumps(self) -> str:
        lines = [MAGIC]
        lines += [f"# {k}={v}" for k, v in self.meta.items()]
        lines += [e.line() for e in self.entries]
        lines.append(f"# held={self.held} horizon-exceeded={int(self.horizon_exceeded)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Trace":
        lines = text.splitlines()
        if not lines or lines[0].strip() != MAGIC:
            raise ValueError("not a unilab trace")
        trace = cls()
        for lineno, raw in enumerate(lines[1:], start=2):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("held="):
                    parts = dict(p.split("=", 1) for p in body.split())
                    trace.held = int(parts["held"])
                    trace.horizon_exceeded = parts.get("horizon-exceeded") == "1"
                elif "=" in body:
                    key, value = body.split("=", 1)
                    trace.meta[key] = value
                continue
            parts = line.split()
            try:
                if parts[1] == "!":
                    seq, _, action, pid, payload = (parts + [""])[:5]
                    trace.entries.append(
                        Observation(int(seq), action, int(pid), bytes.fromhex(payload)))
                else:
                    seq, kind, origin, arrow, target, payload = (parts + [""])[:6]
                    if arrow != "->":
                        raise ValueError("missing arrow")
                    trace.entries.append(
                        Event(int(seq), kind, origin, int(target), bytes.fromhex(payload)))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return trace

    def slice(self, start: int, stop: int) -> list[str]:
        return [e.line() for e in self.entries if start <= e.seq < stop]
