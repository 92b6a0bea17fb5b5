"""TrInc-style trusted counters emulated over sequenced reliable broadcast.

Each process owns a Trinket whose attestations bind a strictly increasing
counter ``c`` to a message. Attesting broadcasts ``(c, m)`` on the owner's
SRB instance; every process stores a delivered attestation only if it
raises the highest counter seen from that owner. Checking is a lookup.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import encode, try_decode
from .kernel import Context
from .srb import SrbHost


@dataclass(frozen=True)
class Attestation:
    k: int
    c: int
    m: bytes


def attest_payload(c: int, m: bytes) -> bytes:
    return encode((c, bytes(m)))


def parse_attest_payload(data: bytes):
    msg = try_decode(data)
    if (isinstance(msg, tuple) and len(msg) == 2 and type(msg[0]) is int
            and isinstance(msg[1], bytes)):
        return msg
    return None


@dataclass
class TrinketState:
    owner: int
    k: int = 0
    last_c: int = 0


@dataclass
class VerifierState:
    C: dict
    store: dict

    @classmethod
    def empty(cls, n: int) -> "VerifierState":
        return cls({q: 0 for q in range(n)}, {q: frozenset() for q in range(n)})


class TrincProcess(SrbHost):
    """Trinket owner and verifier in one.

    ``script`` lists ``(c, m)`` attest calls made at start, or every
    ``interval`` time units when ``interval`` > 0.
    """

    def __init__(self, pid: int, n: int, t: int, script=(), interval: int = 0):
        super().__init__(pid, n, t)
        self.trinket = TrinketState(pid)
        self.verifier = VerifierState.empty(n)
        self.script = [(int(c), bytes(m)) for c, m in script]
        self.interval = interval
        self.issued: list[Attestation] = []

    def on_start(self, ctx):
        for i, (c, m) in enumerate(self.script):
            if self.interval:
                ctx.schedule(encode(("attest", i)), at=i * self.interval)
            else:
                self.attest(ctx, c, m)

    def on_step(self, ctx, payload):
        msg = try_decode(payload)
        if isinstance(msg, tuple) and msg[:1] == ("attest",):
            c, m = self.script[msg[1]]
            self.attest(ctx, c, m)

    def attest(self, ctx: Context, c: int, m: bytes) -> Attestation | None:
        """Bind ``m`` to counter ``c``; None unless ``c`` exceeds every counter used."""
        state = self.trinket
        if c <= state.last_c:
            ctx.observe("attest-null", (c, bytes(m)))
            return None
        state.last_c = c
        k = self.broadcast(ctx, attest_payload(c, m))
        state.k = k
        att = Attestation(k, c, bytes(m))
        self.issued.append(att)
        ctx.observe("attest", (k, c, bytes(m)))
        return att

    def on_deliver(self, ctx, sender, k, payload):
        parsed = parse_attest_payload(payload)
        if parsed is None:
            return
        c, m = parsed
        v = self.verifier
        if v.C[sender] < c:
            v.store[sender] = v.store[sender] | {Attestation(k, c, m)}
            v.C[sender] = c
            ctx.observe("store", (sender, k, c, m))

    def check_attestation(self, a: Attestation, q: int) -> bool:
        return a in self.verifier.store.get(q, ())


def check_trinc_nonequivocation(trace) -> list[tuple[int, str]]:
    correct = set(trace.correct)
    seen: dict[tuple[int, int, int], bytes] = {}
    problems = []
    for obs in trace.observations("store"):
        if obs.pid not in correct:
            continue
        q, _, c, m = obs.value
        key = (obs.pid, q, c)
        if key in seen and seen[key] != m:
            problems.append((obs.seq, f"p{obs.pid} stored two messages from p{q} at counter {c}"))
        seen.setdefault(key, m)
    return problems


def check_trinc_liveness(trace) -> list[tuple[int, str]]:
    correct = set(trace.correct)
    stored = {(o.pid,) + tuple(o.value) for o in trace.observations("store")}
    end = trace.entries[-1].seq if trace.entries else 0
    problems = []
    for obs in trace.observations("attest"):
        if obs.pid not in correct:
            continue
        k, c, m = obs.value
        for p in sorted(correct):
            if (p, obs.pid, k, c, m) not in stored:
                problems.append((end, f"p{p} never stored attestation {k}/{c} of p{obs.pid}"))
    return problems


def check_trinc_soundness(trace) -> list[tuple[int, str]]:
    correct = set(trace.correct)
    issued = {(o.pid,) + tuple(o.value) for o in trace.observations("attest")}
    problems = []
    for obs in trace.observations("store"):
        q, k, c, m = obs.value
        if obs.pid in correct and q in correct and (q, k, c, m) not in issued:
            problems.append((obs.seq, f"p{obs.pid} stored {k}/{c} never attested by p{q}"))
    return problems
