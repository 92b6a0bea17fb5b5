"""Very weak Byzantine agreement from one unidirectional round.

Each process sends its input in a single round and decides its input if
every value it received equals it, ⊥ otherwise. Two correct processes with
different inputs cannot both decide: one of them hears the other.
"""

from __future__ import annotations

from .kernel import SystemParams, new_sim
from .rounds import RoundState, SwmrRoundProcess

BOTTOM = None
LABEL = "vwba"


def vwba_decide(v: bytes, received) -> bytes | None:
    """``v`` when every received value equals it, else ⊥ (None)."""
    for w in received:
        if w != v:
            return BOTTOM
    return v


class VwbaProcess(SwmrRoundProcess):
    def __init__(self, pid: int, n: int, value: bytes):
        super().__init__(pid, n, [value], label=LABEL)
        self.input = bytes(value)
        self.values: frozenset = frozenset({self.input})
        self.decision: bytes | None = None
        self.decided = False

    def received_hook(self, owner, rnd, payload):
        if rnd == 1 and not self.decided:
            self.values = self.values | {payload}

    def round_finished(self, ctx, state: RoundState):
        self.decision = vwba_decide(self.input, sorted(self.values))
        self.decided = True
        ctx.observe("decide", (self.input, self.decision))


def vwba_run(inputs: dict[int, bytes], n: int, t: int = 0, policy=None, behaviors=None):
    """Run one instance; returns ``({correct pid: decision}, trace)``."""
    params = SystemParams(n, t)
    sim = new_sim(params, policy, behaviors,
                  lambda pid: VwbaProcess(pid, n, inputs[pid]))
    trace = sim.run_until_quiescent()
    decisions = {}
    for obs in trace.observations("decide"):
        if obs.pid not in sim.byzantine:
            decisions[obs.pid] = obs.value[1]
    return decisions, trace


def check_vwba_agreement(trace) -> list[tuple[int, str]]:
    correct = set(trace.correct)
    firm: dict[int, bytes] = {}
    problems = []
    for obs in trace.observations("decide"):
        if obs.pid not in correct or obs.value[1] is BOTTOM:
            continue
        d = obs.value[1]
        for p, other in sorted(firm.items()):
            if other != d:
                problems.append((obs.seq, f"p{p} decided {other!r}, p{obs.pid} decided {d!r}"))
        firm[obs.pid] = d
    return problems


def check_vwba_validity(trace) -> list[tuple[int, str]]:
    """In failure-free runs with one common input, everyone decides it."""
    if trace.byzantine:
        return []
    sent = {o.pid: o.value[2] for o in trace.observations("round-send") if o.value[0] == LABEL}
    if len(set(sent.values())) != 1:
        return []
    (v,) = set(sent.values())
    decided = {o.pid: o.value[1] for o in trace.observations("decide")}
    end = trace.entries[-1].seq if trace.entries else 0
    problems = []
    for p in trace.correct:
        if p not in decided or decided[p] != v:
            problems.append((end, f"p{p} decided {decided.get(p, 'nothing')!r}, not {v!r}"))
    return problems
