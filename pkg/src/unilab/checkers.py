"""Trace property checkers and verdict reports.

A checker is a pure function from a trace to a list of ``(seq, message)``
problems. Liveness checkers report ``inconclusive`` instead of
``violated`` when the run was cut short by the horizon or by held messages,
since the missing events might simply not have happened yet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agreement import LABEL as VWBA_LABEL
from .agreement import check_vwba_agreement, check_vwba_validity
from .registers import check_linearizable
from .rounds import LABEL as UNI_LABEL
from .rounds import check_no_phantom, check_unidirectional, round_numbers
from .trace import Trace
from .trinc import check_trinc_liveness, check_trinc_nonequivocation, check_trinc_soundness

PASS = "pass"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

_RANK = {PASS: 0, INCONCLUSIVE: 1, VIOLATED: 2}


def _end(trace: Trace) -> int:
    return trace.entries[-1].seq if trace.entries else 0


def _correct_senders(trace: Trace) -> dict[int, list[tuple[int, bytes]]]:
    correct = set(trace.correct)
    out: dict[int, list] = {}
    for obs in trace.observations("srb-broadcast"):
        if obs.pid in correct:
            s, k, m = obs.value
            out.setdefault(s, []).append((k, m))
    return out


def _deliveries(trace: Trace) -> dict[int, list]:
    correct = set(trace.correct)
    out: dict[int, list] = {p: [] for p in sorted(correct)}
    for obs in trace.observations("deliver"):
        if obs.pid in correct:
            out[obs.pid].append((obs.seq,) + tuple(obs.value))
    return out


def srb_validity(trace: Trace):
    got = {p: {(s, k, m) for _, s, k, m in ds} for p, ds in _deliveries(trace).items()}
    problems = []
    for s, sent in sorted(_correct_senders(trace).items()):
        for k, m in sent:
            for p, have in got.items():
                if (s, k, m) not in have:
                    problems.append((_end(trace), f"p{p} never delivered ({k}, {m!r}) from p{s}"))
    return problems


def srb_totality(trace: Trace):
    got = {p: {(s, k, m) for _, s, k, m in ds} for p, ds in _deliveries(trace).items()}
    everyone = set().union(*got.values()) if got else set()
    problems = []
    for s, k, m in sorted(everyone):
        for p, have in got.items():
            if (s, k, m) not in have:
                problems.append((_end(trace), f"p{p} never delivered ({k}, {m!r}) from p{s}"))
    return problems


def srb_sequencing(trace: Trace):
    problems = []
    for p, ds in _deliveries(trace).items():
        nxt: dict[int, int] = {}
        for seq, s, k, _ in ds:
            want = nxt.get(s, 1)
            if k != want:
                problems.append((seq, f"p{p} delivered index {k} from p{s}, expected {want}"))
            nxt[s] = k + 1
    return problems


def srb_integrity(trace: Trace):
    senders = set(trace.correct)
    broadcast: set = set()
    problems = []
    for obs in trace.observations():
        if obs.action == "srb-broadcast" and obs.pid in senders:
            broadcast.add(tuple(obs.value))
        elif obs.action == "deliver" and obs.pid in senders:
            s, k, m = obs.value
            if s in senders and (s, k, m) not in broadcast:
                problems.append((obs.seq, f"p{obs.pid} delivered ({k}, {m!r}) never broadcast by p{s}"))
    return problems


def srb_agreement(trace: Trace):
    first: dict[tuple[int, int], tuple[int, bytes]] = {}
    problems = []
    for p, ds in _deliveries(trace).items():
        for seq, s, k, m in ds:
            if (s, k) in first and first[(s, k)][1] != m:
                q, other = first[(s, k)]
                problems.append((seq, f"p{p} delivered {m!r} and p{q} delivered {other!r} "
                                      f"at index {k} from p{s}"))
            first.setdefault((s, k), (p, m))
    return problems


def srb_l1_agreement(trace: Trace):
    correct = set(trace.correct)
    first: dict[tuple[int, int], tuple[int, bytes]] = {}
    problems = []
    for obs in trace.observations("l1"):
        if obs.pid not in correct:
            continue
        s, k, m = obs.value
        if (s, k) in first and first[(s, k)][1] != m:
            problems.append((obs.seq, f"p{obs.pid} and p{first[(s, k)][0]} compiled L1 proofs "
                                      f"for different values at index {k}"))
        first.setdefault((s, k), (obs.pid, m))
    return problems


def _round_labels(trace: Trace) -> list[str]:
    labels = []
    for obs in trace.observations("round-send"):
        if obs.value[0] not in labels:
            labels.append(obs.value[0])
    return labels


def violating_pairs(trace: Trace) -> dict[tuple[str, int], list[tuple[int, int]]]:
    out = {}
    for label in _round_labels(trace):
        for r in round_numbers(trace, label):
            pairs = check_unidirectional(trace, r, label)
            if pairs:
                out[(label, r)] = pairs
    return out


def unidirectional(trace: Trace):
    problems = []
    for (label, r), pairs in violating_pairs(trace).items():
        for p, q in pairs:
            problems.append((_end(trace), f"{label} round {r}: p{p} and p{q} missed each other"))
    return problems


def no_phantom(trace: Trace):
    problems = []
    for label in _round_labels(trace) or [UNI_LABEL]:
        problems += [(_end(trace), msg) for msg in check_no_phantom(trace, label)]
    return problems


def rounds_finish(trace: Trace):
    """Every correct process that started a round finished it."""
    correct = set(trace.correct)
    started = {(o.pid, o.value[0], o.value[1]) for o in trace.observations("round-send")}
    done = {(o.pid, o.value[0], o.value[1]) for o in trace.observations("round")}
    return [(_end(trace), f"p{p} never finished {label} round {r}")
            for p, label, r in sorted(started - done) if p in correct]


def eventual_delivery(trace: Trace):
    """Every non-held message between correct processes was delivered."""
    correct = set(trace.correct)
    outstanding: dict[tuple, int] = {}
    for entry in trace.entries:
        if hasattr(entry, "action"):
            if entry.action in ("send", "held") and entry.pid in correct:
                dst, payload = entry.value
                if dst in correct:
                    key = (entry.pid, dst, payload)
                    step = 1 if entry.action == "send" else -1
                    outstanding[key] = outstanding.get(key, 0) + step
        elif entry.kind == "MessageDeliver":
            key = (int(entry.origin), entry.target, entry.payload)
            if key in outstanding:
                outstanding[key] -= 1
    return [(_end(trace), f"{n} message(s) p{s} -> p{d} never delivered")
            for (s, d, _), n in sorted(outstanding.items()) if n > 0]


def linearizable(trace: Trace):
    return [(_end(trace), msg) for msg in check_linearizable(trace)]


def vwba_liveness(trace: Trace):
    correct = set(trace.correct)
    decided = {o.pid for o in trace.observations("decide")}
    started = {o.pid for o in trace.observations("round-send") if o.value[0] == VWBA_LABEL}
    return [(_end(trace), f"p{p} never decided") for p in sorted(started - decided)
            if p in correct]


@dataclass(frozen=True)
class Checker:
    name: str
    fn: object
    liveness: bool = False
    doc: str = ""


CHECKERS = {c.name: c for c in [
    Checker("srb-validity", srb_validity, True, "correct sender's messages reach all correct"),
    Checker("srb-totality", srb_totality, True, "one correct delivery implies all"),
    Checker("srb-sequencing", srb_sequencing, False, "gapless indices per sender"),
    Checker("srb-integrity", srb_integrity, False, "correct sender broadcast what is delivered"),
    Checker("srb-agreement", srb_agreement, False, "no two values delivered at one index"),
    Checker("srb-l1-agreement", srb_l1_agreement, False, "no conflicting L1 proofs"),
    Checker("unidirectional", unidirectional, False, "no pair of correct senders misses both ways"),
    Checker("no-phantom", no_phantom, False, "received payloads were really sent"),
    Checker("rounds-finish", rounds_finish, True, "every started round finishes"),
    Checker("vwba-agreement", check_vwba_agreement, False, "no two different firm decisions"),
    Checker("vwba-validity", check_vwba_validity, True, "unanimous failure-free runs decide input"),
    Checker("vwba-liveness", vwba_liveness, True, "every correct process decides"),
    Checker("trinc-nonequivocation", check_trinc_nonequivocation, False,
            "one message per counter per verifier"),
    Checker("trinc-liveness", check_trinc_liveness, True, "attestations stored everywhere"),
    Checker("trinc-soundness", check_trinc_soundness, False, "stored attestations were issued"),
    Checker("eventual-delivery", eventual_delivery, True, "non-held messages are delivered"),
    Checker("linearizable", linearizable, False, "register reads match appends"),
]}


@dataclass
class Witness:
    """Enough to replay a violation: scenario text, seed, schedule, trace excerpt."""

    scenario: str
    seed: int
    schedule: tuple | None
    excerpt: list[str]


@dataclass
class Verdict:
    name: str
    status: str
    problems: list[str] = field(default_factory=list)
    witness: Witness | None = None

    def line(self) -> str:
        extra = f" ({len(self.problems)} problem(s); first: {self.problems[0]})" if self.problems else ""
        return f"{self.name}: {self.status}{extra}"


@dataclass
class PropertyReport:
    verdicts: dict[str, Verdict] = field(default_factory=dict)

    @property
    def status(self) -> str:
        worst = PASS
        for v in self.verdicts.values():
            if _RANK[v.status] > _RANK[worst]:
                worst = v.status
        return worst

    @property
    def exit_code(self) -> int:
        return {PASS: 0, VIOLATED: 1, INCONCLUSIVE: 2}[self.status]

    def violated(self) -> list[str]:
        return [name for name, v in self.verdicts.items() if v.status == VIOLATED]

    def merge(self, other: "PropertyReport") -> None:
        for name, v in other.verdicts.items():
            mine = self.verdicts.get(name)
            if mine is None or _RANK[v.status] > _RANK[mine.status]:
                self.verdicts[name] = v

    def lines(self) -> list[str]:
        return [v.line() for v in self.verdicts.values()]


def unknown_properties(names) -> list[str]:
    return [n for n in names if n not in CHECKERS]


def evaluate(trace: Trace, names, scenario: str = "", seed: int = 0,
             schedule: tuple | None = None) -> PropertyReport:
    """Run the named checkers; violations carry a witness."""
    report = PropertyReport()
    cut_short = trace.horizon_exceeded or trace.held > 0
    for name in names:
        checker = CHECKERS[name]
        found = checker.fn(trace)
        if not found:
            report.verdicts[name] = Verdict(name, PASS)
            continue
        messages = [msg for _, msg in found]
        if checker.liveness and cut_short:
            report.verdicts[name] = Verdict(name, INCONCLUSIVE, messages)
            continue
        seq = found[0][0]
        excerpt = trace.slice(max(0, seq - 20), seq + 1)
        report.verdicts[name] = Verdict(name, VIOLATED, messages,
                                        Witness(scenario, seed, schedule, excerpt))
    return report
