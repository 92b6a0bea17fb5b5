"""Exhaustive exploration of delivery interleavings.

Depth-first search over every choice of which pending event runs next.
States are merged by fingerprint (process states, pending events,
registers, signatures issued and per-process observation histories), so
the search expands each distinct state once. Properties are checked at
every terminal state. The reported schedule count is the number of
complete paths through the explored state graph: every interleaving when
reduction is off, one or more representatives per equivalence class of
interleavings when it is on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .checkers import PropertyReport, evaluate
from .errors import BoundExceeded
from .kernel import EventKind, Simulator
from .scenario import ScenarioConfig, build_sim, expand_behaviors


@dataclass
class Exploration:
    states: int = 0
    terminals: int = 0
    schedules: int = 0
    variants: int = 0
    report: PropertyReport = field(default_factory=PropertyReport)
    witness_schedule: tuple | None = None
    witness_scenario: str = ""

    def merge(self, other: "Exploration") -> None:
        self.states += other.states
        self.terminals += other.terminals
        self.schedules += other.schedules
        self.report.merge(other.report)
        if self.witness_schedule is None:
            self.witness_schedule = other.witness_schedule
            self.witness_scenario = other.witness_scenario


def _link(item) -> tuple:
    return (item.kind, item.origin, item.target)


def independent(a: tuple, b: tuple) -> bool:
    """Whether dispatching link heads ``a`` and ``b`` commutes in every state.

    Each event only touches its target's process state, the target's own
    log and links leaving the target. Two events conflict when they share a
    target, or when one is a read of the log the other's target may append to.
    """
    if a[2] == b[2]:
        return False
    if a[0] is EventKind.OBJECT_OP and a[1] == b[2]:
        return False
    if b[0] is EventKind.OBJECT_OP and b[1] == a[2]:
        return False
    return True


def _time_sensitive(sim: Simulator) -> bool:
    return any(rule.start > 0 or rule.stop is not None for rule in sim.policy.rules)


def explore(sim: Simulator, properties, bound: int, scenario: str = "",
            seed: int = 0, reduce: bool = True) -> Exploration:
    """Explore every interleaving reachable from ``sim`` (which must be exhaustive).

    With ``reduce`` the search carries sleep sets: after exploring event
    ``e`` from a state, sibling branches skip ``e`` until something that
    conflicts with it runs. Every reachable state is still visited, but
    most redundant orderings of independent events are not re-executed.
    The reduction is turned off for policies with time-windowed rules,
    since there the step at which a message is sent can change its fate.
    """
    if not sim.exhaustive:
        raise ValueError("exploration needs a simulator built with exhaustive=True")
    reduce = reduce and not _time_sensitive(sim)
    horizon = sim.policy.horizon
    result = Exploration()
    root = sim.fingerprint()
    parent: dict[int, tuple[int, int] | None] = {root: None}
    children: dict[int, list[int]] = {}
    asleep: dict[int, frozenset] = {}
    # frames: fingerprint, simulator, branches left, sleep set
    stack = []

    def path_to(fp: int) -> tuple:
        out = []
        while parent[fp] is not None:
            fp, choice = parent[fp]
            out.append(choice)
        return tuple(reversed(out))

    def visit(fp: int, node: Simulator, sleep: frozenset) -> None:
        heads = node.candidates()
        if fp in asleep:
            if asleep[fp] <= sleep:
                return
            todo = [(i, _link(h)) for i, h in enumerate(heads) if _link(h) in asleep[fp] - sleep]
            asleep[fp] = asleep[fp] & sleep
        else:
            asleep[fp] = sleep
            children[fp] = []
            if not heads or node.steps >= horizon:
                asleep[fp] = frozenset()
                result.terminals += 1
                trace = node.trace
                trace.horizon_exceeded = bool(heads)
                trace.held = node.held
                schedule = path_to(fp)
                report = evaluate(trace, properties, scenario, seed, schedule)
                if report.violated() and result.witness_schedule is None:
                    result.witness_schedule = schedule
                    result.witness_scenario = scenario
                result.report.merge(report)
                return
            todo = [(i, _link(h)) for i, h in enumerate(heads) if _link(h) not in sleep]
        if todo:
            stack.append([fp, node, todo, set(sleep)])

    visit(root, sim, frozenset())
    while stack:
        frame = stack[-1]
        fp, node, todo, sleep = frame
        if not todo:
            stack.pop()
            continue
        choice, link = todo.pop(0)
        child = node if not todo else node.fork()
        child.step(choice)
        cfp = child.fingerprint()
        children[fp].append(cfp)
        if cfp not in parent:
            parent[cfp] = (fp, choice)
            if len(parent) > bound:
                raise BoundExceeded(bound)
        if reduce:
            child_sleep = frozenset(z for z in sleep if independent(z, link))
            sleep.add(link)
        else:
            child_sleep = frozenset()
        visit(cfp, child, child_sleep)

    result.states = len(parent)
    result.schedules = _count_paths(root, children)
    return result


def _count_paths(root: int, children: dict[int, list[int]]) -> int:
    """Number of root-to-terminal paths in the explored state graph."""
    count: dict[int, int] = {}
    stack = [(root, False)]
    while stack:
        fp, expanded = stack.pop()
        if fp in count:
            continue
        kids = children.get(fp, [])
        if not kids:
            count[fp] = 1
            continue
        if expanded:
            count[fp] = sum(count[k] for k in kids)
            continue
        stack.append((fp, True))
        for k in kids:
            if k not in count:
                stack.append((k, False))
    return count[root]


def enumerate_schedules(config: ScenarioConfig, bound: int, protocol: str | None = None,
                        properties=None, reduce: bool = True) -> Exploration:
    """Explore all delivery interleavings of one scenario.

    Alphabet behaviors are expanded first and every concrete script is
    explored; ``bound`` caps the total number of distinct states.
    """
    props = tuple(config.properties if properties is None else properties)
    total = Exploration()
    for variant in expand_behaviors(config):
        sim = build_sim(variant, protocol=protocol, exhaustive=True)
        part = explore(sim, props, bound - total.states, variant.text, variant.seed, reduce)
        total.merge(part)
        total.variants += 1
    return total
