"""Deterministic discrete-event kernel.

The kernel hosts one state machine per process and three kinds of events:

* ``MessageDeliver``: a point-to-point message reaching its target.
* ``ObjectOpApply``: a register read taking effect. Appends are applied
  inside the step that issues them; reads are separate events so the
  adversary controls how they interleave with other processes' appends.
* ``ProcessStep``: a local step (start-up, external invocation, scripted
  Byzantine action).

Messages and reads are routed through a :class:`DeliveryPolicy`. Links are
FIFO. Among enabled events the kernel always picks the lowest
``(enabled_at, issue order)``, so a run is a pure function of its inputs
and seed.
"""

from __future__ import annotations

import copy
import heapq
import random
from collections import deque
from dataclasses import dataclass, is_dataclass
from enum import Enum

from .codec import encode, try_decode
from .crypto import Signature, SignatureOracle
from .errors import IdentityViolation, InvalidParams
from .registers import RegisterBank
from .trace import Event, Trace, observation

ALL = "all"
START = b"start"
RB_SIGNER = -1


class EventKind(str, Enum):
    MESSAGE = "MessageDeliver"
    OBJECT_OP = "ObjectOpApply"
    STEP = "ProcessStep"

    __hash__ = str.__hash__  # Enum's hash is pure Python and sits on hot paths


@dataclass(frozen=True)
class SystemParams:
    """``n`` processes, at most ``t`` Byzantine (the paper's ``f``)."""

    n: int
    t: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams(f"n must be positive, got {self.n}")
        if not 0 <= self.t < self.n:
            raise InvalidParams(f"need 0 <= t < n, got n={self.n} t={self.t}")

    @property
    def f(self) -> int:
        return self.t

    def require_majority(self) -> None:
        if self.n < 2 * self.t + 1:
            raise InvalidParams(f"protocol needs n >= 2t+1, got n={self.n} t={self.t}")


# delivery actions

@dataclass(frozen=True)
class DeliverNow:
    pass


@dataclass(frozen=True)
class DelayUntil:
    index: int


@dataclass(frozen=True)
class HoldPastHorizon:
    pass


_DEFERRED = float("inf")
_HELD = None

MESSAGE_AND_OBJECT = frozenset({EventKind.MESSAGE, EventKind.OBJECT_OP})


@dataclass(frozen=True)
class Rule:
    """Route events on matching links.

    ``src``/``dst`` are process sets (``None`` matches anyone). For reads the
    source is the owner of the object being read and the destination is the
    reader. ``start``/``stop`` bound the logical time at which the event is
    issued.
    """

    action: object
    src: frozenset | None = None
    dst: frozenset | None = None
    kinds: frozenset = MESSAGE_AND_OBJECT
    start: int = 0
    stop: int | None = None

    def matches(self, kind: EventKind, src: int, dst: int, now: int) -> bool:
        if kind not in self.kinds:
            return False
        if self.src is not None and src not in self.src:
            return False
        if self.dst is not None and dst not in self.dst:
            return False
        if now < self.start or (self.stop is not None and now >= self.stop):
            return False
        return True


@dataclass(frozen=True)
class DeliveryPolicy:
    """Ordered rules plus randomized jitter for unmatched events.

    ``HoldPastHorizon`` on a message means it is never delivered in this
    run. Register reads are wait-free, so a hold rule cannot suppress them;
    a held read is instead deferred until nothing else is runnable.
    """

    rules: tuple = ()
    seed: int = 0
    horizon: int = 100_000
    jitter: int = 0

    def route(self, kind: EventKind, src: int, dst: int, now: int, rng: random.Random):
        for rule in self.rules:
            if rule.matches(kind, src, dst, now):
                action = rule.action
                if isinstance(action, HoldPastHorizon):
                    return _HELD if kind is EventKind.MESSAGE else _DEFERRED
                if isinstance(action, DelayUntil):
                    return max(action.index, now + 1)
                return now + 1
        if self.jitter:
            return now + 1 + rng.randint(0, self.jitter)
        return now + 1


class Process:
    """Base class for protocol state machines and Byzantine scripts."""

    def __init__(self, pid: int):
        self.pid = pid

    def on_start(self, ctx: "Context") -> None:
        pass

    def on_step(self, ctx: "Context", payload: bytes) -> None:
        pass

    def on_message(self, ctx: "Context", src: int, payload: bytes) -> None:
        pass

    def on_read(self, ctx: "Context", owner: int, entries: tuple) -> None:
        pass

    def fingerprint(self):
        return freeze(vars(self))

    def clone(self) -> "Process":
        """Independent copy for exploration forks."""
        other = copy.copy(self)
        for name, value in vars(self).items():
            setattr(other, name, copy_state(value))
        return other


_ATOMS = frozenset({int, bytes, str, bool, float})


def copy_state(value):
    """Deep copy that shares immutable leaves (atoms, frozen dataclasses, frozensets)."""
    kind = type(value)
    if value is None or kind in _ATOMS or kind is frozenset:
        return value
    if kind is list:
        return [copy_state(v) for v in value]
    if kind is dict:
        return {k: copy_state(v) for k, v in value.items()}
    if kind is set:
        return set(value)
    if kind is tuple:
        return tuple(copy_state(v) for v in value)
    if is_dataclass(value) and value.__dataclass_params__.frozen:
        return value
    return copy.deepcopy(value)


def freeze(value):
    """Hashable, order-insensitive-for-sets view of plain Python state."""
    if value is None or type(value) in _ATOMS:
        return value
    if is_dataclass(value) and value.__dataclass_params__.frozen:
        return value
    if isinstance(value, dict):
        return frozenset((k, freeze(v)) for k, v in value.items())
    if isinstance(value, (set, frozenset)):
        return frozenset(freeze(v) for v in value)
    if isinstance(value, (list, tuple, deque)):
        return tuple(freeze(v) for v in value)
    if isinstance(value, Enum):
        return value.value
    if hasattr(value, "__dict__") and not isinstance(value, type):
        return (type(value).__name__, freeze(vars(value)))
    return value


class _Pending:
    __slots__ = ("seq", "kind", "origin", "target", "payload", "enabled")

    def __init__(self, seq, kind, origin, target, payload, enabled):
        self.seq = seq
        self.kind = kind
        self.origin = origin
        self.target = target
        self.payload = payload
        self.enabled = enabled

    def key(self):
        return (self.kind.value, self.origin, self.target, self.payload)


class Context:
    """The capabilities a process has while handling one event."""

    def __init__(self, sim: "Simulator", pid: int):
        self._sim = sim
        self.pid = pid

    @property
    def params(self) -> SystemParams:
        return self._sim.params

    @property
    def n(self) -> int:
        return self._sim.params.n

    @property
    def t(self) -> int:
        return self._sim.params.t

    @property
    def now(self) -> int:
        return self._sim.now

    def send(self, to, payload: bytes) -> None:
        dests = range(self.n) if to == ALL else [to]
        for dst in dests:
            self._sim._send(self.pid, dst, bytes(payload))

    def send_all(self, payload: bytes) -> None:
        self.send(ALL, payload)

    def rb_broadcast(self, payload: bytes) -> None:
        """Reliable broadcast: one sealed payload, enqueued to every process."""
        sim = self._sim
        seq = sim._rb_seq.get(self.pid, 0) + 1
        sim._rb_seq[self.pid] = seq
        body = encode(("rb", self.pid, seq, payload))
        seal = sim.oracle.sign(RB_SIGNER, body)
        self.send(ALL, encode(("rb", self.pid, seq, payload, seal.wire())))

    def unseal(self, data: bytes):
        """Return ``(origin, seq, payload)`` for a genuine reliable-broadcast message."""
        msg = try_decode(data)
        if not (isinstance(msg, tuple) and len(msg) == 5 and msg[0] == "rb"):
            return None
        _, origin, seq, payload, seal = msg
        if not isinstance(payload, bytes):
            return None
        try:
            sig = Signature.from_wire(seal)
        except (TypeError, ValueError):
            return None
        if not self._sim.oracle.verify(RB_SIGNER, encode(("rb", origin, seq, payload)), sig):
            return None
        return origin, seq, payload

    def append(self, round: int, payload: bytes, owner: int | None = None) -> None:
        self._sim._append(self.pid, self.pid if owner is None else owner, round, bytes(payload))

    def read(self, owner: int) -> None:
        self._sim._request_read(self.pid, owner)

    def sign(self, msg: bytes, as_: int | None = None) -> Signature:
        signer = self.pid if as_ is None else as_
        if signer != self.pid:
            raise IdentityViolation(f"process {self.pid} cannot sign as {signer}")
        return self._sim.oracle.sign(signer, msg, caller=self.pid)

    def verify(self, signer: int, msg: bytes, sig) -> bool:
        return self._sim.oracle.verify(signer, msg, sig)

    @property
    def memo(self) -> dict:
        return self._sim.memo

    def observe(self, action: str, value) -> None:
        sim = self._sim
        obs = observation(sim._current_seq, action, self.pid, value)
        sim.trace.entries.append(obs)
        sim._history[self.pid] = hash((sim._history.get(self.pid, 0), action, obs.payload))

    def schedule(self, payload: bytes, at: int | None = None) -> None:
        """Enqueue a local step for this process at logical time ``at``."""
        self._sim._enqueue_step(self.pid, bytes(payload), at)


class Simulator:
    def __init__(self, params: SystemParams, policy: DeliveryPolicy,
                 processes: dict[int, Process], byzantine=frozenset(),
                 meta: dict | None = None, exhaustive: bool = False):
        self.params = params
        self.policy = policy
        self.procs = processes
        self.byzantine = frozenset(byzantine)
        self.exhaustive = exhaustive
        self.oracle = SignatureOracle(policy.seed)
        self.registers = RegisterBank(params.n)
        self.rng = random.Random(policy.seed)
        self.now = 0
        self.steps = 0
        self.held = 0
        self._issue = 0
        self._current_seq = -1
        self._links: dict[tuple, deque] = {}
        self._tails: dict[tuple, object] = {}
        self._ready: list = []
        self._deferred: list = []
        self._pending_reads: set[tuple[int, int]] = set()
        self._rb_seq: dict[int, int] = {}
        # per-process digest of protocol-level observations
        self._history: dict[int, int] = {}
        # parse/validation cache shared by forks; results depend only on bytes
        self.memo: dict = {}
        # forks share process objects until one is about to change
        self._owned: set[int] = set(processes)
        self._proc_fp: dict[int, object] = {}
        info = {"n": str(params.n), "t": str(params.t),
                "byzantine": ",".join(str(p) for p in sorted(self.byzantine))}
        info.update(meta or {})
        self.trace = Trace(meta=info)
        for pid in sorted(processes):
            self._enqueue_step(pid, START, 0)

    # event queue

    def _enqueue(self, kind: EventKind, origin: int, target: int, payload: bytes, enabled):
        link = (kind, origin, target)
        tail = self._tails.get(link, 0)
        if tail is _HELD or enabled is _HELD:
            enabled = _HELD
        else:
            enabled = max(enabled, tail)
        self._tails[link] = enabled
        item = _Pending(self._issue, kind, origin, target, payload, enabled)
        self._issue += 1
        queue = self._links.get(link)
        if queue is None:
            queue = self._links[link] = deque()
        queue.append(item)
        if enabled is _HELD:
            self.held += 1
        elif len(queue) == 1:
            self._push_head(link, item)
        return item

    def _push_head(self, link, item: _Pending) -> None:
        if self.exhaustive or item.enabled is _HELD:
            return
        if item.enabled == _DEFERRED:
            heapq.heappush(self._deferred, (item.seq, link))
        else:
            heapq.heappush(self._ready, (item.enabled, item.seq, link))

    def _send(self, src: int, dst: int, payload: bytes) -> None:
        if not 0 <= dst < self.params.n:
            return
        self.trace.entries.append(
            observation(self._current_seq, "send", src, (dst, payload)))
        enabled = self.policy.route(EventKind.MESSAGE, src, dst, self.now, self.rng)
        item = self._enqueue(EventKind.MESSAGE, src, dst, payload, enabled)
        if item.enabled is _HELD:
            self.trace.entries.append(
                observation(self._current_seq, "held", src, (dst, payload)))

    def _enqueue_step(self, pid: int, payload: bytes, at: int | None) -> None:
        base = self.now if self.steps == 0 else self.now + 1
        enabled = base if at is None else max(at, base)
        self._enqueue(EventKind.STEP, pid, pid, payload, enabled)

    def _append(self, caller: int, owner: int, round: int, payload: bytes) -> None:
        self.registers.append(caller, owner, round, payload)
        self.trace.entries.append(
            observation(self._current_seq, "append", owner, (round, payload)))
        for reader in range(self.params.n):
            if reader != owner:
                self._request_read(reader, owner)

    def _request_read(self, reader: int, owner: int) -> None:
        if not 0 <= owner < self.params.n:
            return
        key = (reader, owner)
        if key in self._pending_reads:
            return
        self._pending_reads.add(key)
        enabled = self.policy.route(EventKind.OBJECT_OP, owner, reader, self.now, self.rng)
        self._enqueue(EventKind.OBJECT_OP, owner, reader, b"read", enabled)

    # stepping

    def candidates(self) -> list[_Pending]:
        """Runnable link heads in issue order (used by exhaustive exploration)."""
        heads = [q[0] for q in self._links.values() if q and q[0].enabled is not _HELD]
        heads.sort(key=lambda item: item.seq)
        return heads

    def has_pending(self) -> bool:
        if self.exhaustive:
            return bool(self.candidates())
        return bool(self._ready or self._deferred)

    def _pick(self):
        if self._ready:
            enabled, _, link = heapq.heappop(self._ready)
            if enabled > self.now:
                self.now = enabled
            return link
        if self._deferred:
            _, link = heapq.heappop(self._deferred)
            return link
        return None

    def step(self, choice: int | None = None) -> Event | None:
        """Dispatch one event; returns it, or None when nothing is runnable."""
        if self.exhaustive:
            heads = self.candidates()
            if not heads:
                return None
            item = heads[choice or 0]
            link = (item.kind, item.origin, item.target)
        else:
            link = self._pick()
            if link is None:
                return None
        queue = self._links[link]
        item = queue.popleft()
        if queue:
            self._push_head(link, queue[0])
        return self._dispatch(item)

    def _dispatch(self, item: _Pending) -> Event:
        seq = self.steps
        self.steps += 1
        self._current_seq = seq
        origin = f"o{item.origin}" if item.kind is EventKind.OBJECT_OP else str(item.origin)
        event = Event(seq, item.kind.value, origin, item.target, item.payload)
        self.trace.entries.append(event)
        proc = self._own(item.target)
        ctx = Context(self, item.target)
        if item.kind is EventKind.MESSAGE:
            if proc is not None:
                proc.on_message(ctx, item.origin, item.payload)
        elif item.kind is EventKind.OBJECT_OP:
            self._pending_reads.discard((item.target, item.origin))
            entries = self.registers.read(item.target, item.origin)
            self.trace.entries.append(
                observation(seq, "read", item.target, (item.origin, len(entries))))
            if proc is not None:
                proc.on_read(ctx, item.origin, entries)
        elif proc is not None:
            if item.payload == START:
                proc.on_start(ctx)
            else:
                proc.on_step(ctx, item.payload)
        self.now += 1
        return event

    def _own(self, pid: int) -> Process | None:
        proc = self.procs.get(pid)
        if proc is not None and pid not in self._owned:
            proc = self.procs[pid] = proc.clone()
            self._owned.add(pid)
        self._proc_fp.pop(pid, None)
        return proc

    def run_until_quiescent(self) -> Trace:
        horizon = self.policy.horizon
        while self.has_pending():
            if self.steps >= horizon:
                self.trace.horizon_exceeded = True
                break
            self.step()
        self.trace.held = self.held
        return self.trace

    # exploration support

    def fingerprint(self) -> int:
        cache = self._proc_fp
        for p in self.procs:
            if p not in cache:
                cache[p] = self.procs[p].fingerprint()
        procs = tuple(cache[p] for p in sorted(self.procs))
        pending = frozenset(
            (link, tuple(i.payload for i in q if i.enabled is not _HELD))
            for link, q in self._links.items() if q)
        return hash((procs, pending, self.registers.fingerprint(), self.oracle.fingerprint(),
                     tuple(sorted(self._rb_seq.items())), tuple(sorted(self._history.items()))))

    def fork(self) -> "Simulator":
        other = Simulator.__new__(Simulator)
        other.__dict__.update(self.__dict__)
        other.procs = dict(self.procs)
        other._owned = set()
        self._owned = set()
        other._proc_fp = dict(self._proc_fp)
        other.oracle = self.oracle.fork()
        other.registers = self.registers.fork()
        if self.exhaustive and not self.policy.jitter:
            other.rng = self.rng  # only jitter draws from it
        else:
            other.rng = random.Random()
            other.rng.setstate(self.rng.getstate())
        other._links = {k: deque(v) for k, v in self._links.items()}
        other._tails = dict(self._tails)
        other._ready = list(self._ready)
        other._deferred = list(self._deferred)
        other._pending_reads = set(self._pending_reads)
        other._rb_seq = dict(self._rb_seq)
        other._history = dict(self._history)
        other.trace = Trace(dict(self.trace.meta), list(self.trace.entries),
                            self.trace.horizon_exceeded, self.trace.held)
        return other


def new_sim(params: SystemParams, policy: DeliveryPolicy | None = None,
            behaviors: dict[int, Process] | None = None, protocol=None,
            meta: dict | None = None, exhaustive: bool = False) -> Simulator:
    """Build a simulator.

    ``behaviors`` maps Byzantine process ids to their scripts; every other
    process is built by ``protocol(pid)`` (an idle :class:`Process` when no
    protocol is given).
    """
    policy = policy or DeliveryPolicy()
    behaviors = behaviors or {}
    for pid in behaviors:
        if not 0 <= pid < params.n:
            raise InvalidParams(f"process id {pid} out of range for n={params.n}")
    if len(behaviors) > params.t:
        raise InvalidParams(f"{len(behaviors)} Byzantine processes exceed budget t={params.t}")
    factory = protocol or Process
    procs = {}
    for pid in range(params.n):
        procs[pid] = behaviors[pid] if pid in behaviors else factory(pid)
    return Simulator(params, policy, procs, frozenset(behaviors), meta, exhaustive)
