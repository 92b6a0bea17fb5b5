"""Unidirectional rounds.

Two constructions plus one deliberately inadequate baseline:

* :class:`SwmrRoundProcess` appends ``(r, m)`` to its own log, then reads
  every other log. Whichever of two processes appended first is seen by the
  other, so every pair of correct senders has at least one-way delivery.
* :class:`RbF1RoundProcess` is the two-phase signed-forwarding protocol over
  reliable broadcast, valid for ``t = 1`` and ``n >= 3``.
* :class:`NaiveRbRoundProcess` finishes after ``n - t`` reliable-broadcast
  round messages. A partition schedule defeats it.

Every correct process records ``round-send`` when it sends and ``round``
when it finishes; :func:`check_unidirectional` audits those records.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .codec import decode, encode, try_decode
from .crypto import Signature
from .errors import DoubleSend, InvalidParams
from .kernel import Context, Process, SystemParams

LABEL = "uni"


@dataclass
class RoundState:
    pid: int
    r: int
    sent: bytes | None = None
    received: dict[int, bytes] = field(default_factory=dict)
    finished: bool = False


def _finish_record(label: str, state: RoundState) -> tuple:
    received = tuple(sorted(state.received.items()))
    return (label, state.r, state.sent, received)


class SwmrRounds:
    """Register bookkeeping shared by every protocol that runs rounds on logs.

    A round started with :meth:`start` appends the payload, then needs one
    read of each other process's log. Reads already in flight count, since
    they take effect after the append.
    """

    def __init__(self, pid: int, n: int):
        self.pid = pid
        self.n = n
        self.cursor = [0] * n
        self.waiting: dict = {}

    def start(self, ctx: Context, key, round_no: int, payload: bytes) -> bool:
        ctx.append(round_no, payload)
        need = {o for o in range(self.n) if o != self.pid}
        for owner in sorted(need):
            ctx.read(owner)
        if not need:
            return True
        self.waiting[key] = need
        return False

    def new_entries(self, owner: int, entries: tuple) -> tuple:
        fresh = entries[self.cursor[owner]:]
        self.cursor[owner] = len(entries)
        return fresh

    def mark_read(self, owner: int) -> list:
        done = []
        for key, need in list(self.waiting.items()):
            need.discard(owner)
            if not need:
                done.append(key)
                del self.waiting[key]
        return done

    def cancel(self, key) -> None:
        self.waiting.pop(key, None)

    def clone(self) -> "SwmrRounds":
        other = SwmrRounds.__new__(SwmrRounds)
        other.pid = self.pid
        other.n = self.n
        other.cursor = list(self.cursor)
        other.waiting = {k: set(v) for k, v in self.waiting.items()}
        return other

    def fingerprint(self) -> tuple:
        return (tuple(self.cursor),
                frozenset((k, frozenset(v)) for k, v in self.waiting.items()))


class SwmrRoundProcess(Process):
    """Sequential rounds over SWMR logs, one input payload per round."""

    def __init__(self, pid: int, n: int, inputs=(), label: str = LABEL):
        super().__init__(pid)
        self.n = n
        self.label = label
        self.inputs = [bytes(m) for m in inputs]
        self.rounds = SwmrRounds(pid, n)
        self.seen: dict[tuple[int, int], bytes] = {}
        self.state: RoundState | None = None
        self.history: list[RoundState] = []
        self.sent_rounds: set[int] = set()

    def on_start(self, ctx):
        if self.inputs:
            self.uni_round(ctx, 1, self.inputs[0])

    def uni_round(self, ctx: Context, r: int, m: bytes) -> None:
        if r in self.sent_rounds:
            raise DoubleSend(f"process {self.pid} already sent in round {r}")
        self.sent_rounds.add(r)
        state = RoundState(self.pid, r, m)
        state.received[self.pid] = m
        for (q, rr), payload in self.seen.items():
            if rr == r:
                state.received.setdefault(q, payload)
        self.state = state
        ctx.observe("round-send", (self.label, r, m))
        if self.rounds.start(ctx, r, r, m):
            self._finish(ctx)

    def on_read(self, ctx, owner, entries):
        for rnd, payload in self.rounds.new_entries(owner, entries):
            self.seen.setdefault((owner, rnd), payload)
            self.received_hook(owner, rnd, payload)
            if self.state is not None and not self.state.finished and rnd == self.state.r:
                self.state.received.setdefault(owner, payload)
        for _ in self.rounds.mark_read(owner):
            self._finish(ctx)

    def received_hook(self, owner: int, rnd: int, payload: bytes) -> None:
        pass

    def _finish(self, ctx: Context) -> None:
        state = self.state
        state.finished = True
        self.history.append(state)
        ctx.observe("round", _finish_record(self.label, state))
        self.round_finished(ctx, state)
        if state.r < len(self.inputs):
            self.uni_round(ctx, state.r + 1, self.inputs[state.r])

    def round_finished(self, ctx: Context, state: RoundState) -> None:
        pass


class RegisterScript(Process):
    """Byzantine register writer: appends chosen entries at chosen times."""

    def __init__(self, pid: int, actions=()):
        super().__init__(pid)
        self.actions = [(int(at), int(r), bytes(m)) for at, r, m in actions]

    def on_start(self, ctx):
        for i, (at, _, _) in enumerate(self.actions):
            ctx.schedule(encode(("act", i)), at=at)

    def on_step(self, ctx, payload):
        _, i = decode(payload)
        _, r, m = self.actions[i]
        ctx.append(r, m)


# reliable-broadcast based rounds

def _p1_bytes(r: int, v: bytes) -> bytes:
    return encode(("uni-p1", r, v))


class _RbRoundBase(Process):
    def __init__(self, pid: int, n: int, t: int, inputs=(), transport: str = "rb",
                 label: str = LABEL):
        super().__init__(pid)
        if transport not in ("rb", "plain"):
            raise InvalidParams(f"unknown transport {transport!r}")
        self.n = n
        self.t = t
        self.label = label
        self.transport = transport
        self.inputs = [bytes(m) for m in inputs]
        self.r = 0
        self.inbox: dict[int, list] = {}
        self.state: RoundState | None = None
        self.history: list[RoundState] = []

    def _publish(self, ctx: Context, msg: tuple) -> None:
        if self.transport == "rb":
            ctx.rb_broadcast(encode(msg))
        else:
            ctx.send_all(encode(msg))

    def _open(self, ctx: Context, src: int, data: bytes):
        if self.transport == "rb":
            sealed = ctx.unseal(data)
            if sealed is None:
                return None
            origin, _, payload = sealed
        else:
            origin, payload = src, data
        msg = try_decode(payload)
        if not (isinstance(msg, tuple) and len(msg) >= 2 and isinstance(msg[1], int)):
            return None
        return origin, msg

    def on_start(self, ctx):
        if self.inputs:
            self._begin(ctx, 1)

    def on_message(self, ctx, src, data):
        opened = self._open(ctx, src, data)
        if opened is None:
            return
        origin, msg = opened
        r = msg[1]
        if r < self.r or (r == self.r and self.state.finished):
            return
        if r > self.r:
            self.inbox.setdefault(r, []).append((origin, msg))
            return
        self._handle(ctx, origin, msg)

    def _begin(self, ctx: Context, r: int) -> None:
        self.r = r
        v = self.inputs[r - 1]
        self.state = RoundState(self.pid, r, v, {self.pid: v})
        ctx.observe("round-send", (self.label, r, v))
        self._send_input(ctx, r, v)
        for origin, msg in self.inbox.pop(r, []):
            if self.state.finished:
                break
            self._handle(ctx, origin, msg)

    def _finish(self, ctx: Context) -> None:
        state = self.state
        state.finished = True
        self.history.append(state)
        ctx.observe("round", _finish_record(self.label, state))
        if state.r < len(self.inputs):
            self._begin(ctx, state.r + 1)


class RbF1RoundProcess(_RbRoundBase):
    """Two-phase round over reliable broadcast for a single fault.

    Phase 1 broadcasts a signed input and waits for valid phase-1 messages
    from ``n - 1`` distinct processes (this process included). Phase 2
    forwards every signed value collected so far and waits for ``n - 1``
    bundles, each holding at least two validly signed values from distinct
    signers.
    """

    def __init__(self, pid, n, t, inputs=(), transport="rb", label=LABEL):
        SystemParams(n, t)
        if t != 1 or n < 3:
            raise InvalidParams(f"two-phase round needs t=1 and n>=3, got n={n} t={t}")
        super().__init__(pid, n, t, inputs, transport, label)
        self.phase = 0
        self.p1: dict[int, tuple] = {}
        self.bundles: set[int] = set()

    def _send_input(self, ctx, r, v):
        self.phase = 1
        self.p1 = {}
        self.bundles = set()
        sig = ctx.sign(_p1_bytes(r, v))
        self.p1[self.pid] = (v, sig)
        self._publish(ctx, ("p1", r, self.pid, v, sig.wire()))
        self._check_phase1(ctx)

    def _valid_entry(self, ctx, r, signer, v, sig_raw):
        if not (isinstance(signer, int) and isinstance(v, bytes)):
            return None
        try:
            sig = Signature.from_wire(sig_raw)
        except (TypeError, ValueError):
            return None
        if not ctx.verify(signer, _p1_bytes(r, v), sig):
            return None
        return sig

    def _record(self, signer: int, v: bytes) -> None:
        self.state.received.setdefault(signer, v)

    def _handle(self, ctx, origin, msg):
        r = self.r
        if msg[0] == "p1" and len(msg) == 5:
            _, _, signer, v, sig_raw = msg
            sig = self._valid_entry(ctx, r, signer, v, sig_raw)
            if sig is None:
                return
            self.p1.setdefault(signer, (v, sig))
            self._record(signer, v)
            if self.phase == 1:
                self._check_phase1(ctx)
        elif msg[0] == "p2" and len(msg) == 3:
            bundle = msg[2]
            if not isinstance(bundle, tuple) or len(bundle) < 2:
                return
            signers = set()
            entries = []
            for entry in bundle:
                if not (isinstance(entry, tuple) and len(entry) == 3):
                    return
                signer, v, sig_raw = entry
                if self._valid_entry(ctx, r, signer, v, sig_raw) is None or signer in signers:
                    return
                signers.add(signer)
                entries.append((signer, v))
            for signer, v in entries:
                self._record(signer, v)
            self.bundles.add(origin)
            if self.phase == 2:
                self._check_phase2(ctx)

    def _check_phase1(self, ctx):
        if len(self.p1) >= self.n - 1:
            self.phase = 2
            bundle = tuple((s, v, sig.wire()) for s, (v, sig) in sorted(self.p1.items()))
            self.bundles.add(self.pid)
            self._publish(ctx, ("p2", self.r, bundle))
            self._check_phase2(ctx)

    def _check_phase2(self, ctx):
        if self.phase == 2 and len(self.bundles) >= self.n - 1:
            self.phase = 3
            self._finish(ctx)


class NaiveRbRoundProcess(_RbRoundBase):
    """Finish a round once ``n - t`` round messages are in. Not unidirectional.

    The quorum test runs as a separate local step, so messages that are
    already deliverable when the quorum forms are received first.
    """

    def __init__(self, pid, n, t, inputs=(), transport="rb", label=LABEL):
        super().__init__(pid, n, t, inputs, transport, label)
        self.check_pending = False

    def _send_input(self, ctx, r, v):
        self._publish(ctx, ("nv", r, v))
        self._check(ctx)

    def _handle(self, ctx, origin, msg):
        if msg[0] == "nv" and len(msg) == 3 and isinstance(msg[2], bytes):
            self.state.received.setdefault(origin, msg[2])
            self._check(ctx)

    def _check(self, ctx):
        if (not self.check_pending and not self.state.finished
                and len(self.state.received) >= self.n - self.t):
            self.check_pending = True
            ctx.schedule(encode(("quorum", self.r)))

    def on_step(self, ctx, payload):
        msg = try_decode(payload)
        if isinstance(msg, tuple) and msg[:1] == ("quorum",) and msg[1] == self.r:
            self.check_pending = False
            if not self.state.finished:
                self._finish(ctx)


class RbRoundAdversary(Process):
    """Single-fault behaviors against the reliable-broadcast rounds.

    modes:
      ``crash-after-p1``  phase-1 message only, then silence
      ``equivocate``      two signed inputs per round over plain sends,
                          one value to each half of the system
      ``bad-bundle``      honest phase 1, then malformed phase-2 bundles
      ``echo``            forwards every bundle it sees under its own name
      ``split``           for each peer, a bundle holding only that peer's
                          value and its own, so each peer can finish on it
    """

    MODES = ("crash-after-p1", "equivocate", "bad-bundle", "echo", "split")

    def __init__(self, pid: int, n: int, mode: str, rounds: int = 1, seed: int = 0,
                 transport: str = "rb"):
        super().__init__(pid)
        if mode not in self.MODES:
            raise InvalidParams(f"unknown adversary mode {mode!r}")
        self.n = n
        self.mode = mode
        self.rounds = rounds
        self.transport = transport
        self.rng = random.Random(seed)
        self.mine: dict[int, tuple] = {}
        self.split_done: set[tuple[int, int]] = set()

    def _publish(self, ctx, msg):
        if self.transport == "rb":
            ctx.rb_broadcast(encode(msg))
        else:
            ctx.send_all(encode(msg))

    def on_start(self, ctx):
        for r in range(1, self.rounds + 1):
            v = b"byz-%d" % r
            sig = ctx.sign(_p1_bytes(r, v))
            if self.mode == "equivocate":
                w = b"byz-alt-%d" % r
                sig_w = ctx.sign(_p1_bytes(r, w))
                for dst in range(self.n):
                    pick = (v, sig) if dst < self.n // 2 else (w, sig_w)
                    ctx.send(dst, encode(("p1", r, self.pid, pick[0], pick[1].wire())))
                    bundle = ((self.pid, pick[0], pick[1].wire()),)
                    ctx.send(dst, encode(("p2", r, bundle + bundle)))
                continue
            self._publish(ctx, ("p1", r, self.pid, v, sig.wire()))
            self.mine[r] = (self.pid, v, sig.wire())
            if self.mode == "bad-bundle":
                forged = Signature((self.pid + 1) % self.n, b"\x00" * 16)
                self._publish(ctx, ("p2", r, ((self.pid, v, sig.wire()),)))
                self._publish(ctx, ("p2", r, ((self.pid, v, sig.wire()),
                                              (forged.signer, b"x", forged.wire()))))
                self._publish(ctx, ("p2", r, ((self.pid, v, sig.wire()),
                                              (self.pid, v, sig.wire()))))

    def on_message(self, ctx, src, data):
        if self.mode not in ("echo", "split"):
            return
        sealed = ctx.unseal(data) if self.transport == "rb" else (src, 0, data)
        if sealed is None:
            return
        origin, _, payload = sealed
        msg = try_decode(payload)
        if not isinstance(msg, tuple) or origin == self.pid:
            return
        if self.mode == "echo" and len(msg) == 3 and msg[0] == "p2":
            self._publish(ctx, msg)
        elif self.mode == "split" and len(msg) == 5 and msg[0] == "p1":
            r, signer = msg[1], msg[2]
            if signer != origin or (r, signer) in self.split_done or r not in self.mine:
                return
            self.split_done.add((r, signer))
            entry = (signer, msg[3], msg[4])
            bundle = tuple(sorted((self.mine[r], entry)))
            if self.transport == "rb":
                self._publish(ctx, ("p2", r, bundle))
            else:
                ctx.send(signer, encode(("p2", r, bundle)))


def check_unidirectional(trace, r: int, label: str = LABEL) -> list[tuple[int, int]]:
    """Pairs of correct round-``r`` senders that both finished without hearing each other."""
    correct = set(trace.correct)
    sent = set()
    finished: dict[int, set[int]] = {}
    for obs in trace.observations():
        if obs.pid not in correct:
            continue
        if obs.action == "round-send":
            lab, rr, _ = obs.value
            if lab == label and rr == r:
                sent.add(obs.pid)
        elif obs.action == "round":
            lab, rr, _, received = obs.value
            if lab == label and rr == r:
                finished[obs.pid] = {q for q, _ in received}
    violations = []
    for p in sorted(sent):
        for q in sorted(sent):
            if q <= p or p not in finished or q not in finished:
                continue
            if q not in finished[p] and p not in finished[q]:
                violations.append((p, q))
    return violations


def round_numbers(trace, label: str = LABEL) -> list[int]:
    rs = set()
    for obs in trace.observations("round-send"):
        lab, r, _ = obs.value
        if lab == label:
            rs.add(r)
    return sorted(rs)


def check_no_phantom(trace, label: str = LABEL) -> list[str]:
    """Every payload a correct process received from a correct peer was sent by it."""
    correct = set(trace.correct)
    sent: dict[tuple[int, int], bytes] = {}
    for obs in trace.observations("round-send"):
        lab, r, m = obs.value
        if lab == label and obs.pid in correct:
            sent[(obs.pid, r)] = m
    problems = []
    for obs in trace.observations("round"):
        if obs.pid not in correct:
            continue
        lab, r, _, received = obs.value
        if lab != label:
            continue
        for q, m in received:
            if q in correct and q != obs.pid and sent.get((q, r)) != m:
                problems.append(f"p{obs.pid} round {r}: payload from p{q} was never sent")
    return problems
