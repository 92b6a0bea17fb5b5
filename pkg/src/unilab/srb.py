"""Sequenced reliable broadcast over unidirectional rounds.

A sender signs ``(k, m)`` and publishes it. Each receiver copies the first
valid value it sees for its next index, exchanges signed copies in one
unidirectional round, compiles an L1 proof from ``t + 1`` matching copies,
exchanges L1 proofs in a second round, and compiles an L2 proof from
``t + 1`` L1 proofs. Any valid L2 proof for the next index is delivered and
forwarded.

Transport: "send to all" is an append to the process's own log, and
receiving is reading other logs. Correct processes also accept
point-to-point messages, which is how a Byzantine sender shows different
values to different processes.

A process that sees two validly signed values for the same index never
compiles its own L1 proof for that index. The copy round guarantees that of
two correct processes holding different values, at least one sees the
other's copy.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass

from .codec import Raw, decode, encode, split, try_decode
from .crypto import Signature
from .errors import DecodeError, InvalidParams, NotSender
from .kernel import Context, Process, SystemParams, copy_state, freeze
from .rounds import SwmrRounds

WAIT_SENDER = "WaitForSender"
WAIT_L1 = "WaitForL1Proof"
WAIT_L2 = "WaitForL2Proof"

TAG = "srb"


class cached_property:
    """Lock-free per-instance cache (the stdlib one takes a lock on 3.10)."""

    def __init__(self, fn):
        self.fn = fn
        self.name = fn.__name__

    def __get__(self, obj, owner=None):
        if obj is None:
            return self
        value = obj.__dict__[self.name] = self.fn(obj)
        return value


# signed contents

def value_bytes(k: int, m: bytes) -> bytes:
    return encode((TAG, k, m))


@dataclass(frozen=True)
class BroadcastMsg:
    k: int
    m: bytes
    sig: Signature

    def wire(self) -> tuple:
        return (self.k, self.m, self.sig.wire())

    @cached_property
    def encoded(self) -> Raw:
        return Raw(encode(self.wire()))

    @classmethod
    def from_wire(cls, raw) -> "BroadcastMsg":
        k, m, sig = raw
        if not isinstance(k, int) or not isinstance(m, bytes):
            raise ValueError("malformed value")
        return cls(k, m, Signature.from_wire(sig))


@dataclass(frozen=True)
class Copy:
    value: BroadcastMsg
    copier: int
    sig: Signature

    def body(self) -> bytes:
        return copy_bytes(self.value)

    def wire(self) -> tuple:
        return (self.value.wire(), self.copier, self.sig.wire())

    @cached_property
    def encoded(self) -> Raw:
        return Raw(encode((self.value.encoded, self.copier, self.sig.wire())))

    @classmethod
    def from_wire(cls, raw) -> "Copy":
        value, copier, sig = raw
        if not isinstance(copier, int):
            raise ValueError("malformed copy")
        return cls(BroadcastMsg.from_wire(value), copier, Signature.from_wire(sig))


def copy_bytes(value: BroadcastMsg) -> bytes:
    return encode((TAG + "-copy", value.encoded))


@dataclass(frozen=True)
class L1Proof:
    copies: tuple[Copy, ...]
    compiler: int
    sig: Signature

    def wire(self) -> tuple:
        return (tuple(c.wire() for c in self.copies), self.compiler, self.sig.wire())

    @cached_property
    def encoded(self) -> Raw:
        return Raw(encode((tuple(c.encoded for c in self.copies), self.compiler,
                           self.sig.wire())))

    @classmethod
    def from_wire(cls, raw) -> "L1Proof":
        copies, compiler, sig = raw
        if not isinstance(copies, tuple) or not isinstance(compiler, int):
            raise ValueError("malformed L1 proof")
        return cls(tuple(Copy.from_wire(c) for c in copies), compiler,
                   Signature.from_wire(sig))


def l1_bytes(copies) -> bytes:
    return encode((TAG + "-l1", tuple(c.encoded for c in copies)))


@dataclass(frozen=True)
class L2Proof:
    l1s: tuple[L1Proof, ...]
    compiler: int
    sig: Signature

    def wire(self) -> tuple:
        return (tuple(p.wire() for p in self.l1s), self.compiler, self.sig.wire())

    @cached_property
    def encoded(self) -> Raw:
        return Raw(encode((tuple(p.encoded for p in self.l1s), self.compiler,
                           self.sig.wire())))

    @classmethod
    def from_wire(cls, raw) -> "L2Proof":
        l1s, compiler, sig = raw
        if not isinstance(l1s, tuple) or not isinstance(compiler, int):
            raise ValueError("malformed L2 proof")
        return cls(tuple(L1Proof.from_wire(p) for p in l1s), compiler,
                   Signature.from_wire(sig))


def l2_bytes(l1s) -> bytes:
    return encode((TAG + "-l2", tuple(p.encoded for p in l1s)))


KINDS = {"val": BroadcastMsg, "copy": Copy, "l1": L1Proof, "l2": L2Proof}


def wire_message(sender: int, kind: str, item) -> bytes:
    return encode((TAG, sender, kind, item.encoded))


def _fields(raw: bytes, count: int) -> tuple[bytes, ...]:
    parts = split(raw)
    if len(parts) != count:
        raise ValueError("wrong field count")
    return parts


def _parse_item(kind: str, raw: bytes, memo: dict):
    key = ("srb-item", kind, raw)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if kind == "val":
        item = BroadcastMsg.from_wire(decode(raw))
    elif kind == "copy":
        v_raw, copier, sig = _fields(raw, 3)
        item = Copy(_parse_item("val", v_raw, memo), _int(copier),
                    Signature.from_wire(decode(sig)))
    elif kind == "l1":
        copies, compiler, sig = _fields(raw, 3)
        item = L1Proof(tuple(_parse_item("copy", c, memo) for c in split(copies)),
                       _int(compiler), Signature.from_wire(decode(sig)))
    else:
        l1s, compiler, sig = _fields(raw, 3)
        item = L2Proof(tuple(_parse_item("l1", p, memo) for p in split(l1s)),
                       _int(compiler), Signature.from_wire(decode(sig)))
    # decoding is canonical, so the input bytes are the item's encoding
    item.__dict__["encoded"] = Raw(raw)
    memo[key] = item
    return item


def _int(raw: bytes) -> int:
    value = decode(raw)
    if type(value) is not int:
        raise ValueError("expected an integer")
    return value


def parse_message(data: bytes, memo: dict | None = None):
    """``(sender, kind, item)`` for a well-formed SRB message, else None."""
    if memo is None:
        return _parse_message(data, {})
    key = ("srb-msg", data)
    if key not in memo:
        memo[key] = _parse_message(data, memo)
    return memo[key]


def _parse_message(data: bytes, memo: dict):
    try:
        tag, sender, kind, raw = _fields(data, 4)
        if decode(tag) != TAG or decode(kind) not in KINDS:
            return None
        return _int(sender), decode(kind), _parse_item(decode(kind), raw, memo)
    except (DecodeError, TypeError, ValueError):
        return None


# validators; ``verify`` is the oracle's (signer, msg, sig) -> bool

def validate_value(v: BroadcastMsg, val: bytes, k: int, q: int, verify) -> bool:
    return v.m == val and v.k == k and verify(q, value_bytes(v.k, v.m), v.sig)


def validate_copy(c: Copy, val: bytes, k: int, q: int, verify) -> bool:
    return (validate_value(c.value, val, k, q, verify)
            and c.sig.signer == c.copier and verify(c.copier, c.body(), c.sig))


def validate_l1_proof(prf: L1Proof, val: bytes, k: int, q: int, t: int, verify) -> bool:
    copiers = {c.copier for c in prf.copies}
    if len(copiers) < t + 1 or len(copiers) != len(prf.copies):
        return False
    if not all(validate_copy(c, val, k, q, verify) for c in prf.copies):
        return False
    return verify(prf.compiler, l1_bytes(prf.copies), prf.sig)


def validate_l2_proof(prf: L2Proof, val: bytes, k: int, q: int, t: int, verify) -> bool:
    compilers = {p.compiler for p in prf.l1s}
    if len(compilers) < t + 1 or len(compilers) != len(prf.l1s):
        return False
    return all(validate_l1_proof(p, val, k, q, t, verify) for p in prf.l1s)


def proof_claim(prf: L2Proof):
    """The ``(k, m)`` named by the first copy of the first L1 proof."""
    if not prf.l1s or not prf.l1s[0].copies:
        return None
    first = prf.l1s[0].copies[0].value
    return first.k, first.m


def check_l2_proof(prf: L2Proof, k: int, q: int, t: int, verify):
    """The proven value for index ``k``, or None."""
    claim = proof_claim(prf)
    if claim is None or claim[0] != k:
        return None
    if validate_l2_proof(prf, claim[1], k, q, t, verify):
        return claim[1]
    return None


class _Checker:
    """Memoized equivalents of the validators, keyed by item encoding."""

    def __init__(self, memo: dict, t: int, verify):
        self.memo = memo
        self.t = t
        self.verify = verify

    def _cached(self, key, compute) -> bool:
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = compute()
        return hit

    def copy_ok(self, c: Copy, q: int) -> bool:
        v = c.value
        return self._cached(("copy-ok", q, c.encoded),
                            lambda: validate_copy(c, v.m, v.k, q, self.verify))

    def l1_ok(self, prf: L1Proof, q: int) -> bool:
        def compute():
            if not prf.copies:
                return False
            first = prf.copies[0].value
            copiers = {c.copier for c in prf.copies}
            if len(copiers) < self.t + 1 or len(copiers) != len(prf.copies):
                return False
            for c in prf.copies:
                if c.value.k != first.k or c.value.m != first.m or not self.copy_ok(c, q):
                    return False
            return self.verify(prf.compiler, l1_bytes(prf.copies), prf.sig)
        return self._cached(("l1-ok", q, self.t, prf.encoded), compute)

    def summary(self, sender: int, kind: str, item):
        """``(k, m)`` an item vouches for if it is valid on its own terms."""
        if kind == "val":
            ok = self.verify(sender, value_bytes(item.k, item.m), item.sig)
            return (item.k, item.m) if ok else None
        if kind == "copy":
            return (item.value.k, item.value.m) if self.copy_ok(item, sender) else None
        if kind == "l1":
            if not self.l1_ok(item, sender):
                return None
            return item.copies[0].value.k, item.copies[0].value.m
        claim = proof_claim(item)
        if claim is None:
            return None
        compilers = {p.compiler for p in item.l1s}
        if len(compilers) < self.t + 1 or len(compilers) != len(item.l1s):
            return None
        for p in item.l1s:
            v = p.copies[0].value if p.copies else None
            if v is None or (v.k, v.m) != claim or not self.l1_ok(p, sender):
                return None
        return claim


def inspect(ctx: Context, data: bytes, t: int):
    """Parse and validate once per simulation; ``(sender, kind, item, claim)`` or None."""
    key = ("srb", t, data)
    memo = ctx.memo
    if key in memo:
        return memo[key]
    parsed = parse_message(data, memo)
    result = None
    if parsed is not None:
        sender, kind, item = parsed
        claim = _Checker(memo, t, ctx.verify).summary(sender, kind, item)
        if claim is not None:
            result = (sender, kind, item, claim)
    memo[key] = result
    return result


class SrbInstance:
    """One process's state for one designated sender."""

    def __init__(self, owner: int, sender: int, n: int, t: int):
        self.owner = owner
        self.sender = sender
        self.n = n
        self.t = t
        self.next_p = 1
        self.phase = WAIT_SENDER
        self.my_seq = 0
        self.val: BroadcastMsg | None = None
        self.direct: dict[int, BroadcastMsg] = {}
        self.values: dict[int, frozenset] = {}
        self.copies: dict[int, dict[int, Copy]] = {}
        self.l1s: dict[int, dict[int, L1Proof]] = {}
        self.l2s: dict[int, L2Proof] = {}
        self.done_rounds: frozenset = frozenset()
        self.delivered: list[tuple[int, bytes]] = []

    def conflict(self, k: int) -> bool:
        return len(self.values.get(k, ())) > 1

    def note_value(self, k: int, m: bytes) -> None:
        self.values[k] = self.values.get(k, frozenset()) | {m}

    def clone(self) -> "SrbInstance":
        other = SrbInstance.__new__(SrbInstance)
        other.__dict__.update(self.__dict__)
        other.direct = dict(self.direct)
        other.values = dict(self.values)
        other.copies = {k: dict(v) for k, v in self.copies.items()}
        other.l1s = {k: dict(v) for k, v in self.l1s.items()}
        other.l2s = dict(self.l2s)
        other.delivered = list(self.delivered)
        return other

    def fingerprint(self) -> tuple:
        def table(d):
            return frozenset((k, v.encoded) for k, v in d.items())

        def nested(d):
            return frozenset((k, table(v)) for k, v in d.items())

        return (self.next_p, self.phase, self.my_seq,
                None if self.val is None else self.val.encoded,
                table(self.direct), frozenset(self.values.items()),
                nested(self.copies), nested(self.l1s), table(self.l2s),
                self.done_rounds, tuple(self.delivered))


class SrbHost(Process):
    """A process running SRB instances for a set of senders.

    Subclasses add protocol behaviour through :meth:`on_deliver`.
    """

    def __init__(self, pid: int, n: int, t: int, senders=None):
        super().__init__(pid)
        SystemParams(n, t).require_majority()
        self.n = n
        self.t = t
        senders = range(n) if senders is None else senders
        self.inst = {q: SrbInstance(pid, q, n, t) for q in sorted(set(senders))}
        self.rounds = SwmrRounds(pid, n)
        self._queue: list = []
        self._draining = False

    _OWN = ("inst", "rounds", "_queue")

    def clone(self):
        other = copy.copy(self)
        for name, value in vars(self).items():
            if name not in self._OWN:
                setattr(other, name, copy_state(value))
        other.inst = {q: i.clone() for q, i in self.inst.items()}
        other.rounds = self.rounds.clone()
        other._queue = list(self._queue)
        return other

    def fingerprint(self):
        rest = {k: v for k, v in vars(self).items() if k not in self._OWN}
        return (tuple((q, i.fingerprint()) for q, i in sorted(self.inst.items())),
                self.rounds.fingerprint(), freeze(rest))

    # transport

    def _publish(self, ctx: Context, k: int, data: bytes, round_key=None) -> None:
        if round_key is None:
            ctx.append(k, data)
        elif self.rounds.start(ctx, round_key, k, data):
            self._queue.append(("done", round_key))
        self._queue.append(("msg", self.pid, data))

    def on_message(self, ctx, src, payload):
        self._queue.append(("msg", src, payload))
        self._drain(ctx)

    def on_read(self, ctx, owner, entries):
        for _, data in self.rounds.new_entries(owner, entries):
            self._queue.append(("msg", owner, data))
        for key in self.rounds.mark_read(owner):
            self._queue.append(("done", key))
        self._drain(ctx)

    def _drain(self, ctx: Context) -> None:
        if self._draining:
            return
        self._draining = True
        try:
            while self._queue:
                item = self._queue.pop(0)
                if item[0] == "msg":
                    self._receive(ctx, item[1], item[2])
                else:
                    sender, k, phase = item[1]
                    inst = self.inst.get(sender)
                    if inst is not None and inst.next_p == k:
                        inst.done_rounds = inst.done_rounds | {phase}
                        self._progress(ctx, inst)
        finally:
            self._draining = False

    # broadcast

    def broadcast(self, ctx: Context, m: bytes) -> int:
        inst = self.inst.get(self.pid)
        if inst is None:
            raise NotSender(f"process {self.pid} hosts no instance for itself")
        inst.my_seq += 1
        k = inst.my_seq
        sig = ctx.sign(value_bytes(k, bytes(m)))
        ctx.observe("srb-broadcast", (self.pid, k, bytes(m)))
        self._publish(ctx, k, wire_message(self.pid, "val", BroadcastMsg(k, bytes(m), sig)))
        self._drain(ctx)
        return k

    # receiving

    def _receive(self, ctx: Context, src: int, data: bytes) -> None:
        info = inspect(ctx, data, self.t)
        if info is None:
            return
        sender, kind, item, (k, m) = info
        inst = self.inst.get(sender)
        if inst is None or k < inst.next_p:
            return
        inst.note_value(k, m)
        if kind == "val":
            if src == sender and k not in inst.direct:
                inst.direct[k] = item
        elif kind == "copy":
            self._store_copy(inst, k, item)
        elif kind == "l1":
            for c in item.copies:
                self._store_copy(inst, k, c)
            inst.l1s.setdefault(k, {}).setdefault(item.compiler, item)
        else:
            inst.l2s.setdefault(k, item)
        self._progress(ctx, inst)

    def _store_copy(self, inst: SrbInstance, k: int, c: Copy) -> None:
        inst.copies.setdefault(k, {})
        bucket = inst.copies[k]
        if c.copier not in bucket or (inst.val is not None and bucket[c.copier].value.m != inst.val.m
                                      and c.value.m == inst.val.m):
            bucket[c.copier] = c

    def _progress(self, ctx: Context, inst: SrbInstance) -> None:
        while True:
            if self.maybe_deliver(ctx, inst):
                continue
            k = inst.next_p
            if inst.phase == WAIT_SENDER:
                v = inst.direct.get(k)
                if v is None:
                    return
                inst.val = v
                copy_ = Copy(v, self.pid, ctx.sign(copy_bytes(v)))
                inst.phase = WAIT_L1
                inst.done_rounds = frozenset()
                self._publish(ctx, k, wire_message(inst.sender, "copy", copy_),
                              (inst.sender, k, "copy"))
                continue
            if inst.phase == WAIT_L1:
                if "copy" not in inst.done_rounds or inst.conflict(k):
                    return
                mine = self._matching_copies(inst, k)
                if len(mine) < self.t + 1:
                    return
                prf = L1Proof(mine, self.pid, ctx.sign(l1_bytes(mine)))
                inst.phase = WAIT_L2
                ctx.observe("l1", (inst.sender, k, inst.val.m))
                self._publish(ctx, k, wire_message(inst.sender, "l1", prf),
                              (inst.sender, k, "l1"))
                continue
            if inst.phase == WAIT_L2:
                if "l1" not in inst.done_rounds:
                    return
                proofs = self._matching_l1s(inst, k)
                if len(proofs) < self.t + 1:
                    return
                prf = L2Proof(proofs, self.pid, ctx.sign(l2_bytes(proofs)))
                inst.l2s.setdefault(k, prf)
                inst.phase = "compiled"
                ctx.observe("l2", (inst.sender, k, inst.val.m))
                continue
            return

    def _matching_copies(self, inst: SrbInstance, k: int) -> tuple:
        val = inst.val
        return tuple(c for _, c in sorted(inst.copies.get(k, {}).items())
                     if c.value == val)

    def _matching_l1s(self, inst: SrbInstance, k: int) -> tuple:
        m = inst.val.m
        return tuple(p for _, p in sorted(inst.l1s.get(k, {}).items())
                     if p.copies[0].value.m == m)

    def maybe_deliver(self, ctx: Context, inst: SrbInstance) -> bool:
        k = inst.next_p
        prf = inst.l2s.get(k)
        if prf is None:
            return False
        m = proof_claim(prf)[1]
        ctx.append(k, wire_message(inst.sender, "l2", prf))
        inst.delivered.append((k, m))
        ctx.observe("deliver", (inst.sender, k, m))
        for phase in ("copy", "l1"):
            self.rounds.cancel((inst.sender, k, phase))
        self._forget(inst, k)
        inst.next_p = k + 1
        inst.phase = WAIT_SENDER
        inst.val = None
        inst.done_rounds = frozenset()
        self.on_deliver(ctx, inst.sender, k, m)
        return True

    def _forget(self, inst: SrbInstance, k: int) -> None:
        for table in (inst.direct, inst.values, inst.copies, inst.l1s, inst.l2s):
            table.pop(k, None)

    def on_deliver(self, ctx: Context, sender: int, k: int, m: bytes) -> None:
        pass


class SrbProcess(SrbHost):
    """Plain SRB participant; the designated sender broadcasts ``inputs``.

    With ``interval`` > 0 the i-th input is broadcast at logical time
    ``i * interval`` instead of all at start.
    """

    def __init__(self, pid, n, t, sender=0, inputs=(), interval=0):
        super().__init__(pid, n, t, senders=[sender])
        self.sender = sender
        self.inputs = [bytes(m) for m in inputs] if pid == sender else []
        self.interval = interval

    def on_start(self, ctx):
        for i, m in enumerate(self.inputs):
            if self.interval:
                ctx.schedule(encode(("bcast", i)), at=i * self.interval)
            else:
                self.broadcast(ctx, m)

    def on_step(self, ctx, payload):
        msg = try_decode(payload)
        if isinstance(msg, tuple) and msg[:1] == ("bcast",):
            self.broadcast(ctx, self.inputs[msg[1]])


# Byzantine behaviours

class SrbSenderScript(Process):
    """Byzantine sender following a fixed plan.

    ``plan`` is a sequence of ``(dest, m)``: sign ``(1, m)`` and send it to
    ``dest``, or append it to the own log when ``dest`` is None.
    """

    def __init__(self, pid, plan=()):
        super().__init__(pid)
        self.plan = [(d, bytes(m)) for d, m in plan]

    def on_start(self, ctx):
        for dest, m in self.plan:
            data = wire_message(self.pid, "val", BroadcastMsg(1, m, ctx.sign(value_bytes(1, m))))
            if dest is None:
                ctx.append(1, data)
            else:
                ctx.send(dest, data)


class SrbSenderAdversary(Process):
    """Byzantine designated sender.

    ``crash``       sends the first value to a random subset, then stops
    ``equivocate``  signs two values for index 1 and splits them between
                    two random groups; may also publish one in its log
    ``silent``      never sends
    """

    MODES = ("crash", "equivocate", "silent")

    def __init__(self, pid, n, mode="equivocate", seed=0, values=(b"a", b"b"),
                 targets=None):
        super().__init__(pid)
        if mode not in self.MODES:
            raise InvalidParams(f"unknown sender mode {mode!r}")
        self.n = n
        self.mode = mode
        self.values = [bytes(v) for v in values] or [b"a"]
        self.seed = seed
        self.targets = targets

    def _val(self, ctx, k, m) -> bytes:
        return wire_message(self.pid, "val", BroadcastMsg(k, m, ctx.sign(value_bytes(k, m))))

    def on_start(self, ctx):
        if self.mode == "silent":
            return
        rng = random.Random(self.seed)
        others = list(range(self.n))
        if self.mode == "crash":
            data = self._val(ctx, 1, self.values[0])
            how = rng.choice(("subset", "log", "none")) if self.targets is None else "subset"
            if how == "log":
                ctx.append(1, data)
            elif how == "subset":
                chosen = self.targets
                if chosen is None:
                    chosen = [q for q in others if rng.random() < 0.5]
                for dst in sorted(chosen):
                    ctx.send(dst, data)
            return
        a = self._val(ctx, 1, self.values[0])
        b = self._val(ctx, 1, self.values[1 % len(self.values)] if len(self.values) > 1
                      else self.values[0] + b"'")
        if self.targets is not None:
            group = set(self.targets)
        else:
            group = {q for q in others if rng.random() < 0.5}
        for dst in others:
            ctx.send(dst, a if dst in group else b)
        if self.targets is None and rng.random() < 0.3:
            ctx.append(1, rng.choice((a, b)))


class ProofMangler(Process):
    """Byzantine non-sender that answers honest traffic with malformed proofs.

    Every message it sees from a non-ally triggers a batch of variants:
    undersized and duplicated L1 proofs, copies with forged signatures,
    L2 proofs that repeat one L1 or mix values, and replays. Output goes
    to its own log and to random point-to-point targets.
    """

    def __init__(self, pid, n, t, seed=0, allies=()):
        super().__init__(pid)
        self.n = n
        self.t = t
        self.rng = random.Random(seed)
        self.allies = frozenset(allies) | {pid}
        self.cursor = [0] * n
        self.seen_copies: dict[tuple[int, int], list] = {}
        self.seen_l1: dict[tuple[int, int], list] = {}

    def fingerprint(self):
        def pools(d):
            return frozenset((key, tuple(x.encoded for x in items)) for key, items in d.items())

        return (tuple(self.cursor), hash(self.rng.getstate()),
                pools(self.seen_copies), pools(self.seen_l1))

    def on_read(self, ctx, owner, entries):
        fresh = entries[self.cursor[owner]:]
        self.cursor[owner] = len(entries)
        if owner in self.allies:
            return
        for _, data in fresh:
            self._react(ctx, data)

    def on_message(self, ctx, src, payload):
        if src not in self.allies:
            self._react(ctx, payload)

    def _emit(self, ctx, k, data):
        ctx.append(k, data)
        dst = self.rng.randrange(self.n)
        ctx.send(dst, data)

    def _react(self, ctx, data):
        parsed = parse_message(data, ctx.memo)
        if parsed is None:
            return
        sender, kind, item = parsed
        forged = Signature((self.pid + 1) % self.n, b"\x00" * 16)
        if kind == "val":
            mine = Copy(item, self.pid, ctx.sign(copy_bytes(item)))
            self._emit(ctx, item.k, wire_message(sender, "copy", mine))
            bogus = Copy(item, (self.pid + 1) % self.n, forged)
            self._emit(ctx, item.k, wire_message(sender, "copy", bogus))
            self.seen_copies.setdefault((sender, item.k), []).append(mine)
        elif kind == "copy":
            k = item.value.k
            pool = self.seen_copies.setdefault((sender, k), [])
            pool.append(item)
            small = tuple(pool[:self.t])
            if small:
                self._emit(ctx, k, wire_message(
                    sender, "l1", L1Proof(small, self.pid, ctx.sign(l1_bytes(small)))))
            dup = (item,) * (self.t + 1)
            self._emit(ctx, k, wire_message(
                sender, "l1", L1Proof(dup, self.pid, ctx.sign(l1_bytes(dup)))))
            mixed = tuple(pool[:self.t]) + (Copy(item.value, self.pid, forged),)
            self._emit(ctx, k, wire_message(
                sender, "l1", L1Proof(mixed, self.pid, ctx.sign(l1_bytes(mixed)))))
        elif kind == "l1":
            if not item.copies:
                return
            k = item.copies[0].value.k
            pool = self.seen_l1.setdefault((sender, k), [])
            pool.append(item)
            dup = (item,) * (self.t + 1)
            self._emit(ctx, k, wire_message(
                sender, "l2", L2Proof(dup, self.pid, ctx.sign(l2_bytes(dup)))))
            stolen = L1Proof(item.copies, self.pid, item.sig)
            self._emit(ctx, k, wire_message(sender, "l1", stolen))
            if len(pool) >= 2:
                mix = tuple(pool[-2:])
                self._emit(ctx, k + 1, wire_message(
                    sender, "l2", L2Proof(mix, self.pid, ctx.sign(l2_bytes(mix)))))
        elif kind == "l2" and self.rng.random() < 0.5:
            self._emit(ctx, 0, data)


def l1_from_copies(ctx_sign, copies, compiler) -> L1Proof:
    """Helper for tests: compile an L1 proof with ``ctx_sign(msg)``."""
    copies = tuple(sorted(copies, key=lambda c: c.copier))
    return L1Proof(copies, compiler, ctx_sign(l1_bytes(copies)))
