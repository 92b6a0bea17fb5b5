import pytest
from hypothesis import given, settings, strategies as st

from unilab.errors import AclViolation
from unilab.kernel import DeliveryPolicy, Process, SystemParams, new_sim
from unilab.registers import RegisterBank, check_linearizable
from unilab.trace import observation


def test_only_owner_appends():
    bank = RegisterBank(3)
    assert bank.append(1, 1, 1, b"a") == 1
    with pytest.raises(AclViolation):
        bank.append(0, 1, 1, b"b")


def test_read_is_a_snapshot():
    bank = RegisterBank(2)
    bank.append(0, 0, 1, b"a")
    snap = bank.read(1, 0)
    bank.append(0, 0, 2, b"b")
    assert snap == ((1, b"a"),)
    assert bank.read(1, 0) == ((1, b"a"), (2, b"b"))


@given(st.lists(st.tuples(st.integers(0, 2), st.binary(max_size=3)), max_size=30))
def test_snapshots_are_prefixes(ops):
    bank = RegisterBank(3)
    seen = {o: () for o in range(3)}
    for owner, payload in ops:
        bank.append(owner, owner, 1, payload)
        for o in range(3):
            now = bank.read(0, o)
            assert now[:len(seen[o])] == seen[o]
            seen[o] = now


class Writer(Process):
    def __init__(self, pid, count):
        super().__init__(pid)
        self.count = count
        self.reads = []

    def on_start(self, ctx):
        for i in range(self.count):
            ctx.schedule(b"w%d" % i, at=i)
        for q in range(ctx.n):
            if q != self.pid:
                ctx.read(q)

    def on_step(self, ctx, payload):
        ctx.append(1, payload)

    def on_read(self, ctx, owner, entries):
        self.reads.append((owner, len(entries)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_simulated_reads_linearize(seed, jitter):
    sim = new_sim(SystemParams(3, 0), DeliveryPolicy(seed=seed, jitter=jitter),
                  protocol=lambda pid: Writer(pid, 3))
    trace = sim.run_until_quiescent()
    assert check_linearizable(trace) == []
    for proc in sim.procs.values():
        counts = {}
        for owner, size in proc.reads:
            assert size >= counts.get(owner, 0)
            counts[owner] = size


def test_linearizability_audit_flags_stale_read():
    sim = new_sim(SystemParams(2, 0), protocol=lambda pid: Writer(pid, 1))
    trace = sim.run_until_quiescent()
    last = trace.observations("read")[-1]
    trace.entries.append(observation(last.seq, "read", last.pid, (last.value[0], 99)))
    assert check_linearizable(trace)
