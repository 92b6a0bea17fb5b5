import pytest
from hypothesis import given, settings, strategies as st

from unilab.crypto import Signature, SignatureOracle
from unilab.errors import InvalidParams, NotSender
from unilab.kernel import Context, DeliveryPolicy, SystemParams, new_sim
from unilab.srb import (BroadcastMsg, Copy, L2Proof, ProofMangler, SrbHost, SrbProcess,
                        SrbSenderAdversary, check_l2_proof, copy_bytes, l1_from_copies, l2_bytes,
                        parse_message, validate_copy, validate_l1_proof, validate_value,
                        value_bytes, wire_message)

T = 1


@pytest.fixture
def oracle():
    return SignatureOracle(9)


def value(oracle, k=1, m=b"a", sender=0):
    return BroadcastMsg(k, m, oracle.sign(sender, value_bytes(k, m)))


def copy_of(oracle, v, copier):
    return Copy(v, copier, oracle.sign(copier, copy_bytes(v)))


def signer(oracle, pid):
    return lambda msg: oracle.sign(pid, msg)


def test_value_validation(oracle):
    v = value(oracle)
    assert validate_value(v, b"a", 1, 0, oracle.verify)
    assert not validate_value(v, b"b", 1, 0, oracle.verify)
    assert not validate_value(v, b"a", 2, 0, oracle.verify)
    assert not validate_value(v, b"a", 1, 1, oracle.verify)


def test_copy_must_be_signed_by_copier(oracle):
    v = value(oracle)
    good = copy_of(oracle, v, 2)
    assert validate_copy(good, b"a", 1, 0, oracle.verify)
    stolen = Copy(v, 3, good.sig)
    assert not validate_copy(stolen, b"a", 1, 0, oracle.verify)


def test_l1_needs_t_plus_one_distinct_copiers(oracle):
    v = value(oracle)
    copies = [copy_of(oracle, v, q) for q in (1, 2)]
    prf = l1_from_copies(signer(oracle, 3), copies, 3)
    assert validate_l1_proof(prf, b"a", 1, 0, T, oracle.verify)
    small = l1_from_copies(signer(oracle, 3), copies[:1], 3)
    assert not validate_l1_proof(small, b"a", 1, 0, T, oracle.verify)
    dup = l1_from_copies(signer(oracle, 3), [copies[0], copies[0]], 3)
    assert not validate_l1_proof(dup, b"a", 1, 0, T, oracle.verify)


def test_l2_check(oracle):
    v = value(oracle)
    copies = [copy_of(oracle, v, q) for q in (1, 2)]
    l1s = tuple(l1_from_copies(signer(oracle, c), copies, c) for c in (1, 2))
    prf = L2Proof(l1s, 1, oracle.sign(1, l2_bytes(l1s)))
    assert check_l2_proof(prf, 1, 0, T, oracle.verify) == b"a"
    assert check_l2_proof(prf, 2, 0, T, oracle.verify) is None
    repeated = L2Proof((l1s[0], l1s[0]), 1, oracle.sign(1, l2_bytes((l1s[0], l1s[0]))))
    assert check_l2_proof(repeated, 1, 0, T, oracle.verify) is None
    w = value(oracle, m=b"b")
    other = l1_from_copies(signer(oracle, 2), [copy_of(oracle, w, q) for q in (1, 2)], 2)
    mixed = L2Proof((l1s[0], other), 1, oracle.sign(1, l2_bytes((l1s[0], other))))
    assert check_l2_proof(mixed, 1, 0, T, oracle.verify) is None


def test_wire_roundtrip(oracle):
    v = value(oracle, m=b"hello")
    sender, kind, item = parse_message(wire_message(0, "val", v))
    assert (sender, kind, item) == (0, "val", v)
    assert item.encoded == v.encoded


@given(st.binary(max_size=60))
def test_parse_rejects_garbage(data):
    parsed = parse_message(data)
    assert parsed is None or len(parsed) == 3


def test_forged_signature_never_verifies(oracle):
    v = BroadcastMsg(1, b"a", Signature(0, b"\x00" * 16))
    assert not validate_value(v, b"a", 1, 0, oracle.verify)


def test_needs_majority():
    with pytest.raises(InvalidParams):
        SrbHost(0, 3, 2)


def test_only_the_sender_broadcasts():
    sim = new_sim(SystemParams(3, 1), protocol=lambda p: SrbProcess(p, 3, 1, sender=0))
    with pytest.raises(NotSender):
        sim.procs[1].broadcast(Context(sim, 1), b"x")


def srb_run(n, t, inputs, seed=0, jitter=0, behaviors=None, interval=0):
    sim = new_sim(SystemParams(n, t), DeliveryPolicy(seed=seed, jitter=jitter), behaviors,
                  lambda p: SrbProcess(p, n, t, 0, inputs, interval))
    trace = sim.run_until_quiescent()
    return sim, trace


def delivered(sim):
    return {p: proc.inst[0].delivered for p, proc in sim.procs.items() if p not in sim.byzantine}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 4), st.lists(st.binary(min_size=1, max_size=3),
                                                          min_size=1, max_size=3))
def test_correct_sender_delivers_everything_in_order(seed, jitter, msgs):
    sim, trace = srb_run(4, 1, msgs, seed, jitter)
    want = [(k, m) for k, m in enumerate(msgs, start=1)]
    assert all(d == want for d in delivered(sim).values())
    assert trace.held == 0


def test_interval_spaces_broadcasts():
    sim, trace = srb_run(3, 1, [b"a", b"b"], interval=40)
    sends = [o.seq for o in trace.observations("srb-broadcast")]
    assert len(sends) == 2 and sends[1] > sends[0]
    assert all(d == [(1, b"a"), (2, b"b")] for d in delivered(sim).values())


@pytest.mark.parametrize("seed", range(20))
def test_equivocation_never_splits_deliveries(seed):
    sender = SrbSenderAdversary(0, 3, "equivocate", seed, [b"a", b"b"])
    sim, _ = srb_run(3, 1, [], seed, 2, {0: sender})
    values = {m for d in delivered(sim).values() for _, m in d}
    assert len(values) <= 1


def test_conflict_blocks_own_l1_proof():
    # p1 gets a, p2 gets b; at least one of them sees the other's copy
    sender = SrbSenderAdversary(0, 3, "equivocate", 0, [b"a", b"b"], targets=[1])
    sim, trace = srb_run(3, 1, [], behaviors={0: sender})
    assert any(sim.procs[p].inst[0].conflict(1) for p in (1, 2))
    assert trace.observations("deliver") == []


@pytest.mark.parametrize("seed", range(10))
def test_manglers_cannot_break_agreement(seed):
    n, t = 5, 2
    behaviors = {3: ProofMangler(3, n, t, seed, [3, 4]), 4: ProofMangler(4, n, t, seed + 1, [3, 4])}
    sim, trace = srb_run(n, t, [b"x", b"y"], seed, 3, behaviors)
    assert all(d == [(1, b"x"), (2, b"y")] for d in delivered(sim).values())


def test_mangler_fingerprint_tracks_pools():
    m = ProofMangler(1, 3, 1)
    before = m.fingerprint()
    m.seen_copies[(0, 1)] = []
    assert m.fingerprint() != before
