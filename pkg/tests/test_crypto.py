import pytest
from hypothesis import given, strategies as st

from unilab.crypto import Signature, SignatureOracle
from unilab.errors import IdentityViolation


def test_sign_then_verify():
    oracle = SignatureOracle(3)
    sig = oracle.sign(1, b"hello")
    assert oracle.verify(1, b"hello", sig)
    assert not oracle.verify(2, b"hello", sig)
    assert not oracle.verify(1, b"other", sig)


def test_signatures_are_deterministic_per_seed():
    a, b = SignatureOracle(5), SignatureOracle(5)
    assert a.sign(0, b"m") == b.sign(0, b"m")
    assert SignatureOracle(6).sign(0, b"m") != a.sign(0, b"m")


def test_cannot_sign_as_someone_else():
    with pytest.raises(IdentityViolation):
        SignatureOracle().sign(1, b"m", caller=2)


def test_correct_tag_for_unissued_message_fails():
    # the tag would be right, but the oracle never signed it
    signer = SignatureOracle(0)
    other = SignatureOracle(0)
    sig = signer.sign(0, b"m")
    assert not other.verify(0, b"m", sig)


@given(st.integers(0, 5), st.binary(max_size=16), st.binary(min_size=16, max_size=16))
def test_forgeries_fail(p, msg, tag):
    oracle = SignatureOracle(1)
    oracle.sign(p, b"something else")
    assert not oracle.verify(p, msg, Signature(p, tag))


def test_fork_is_independent():
    oracle = SignatureOracle()
    child = oracle.fork()
    sig = child.sign(0, b"x")
    assert child.verify(0, b"x", sig)
    assert not oracle.verify(0, b"x", sig)
    assert oracle.fingerprint() != child.fingerprint()


def test_wire_roundtrip():
    sig = SignatureOracle().sign(2, b"x")
    assert Signature.from_wire(sig.wire()) == sig
    with pytest.raises(ValueError):
        Signature.from_wire(("2", b"x"))
