import pytest
from hypothesis import given, strategies as st

from unilab.codec import Raw, decode, encode, split, try_decode
from unilab.errors import DecodeError

leaves = st.one_of(st.none(), st.integers(), st.binary(max_size=20), st.text(max_size=10))
values = st.recursive(leaves, lambda inner: st.lists(inner, max_size=4).map(tuple), max_leaves=15)


@given(values)
def test_roundtrip(value):
    assert decode(encode(value)) == value


@given(values, values)
def test_injective(a, b):
    if a != b:
        assert encode(a) != encode(b)


def test_lists_encode_like_tuples():
    assert encode([1, b"x"]) == encode((1, b"x"))
    assert decode(encode([1, [2]])) == (1, (2,))


def test_raw_is_spliced_verbatim():
    inner = encode((1, b"a"))
    assert encode((Raw(inner), 2)) == encode(((1, b"a"), 2))


def test_booleans_rejected():
    with pytest.raises(TypeError):
        encode(True)


def test_unknown_type_rejected():
    with pytest.raises(TypeError):
        encode(1.5)


@pytest.mark.parametrize("bad", [
    b"",
    b"I\x00\x00\x00\x02\x00\x01",  # non-canonical integer
    b"B\x00\x00\x00\x05ab",  # overrun
    b"Q\x00\x00\x00\x00",  # unknown tag
    b"N\x00\x00\x00\x01x",  # null with body
    encode(1) + b"x",  # trailing bytes
])
def test_malformed_input(bad):
    with pytest.raises(DecodeError):
        decode(bad)
    assert try_decode(bad) is None


@given(st.binary(max_size=40))
def test_decode_never_crashes(data):
    try:
        decode(data)
    except DecodeError:
        pass


def test_split_returns_raw_fields():
    data = encode((1, b"ab", (2, 3)))
    parts = split(data)
    assert [decode(p) for p in parts] == [1, b"ab", (2, 3)]
    with pytest.raises(DecodeError):
        split(encode(b"not a tuple"))
