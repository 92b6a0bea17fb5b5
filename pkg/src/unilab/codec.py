"""Canonical byte encoding for structured protocol values.

Every value is a one-byte type tag, a 4-byte big-endian length, and the
body. Tuples and lists encode their elements in order, so structurally
equal values always produce identical bytes. Decoding returns tuples for
both sequence types.
"""

from __future__ import annotations

import struct

from .errors import DecodeError

_NONE = b"N"
_INT = b"I"
_BYTES = b"B"
_STR = b"S"
_SEQ = b"T"
_LEN = struct.Struct(">I")


class Raw(bytes):
    """An already-encoded field, spliced into the output verbatim."""


def encode(value) -> bytes:
    return _encode(value)


def _encode(value) -> bytes:
    kind = type(value)
    if kind is Raw:
        return value
    if kind is bytes:
        return _BYTES + _LEN.pack(len(value)) + value
    if kind is tuple or kind is list:
        body = b"".join([_encode(item) for item in value])
        return _SEQ + _LEN.pack(len(body)) + body
    if kind is int:
        nbytes = (value.bit_length() + 8) // 8 or 1
        return _INT + _LEN.pack(nbytes) + value.to_bytes(nbytes, "big", signed=True)
    if kind is str:
        raw = value.encode("utf-8")
        return _STR + _LEN.pack(len(raw)) + raw
    if value is None:
        return _NONE + _LEN.pack(0)
    if isinstance(value, bool):
        raise TypeError("booleans are not encodable; use 0/1")
    if isinstance(value, int):
        return _encode(int(value))
    if isinstance(value, (bytes, bytearray)):
        return _encode(bytes(value))
    if isinstance(value, str):
        return _encode(str(value))
    if isinstance(value, (tuple, list)):
        return _encode(tuple(value))
    raise TypeError(f"cannot encode {type(value).__name__}")


def decode(data: bytes):
    value, end = _decode_at(data, 0)
    if end != len(data):
        raise DecodeError(f"trailing bytes after offset {end}")
    return value


def _decode_at(data: bytes, pos: int):
    if pos + 5 > len(data):
        raise DecodeError(f"truncated header at offset {pos}")
    tag = data[pos:pos + 1]
    (length,) = _LEN.unpack_from(data, pos + 1)
    start = pos + 5
    end = start + length
    if end > len(data):
        raise DecodeError(f"field at offset {pos} overruns buffer")
    if tag == _NONE:
        if length:
            raise DecodeError("non-empty null field")
        return None, end
    if tag == _INT:
        if length == 0:
            raise DecodeError("empty integer field")
        value = int.from_bytes(data[start:end], "big", signed=True)
        if length != ((value.bit_length() + 8) // 8 or 1):
            raise DecodeError(f"non-canonical integer at offset {pos}")
        return value, end
    if tag == _BYTES:
        return bytes(data[start:end]), end
    if tag == _STR:
        try:
            return data[start:end].decode("utf-8"), end
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None
    if tag == _SEQ:
        items = []
        cur = start
        while cur < end:
            item, cur = _decode_at(data, cur)
            items.append(item)
        if cur != end:
            raise DecodeError("sequence body overruns its length")
        return tuple(items), end
    raise DecodeError(f"unknown tag {tag!r} at offset {pos}")


def split(data: bytes) -> tuple[bytes, ...]:
    """Raw encoded fields of a top-level sequence, without decoding them."""
    if len(data) < 5 or data[:1] != _SEQ:
        raise DecodeError("not a sequence")
    (length,) = _LEN.unpack_from(data, 1)
    if 5 + length != len(data):
        raise DecodeError("sequence length mismatch")
    parts = []
    cur = 5
    while cur < len(data):
        if cur + 5 > len(data):
            raise DecodeError(f"truncated header at offset {cur}")
        (size,) = _LEN.unpack_from(data, cur + 1)
        end = cur + 5 + size
        if end > len(data):
            raise DecodeError(f"field at offset {cur} overruns buffer")
        parts.append(bytes(data[cur:end]))
        cur = end
    return tuple(parts)


def try_decode(data: bytes):
    """Decode, returning None for malformed input instead of raising."""
    try:
        return decode(data)
    except DecodeError:
        return None
