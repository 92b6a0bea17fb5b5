"""Idealized unforgeable, transferable signatures.

The oracle keeps a registry of every (signer, message) pair it has signed.
Verification succeeds only for registered pairs, so a Byzantine script can
replay a signature it has seen but can never produce a new one for another
process.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import IdentityViolation


@dataclass(frozen=True)
class Signature:
    signer: int
    tag: bytes

    def wire(self) -> tuple:
        return (self.signer, self.tag)

    @classmethod
    def from_wire(cls, raw) -> "Signature":
        signer, tag = raw
        if not isinstance(signer, int) or not isinstance(tag, bytes):
            raise ValueError("malformed signature")
        return cls(signer, tag)


def _tag(key: bytes, signer: int, msg: bytes) -> bytes:
    h = hashlib.blake2b(msg, digest_size=16, key=key,
                        person=signer.to_bytes(8, "big", signed=True))
    return h.digest()


class SignatureOracle:
    """Registry-backed signing oracle, one per simulation."""

    def __init__(self, seed: int = 0):
        self._key = hashlib.sha256(b"unilab-oracle:%d" % seed).digest()[:32]
        self._issued: dict[tuple[int, bytes], bytes] = {}
        self._digest = 0

    def sign(self, p: int, msg: bytes, *, caller: int | None = None) -> Signature:
        if caller is not None and caller != p:
            raise IdentityViolation(f"process {caller} cannot sign as {p}")
        entry = (p, bytes(msg))
        tag = self._issued.get(entry)
        if tag is None:
            tag = _tag(self._key, p, msg)
            self._issued[entry] = tag
            self._digest ^= hash(entry)
        return Signature(p, tag)

    def verify(self, p: int, msg: bytes, sig) -> bool:
        if not isinstance(sig, Signature) or sig.signer != p:
            return False
        return self._issued.get((p, msg)) == sig.tag

    def issued(self, p: int, msg: bytes) -> bool:
        return (p, msg) in self._issued

    def fingerprint(self) -> tuple[int, int]:
        return (len(self._issued), self._digest)

    def fork(self) -> "SignatureOracle":
        other = SignatureOracle.__new__(SignatureOracle)
        other._key = self._key
        other._issued = dict(self._issued)
        other._digest = self._digest
        return other
