"""Simulated transferable signatures and the canonical byte encoding.

Each process owns an HMAC-SHA256 key derived from a run seed.  A
:class:`KeyRing` plays the role of the public-key directory: anyone holding
it can verify, but signing requires a :class:`Signer`, and the simulator
hands out signers only for the processes a party controls.

Encoding: every field is a 4-byte big-endian length followed by its bytes;
integers are encoded as 4-byte big-endian unsigned values inside a field.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

SIG_DOMAIN = b"kcrb-sig-v1"


def field_bytes(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def encode(*fields: bytes | int | str) -> bytes:
    out = bytearray()
    for f in fields:
        if isinstance(f, int):
            f = struct.pack(">I", f)
        elif isinstance(f, str):
            f = f.encode()
        out += field_bytes(f)
    return bytes(out)


@dataclass(frozen=True)
class Signature:
    signer: int
    tag: bytes

    def encoded(self) -> bytes:
        return encode(self.signer, self.tag)


class Signer:
    """Signing capability for exactly one process."""

    __slots__ = ("pid", "_key")

    def __init__(self, pid: int, key: bytes):
        self.pid = pid
        self._key = key

    def sign(self, subject: bytes) -> Signature:
        return Signature(self.pid, hmac.new(self._key, subject, hashlib.sha256).digest())

    def __repr__(self) -> str:
        return f"Signer({self.pid})"


class KeyRing:
    """Per-process keys for one run; verification is public, signing is not."""

    def __init__(self, seed: int, n: int):
        self.seed = seed
        self.n = n
        self._keys = [hashlib.sha256(encode(SIG_DOMAIN, str(seed), p)).digest()
                      for p in range(n)]

    def verify(self, sig: Signature, signer: int, subject: bytes) -> bool:
        if sig.signer != signer or not 0 <= signer < self.n:
            return False
        good = hmac.new(self._keys[signer], subject, hashlib.sha256).digest()
        return hmac.compare_digest(good, sig.tag)

    def grant(self, pid: int) -> Signer:
        """Issue the signing capability of ``pid``; only the simulator calls this."""
        return Signer(pid, self._keys[pid])
