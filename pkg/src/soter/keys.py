"""Deterministic signing schemes and the party key directory.

Two schemes sit behind the same interface:

* ``ed25519`` (COSE alg -8), asymmetric; the default everywhere.
* ``hmac-sha256`` (COSE alg 5), a keyed MAC where the verification key is the
  secret itself; useful for fixed test vectors.

Both produce byte-identical signatures for identical inputs.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

ALG_EDDSA = -8
ALG_HMAC_SHA256 = 5


@dataclass(frozen=True)
class VerifyKey:
    alg: int
    material: bytes

    def verify(self, data: bytes, signature: bytes) -> bool:
        if self.alg == ALG_EDDSA:
            try:
                Ed25519PublicKey.from_public_bytes(self.material).verify(signature, data)
            except (InvalidSignature, ValueError):
                return False
            return True
        if self.alg == ALG_HMAC_SHA256:
            expected = hmac.new(self.material, data, hashlib.sha256).digest()
            return hmac.compare_digest(expected, signature)
        return False


@dataclass(frozen=True)
class SigningKey:
    alg: int
    secret: bytes = field(repr=False)

    def sign(self, data: bytes) -> bytes:
        if self.alg == ALG_EDDSA:
            return Ed25519PrivateKey.from_private_bytes(self.secret).sign(data)
        if self.alg == ALG_HMAC_SHA256:
            return hmac.new(self.secret, data, hashlib.sha256).digest()
        raise ValueError(f"unsupported signature algorithm {self.alg}")

    def verify_key(self) -> VerifyKey:
        if self.alg == ALG_EDDSA:
            pub = Ed25519PrivateKey.from_private_bytes(self.secret).public_key()
            return VerifyKey(ALG_EDDSA, pub.public_bytes(Encoding.Raw, PublicFormat.Raw))
        return VerifyKey(self.alg, self.secret)


@dataclass(frozen=True)
class KeyPair:
    party: str
    signing: SigningKey
    verify: VerifyKey

    @classmethod
    def derive(cls, party: str, seed: bytes | int, alg: int = ALG_EDDSA) -> "KeyPair":
        """Derive a keypair deterministically from ``seed`` and the party id."""
        if isinstance(seed, int):
            seed = seed.to_bytes(8, "big", signed=False)
        secret = hashlib.sha256(b"soter-sign\x00" + seed + b"\x00" + party.encode()).digest()
        sk = SigningKey(alg, secret)
        return cls(party, sk, sk.verify_key())


class DirectoryConflict(Exception):
    pass


class PublicKeyDirectory(Mapping[str, VerifyKey]):
    """Append-only map from party id to verification key."""

    def __init__(self, entries: Mapping[str, VerifyKey] | None = None):
        self._keys: dict[str, VerifyKey] = {}
        for party, key in (entries or {}).items():
            self.add(party, key)

    def add(self, party: str, key: VerifyKey) -> None:
        existing = self._keys.get(party)
        if existing is not None and existing != key:
            raise DirectoryConflict(f"{party} already has a different key")
        self._keys[party] = key

    def __getitem__(self, party: str) -> VerifyKey:
        return self._keys[party]

    def __iter__(self) -> Iterator[str]:
        return iter(self._keys)

    def __len__(self) -> int:
        return len(self._keys)


def pairwise_key(seed: bytes | int, a: str, b: str) -> bytes:
    """32-byte channel key shared by parties ``a`` and ``b`` (order-independent)."""
    if isinstance(seed, int):
        seed = seed.to_bytes(8, "big", signed=False)
    lo, hi = sorted((a, b))
    return hashlib.sha256(b"soter-pair\x00" + seed + b"\x00" + lo.encode() + b"\x00" + hi.encode()).digest()
