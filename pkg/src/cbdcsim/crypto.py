"""Deterministic cryptographic primitives.

RSA-style blind signatures (Chaum's envelope construction), plain RSA
signatures for transfer records and validator acks, and SHA-256 digests.
Everything is driven by named seeded streams so identical seeds reproduce
identical keys, factors, and signatures. Security posture is a toy threat
model: no padding, no constant-time arithmetic; do not reuse outside the
sandbox.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

from . import ntheory
from .errors import NotCoprime, OutOfRange, UnsupportedBitSize
from .rng import RngStream

SUPPORTED_BITS = (512, 1024, 2048)
PUBLIC_EXPONENT = 65537
DIGEST_SIZE = 32
ZERO_DIGEST = b"\x00" * DIGEST_SIZE


def sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def canonical_json(obj: Any) -> str:
    """One JSON encoding for everything hashed or persisted: sorted keys,
    compact separators, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def int_to_hex(value: int) -> str:
    return format(value, "x")


def hex_to_int(text: str) -> int:
    return int(text, 16)


@dataclass(frozen=True)
class PublicKey:
    modulus: int
    exponent: int

    def fingerprint(self) -> bytes:
        material = f"rsa:{self.modulus:x}:{self.exponent:x}".encode()
        return sha256(material)

    def to_json_dict(self) -> dict:
        return {"modulus": int_to_hex(self.modulus), "exponent": int_to_hex(self.exponent)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "PublicKey":
        return cls(hex_to_int(data["modulus"]), hex_to_int(data["exponent"]))


@dataclass(frozen=True)
class SigningKeyPair:
    public: PublicKey
    secret_exponent: int
    bits: int

    def to_json_dict(self) -> dict:
        return {
            "public": self.public.to_json_dict(),
            "secret_exponent": int_to_hex(self.secret_exponent),
            "bits": self.bits,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SigningKeyPair":
        return cls(
            PublicKey.from_json_dict(data["public"]),
            hex_to_int(data["secret_exponent"]),
            int(data["bits"]),
        )


@dataclass(frozen=True)
class BlindingFactor:
    """The envelope lining. Never leaves the wallet that drew it."""

    value: int
    stream_id: str
    draw_index: int


def _generate_prime(bits: int, rng: RngStream) -> int:
    while True:
        # Top two bits set so the product of two primes keeps full width.
        candidate = rng.getrandbits(bits) | (3 << (bits - 2)) | 1
        if ntheory.is_probable_prime(candidate):
            return candidate


def generate_keypair(bits: int, rng: RngStream) -> SigningKeyPair:
    if bits not in SUPPORTED_BITS:
        raise UnsupportedBitSize(f"key size {bits} not in {SUPPORTED_BITS}")
    while True:
        p = _generate_prime(bits // 2, rng)
        q = _generate_prime(bits // 2, rng)
        if p == q:
            continue
        totient = (p - 1) * (q - 1)
        if ntheory.gcd(PUBLIC_EXPONENT, totient) != 1:
            continue
        d = ntheory.invert(PUBLIC_EXPONENT, totient)
        return SigningKeyPair(PublicKey(p * q, PUBLIC_EXPONENT), d, bits)


def keypair_from_primes(p: int, q: int, e: int) -> SigningKeyPair:
    """Build a key from known primes. Meant for desk-checkable toy keys."""
    totient = (p - 1) * (q - 1)
    d = ntheory.invert(e, totient)
    return SigningKeyPair(PublicKey(p * q, e), d, (p * q).bit_length())


def make_blinding_factor(pk: PublicKey, rng: RngStream) -> BlindingFactor:
    while True:
        value = rng.randrange(2, pk.modulus)
        if ntheory.gcd(value, pk.modulus) == 1:
            return BlindingFactor(value, rng.name, rng.draw_index)


def digest_to_int(message: bytes, modulus: int) -> int:
    return int.from_bytes(message, "big") % modulus


def blind(message: bytes, factor: BlindingFactor | int, pk: PublicKey) -> int:
    r = factor.value if isinstance(factor, BlindingFactor) else factor
    if ntheory.gcd(r, pk.modulus) != 1:
        raise NotCoprime("blinding factor shares a factor with the modulus")
    m = digest_to_int(message, pk.modulus)
    return (m * ntheory.powmod(r, pk.exponent, pk.modulus)) % pk.modulus


def blind_sign(blinded: int, key: SigningKeyPair) -> int:
    if not 0 < blinded < key.public.modulus:
        raise OutOfRange("blinded value outside (0, modulus)")
    return ntheory.powmod(blinded, key.secret_exponent, key.public.modulus)


def unblind(signature: int, factor: BlindingFactor | int, pk: PublicKey) -> int:
    r = factor.value if isinstance(factor, BlindingFactor) else factor
    try:
        r_inv = ntheory.invert(r, pk.modulus)
    except ValueError:
        raise NotCoprime("blinding factor is not invertible") from None
    return (signature * r_inv) % pk.modulus


def verify_blind_signature(message: bytes, signature: int, pk: PublicKey) -> bool:
    if not isinstance(signature, int) or not 0 < signature < pk.modulus:
        return False
    return ntheory.powmod(signature, pk.exponent, pk.modulus) == digest_to_int(
        message, pk.modulus
    )


def sign(message: bytes, key: SigningKeyPair) -> int:
    """Plain deterministic RSA signature over a digest."""
    m = digest_to_int(message, key.public.modulus)
    return ntheory.powmod(m, key.secret_exponent, key.public.modulus)


def verify_signature(message: bytes, signature: int, pk: PublicKey) -> bool:
    if not isinstance(signature, int) or not 0 <= signature < pk.modulus:
        return False
    return ntheory.powmod(signature, pk.exponent, pk.modulus) == digest_to_int(
        message, pk.modulus
    )
