"""Big-integer kernels behind the cryptography layer.

Two interchangeable backends: a gmpy2-accelerated one (compiled GMP
bindings) and a pure-stdlib fallback. The active backend is picked once at
import time; set CBDCSIM_NTHEORY=python|gmpy2 to force a choice. Both
backends run the identical algorithms (same Miller-Rabin bases, same
candidate filtering), so every result is bit-for-bit equal regardless of
which one is active. `benchmarks/bench_ntheory.py` compares their speed.
"""

from __future__ import annotations

import math
import os

try:
    import gmpy2 as _gmpy2
except ImportError:  # pragma: no cover - depends on environment
    _gmpy2 = None


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = b"\x00" * len(flags[i * i :: i])
    return [i for i in range(2, limit + 1) if flags[i]]


SMALL_PRIMES = _sieve(2048)

# Fixed witness set keeps primality decisions deterministic and identical
# across backends. 40 prime bases is far past overkill for random 256-bit
# candidates.
MR_BASES = SMALL_PRIMES[:40]


class PythonBackend:
    """Stdlib big-int kernels (CPython's long arithmetic is already C)."""

    name = "python"

    @staticmethod
    def powmod(base: int, exp: int, mod: int) -> int:
        return pow(base, exp, mod)

    @staticmethod
    def invert(a: int, mod: int) -> int:
        return pow(a, -1, mod)

    @staticmethod
    def gcd(a: int, b: int) -> int:
        return math.gcd(a, b)

    @staticmethod
    def is_probable_prime(n: int) -> bool:
        if n < 2:
            return False
        for p in SMALL_PRIMES:
            if n == p:
                return True
            if n % p == 0:
                return False
        d = n - 1
        r = 0
        while d % 2 == 0:
            d //= 2
            r += 1
        for a in MR_BASES:
            x = pow(a, d, n)
            if x == 1 or x == n - 1:
                continue
            for _ in range(r - 1):
                x = (x * x) % n
                if x == n - 1:
                    break
            else:
                return False
        return True


class Gmpy2Backend:
    """Same kernels on GMP mpz values via gmpy2."""

    name = "gmpy2"

    @staticmethod
    def powmod(base: int, exp: int, mod: int) -> int:
        return int(_gmpy2.powmod(base, exp, mod))

    @staticmethod
    def invert(a: int, mod: int) -> int:
        try:
            return int(_gmpy2.invert(a, mod))
        except ZeroDivisionError:
            raise ValueError("base is not invertible for the given modulus") from None

    @staticmethod
    def gcd(a: int, b: int) -> int:
        return int(_gmpy2.gcd(a, b))

    @staticmethod
    def is_probable_prime(n: int) -> bool:
        n = _gmpy2.mpz(n)
        if n < 2:
            return False
        for p in SMALL_PRIMES:
            if n == p:
                return True
            if n % p == 0:
                return False
        d = n - 1
        r = 0
        while d % 2 == 0:
            d //= 2
            r += 1
        for a in MR_BASES:
            x = _gmpy2.powmod(a, d, n)
            if x == 1 or x == n - 1:
                continue
            for _ in range(r - 1):
                x = (x * x) % n
                if x == n - 1:
                    break
            else:
                return False
        return True


def available_backends() -> list[str]:
    names = ["python"]
    if _gmpy2 is not None:
        names.append("gmpy2")
    return names


def get_backend(name: str):
    if name == "python":
        return PythonBackend
    if name == "gmpy2":
        if _gmpy2 is None:
            raise RuntimeError("gmpy2 backend requested but gmpy2 is not installed")
        return Gmpy2Backend
    raise ValueError(f"unknown ntheory backend {name!r}")


_forced = os.environ.get("CBDCSIM_NTHEORY")
if _forced:
    ACTIVE = get_backend(_forced)
elif _gmpy2 is not None:
    ACTIVE = Gmpy2Backend
else:
    ACTIVE = PythonBackend

powmod = ACTIVE.powmod
invert = ACTIVE.invert
gcd = ACTIVE.gcd
is_probable_prime = ACTIVE.is_probable_prime


def backend_name() -> str:
    return ACTIVE.name
