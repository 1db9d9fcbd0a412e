"""Named, seeded randomness streams.

Every actor in a run owns one stream, derived from the master seed and the
stream's name. Derivation hashes (seed, name) rather than chaining parent
state, so adding or removing an actor never perturbs another actor's draws.
All draws bottom out in getrandbits, which is stable across CPython
versions; nothing here uses the float-based Random API.
"""

from __future__ import annotations

import hashlib
import random


def _derive_seed(master_seed: int, name: str) -> int:
    material = f"{master_seed}/{name}".encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


class RngStream:
    """Single-consumer deterministic stream with a draw counter."""

    def __init__(self, name: str, seed: int, master_seed: int | None = None):
        self.name = name
        self.seed = seed
        self._master_seed = master_seed if master_seed is not None else seed
        self._random = random.Random(seed)
        self.draw_index = 0

    def child(self, name: str) -> "RngStream":
        full = f"{self.name}/{name}" if self.name else name
        return RngStream(full, _derive_seed(self._master_seed, full), self._master_seed)

    def getrandbits(self, bits: int) -> int:
        self.draw_index += 1
        return self._random.getrandbits(bits)

    def randbelow(self, upper: int) -> int:
        # Rejection sampling on getrandbits keeps draws version-stable.
        if upper <= 0:
            raise ValueError("upper must be positive")
        bits = upper.bit_length()
        while True:
            value = self.getrandbits(bits)
            if value < upper:
                return value

    def randrange(self, lower: int, upper: int) -> int:
        return lower + self.randbelow(upper - lower)

    def random_bytes(self, n: int) -> bytes:
        return self.getrandbits(8 * n).to_bytes(n, "big")

    def uniform(self) -> float:
        return self.getrandbits(53) / (1 << 53)


def master_stream(seed: int) -> RngStream:
    return RngStream("", seed, master_seed=seed)
