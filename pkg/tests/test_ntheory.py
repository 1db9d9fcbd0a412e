"""Backend agreement: every kernel gives identical answers on both backends."""

import random

import pytest

from cbdcsim import ntheory


BACKENDS = [ntheory.get_backend(name) for name in ntheory.available_backends()]


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_powmod_against_builtin(backend):
    rnd = random.Random(5)
    for _ in range(200):
        a = rnd.getrandbits(256)
        e = rnd.getrandbits(64)
        m = rnd.getrandbits(256) | 1
        assert backend.powmod(a, e, m) == pow(a, e, m)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_invert(backend):
    rnd = random.Random(6)
    for _ in range(100):
        m = rnd.getrandbits(128) | 1
        a = rnd.getrandbits(100) | 1
        if ntheory.PythonBackend.gcd(a, m) != 1:
            continue
        inv = backend.invert(a, m)
        assert (a * inv) % m == 1
    with pytest.raises(ValueError):
        backend.invert(6, 9)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_primality_known_values(backend):
    carmichael = 561  # 3 * 11 * 17, classic pseudoprime
    assert not backend.is_probable_prime(carmichael)
    assert not backend.is_probable_prime(2047)  # strong pseudoprime to base 2
    for p in (2, 3, 104729, 2**61 - 1):
        assert backend.is_probable_prime(p)
    assert not backend.is_probable_prime(104729 * 104723)


def test_backends_agree_on_random_candidates():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    rnd = random.Random(7)
    for _ in range(50):
        candidate = rnd.getrandbits(128) | 1
        answers = {backend.is_probable_prime(candidate) for backend in BACKENDS}
        assert len(answers) == 1


def test_active_backend_is_exposed():
    assert ntheory.backend_name() in ntheory.available_backends()
