import math

import pytest


def euler_legendre(a: int, p: int) -> int:
    """Legendre symbol by Euler's criterion (independent of the reciprocity code)."""
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def small_primes(limit: int) -> list[int]:
    return [p for p in range(2, limit) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def factor_trial(n: int) -> dict[int, int]:
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def jacobi_by_factoring(a: int, n: int) -> int:
    out = 1
    for p, e in factor_trial(n).items():
        out *= euler_legendre(a, p) ** e
    return out


@pytest.fixture
def legendre():
    return euler_legendre
