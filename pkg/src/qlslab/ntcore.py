"""Exact integer and quadratic-character arithmetic."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from qlslab import kernels

DEFAULT_TABLE_LIMIT = 10**7


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) by the binary reciprocity algorithm."""
    a = int(a)
    n = int(n)
    if n <= 0 or n % 2 == 0:
        raise ValueError(f"Jacobi symbol needs odd positive n, got {n}")
    a %= n
    t = 1
    while a:
        while not a & 1:
            a >>= 1
            if n & 7 in (3, 5):
                t = -t
        a, n = n, a
        if a & 3 == 3 and n & 3 == 3:
            t = -t
        a %= n
    return t if n == 1 else 0


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n), defined for every integer n."""
    d = int(d)
    n = int(n)
    if n == 0:
        return 1 if d in (1, -1) else 0
    t = 1
    if n < 0:
        n = -n
        if d < 0:
            t = -1
    v = (n & -n).bit_length() - 1
    n >>= v
    if v:
        if d % 2 == 0:
            return 0
        if v % 2 and d % 8 in (3, 5):
            t = -t
    return t * jacobi(d, n)


def _factor(n: int) -> dict[int, int]:
    n = abs(int(n))
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True, eq=False)
class ArithmeticTables:
    """Smallest-prime-factor and Mobius tables up to ``limit`` (linear sieve).

    Immutable after construction; factorisations beyond ``limit`` fall back
    to trial division.
    """

    limit: int
    smallest_prime_factor: np.ndarray
    mobius: np.ndarray

    @classmethod
    def build(cls, limit: int = DEFAULT_TABLE_LIMIT) -> "ArithmeticTables":
        if limit < 1:
            raise ValueError("limit must be positive")
        spf, mu = kernels.linear_sieve(limit)
        spf.setflags(write=False)
        mu.setflags(write=False)
        return cls(int(limit), spf, mu)

    @property
    def is_squarefree(self) -> np.ndarray:
        return self.mobius != 0

    def factor(self, n: int) -> dict[int, int]:
        n = int(n)
        if n < 1:
            raise ValueError("factor expects n >= 1")
        if n > self.limit:
            return _factor(n)
        out: dict[int, int] = {}
        while n > 1:
            p = int(self.smallest_prime_factor[n])
            out[p] = out.get(p, 0) + 1
            n //= p
        return out


@lru_cache(maxsize=4)
def tables(limit: int = DEFAULT_TABLE_LIMIT) -> ArithmeticTables:
    return ArithmeticTables.build(limit)


def factorize(n: int, tbl: Optional[ArithmeticTables] = None) -> dict[int, int]:
    if tbl is not None:
        return tbl.factor(n)
    return _factor(n)


def squarefree_part(m: int, tbl: Optional[ArithmeticTables] = None) -> int:
    """The positive squarefree k with |m|/k a perfect square."""
    if m == 0:
        raise ValueError("squarefree_part(0) is undefined")
    k = 1
    for p, e in factorize(abs(m), tbl).items():
        if e % 2:
            k *= p
    return k


def is_squarefree(n: int, tbl: Optional[ArithmeticTables] = None) -> bool:
    n = abs(int(n))
    if n == 0:
        return False
    if tbl is not None and n <= tbl.limit:
        return bool(tbl.mobius[n] != 0)
    return all(e == 1 for e in _factor(n).values())


def multiplicative_stats(n: int, tbl: Optional[ArithmeticTables] = None) -> tuple[int, int, int]:
    """(mu(n), omega(n), d(n))."""
    if n < 1:
        raise ValueError("multiplicative_stats expects n >= 1")
    fac = factorize(n, tbl)
    omega = len(fac)
    d = math.prod(e + 1 for e in fac.values())
    mu = 0 if any(e > 1 for e in fac.values()) else (-1) ** omega
    return mu, omega, d


def gauss_sum(q: int) -> complex:
    """Quadratic Gauss sum sum_{a mod q} (a/q) e(a/q) by direct summation."""
    q = int(q)
    if q < 1 or q % 2 == 0 or not is_squarefree(q):
        raise ValueError(f"gauss_sum needs odd squarefree q >= 1, got {q}")
    if q == 1:
        return 1 + 0j
    total = 0j
    for a in range(1, q):
        s = jacobi(a, q)
        if s:
            total += s * cmath.exp(2j * math.pi * a / q)
    return total


def kappa(delta: int, q: int) -> float:
    """prod_{p | delta} (1 - (p/q) p^{-1/2})."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    out = 1.0
    for p in _factor(delta):
        out *= 1.0 - jacobi(p, q) / math.sqrt(p)
    return out


def is_fundamental_discriminant(d: int) -> bool:
    d = int(d)
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


@dataclass(frozen=True, order=True)
class QuadraticCharacter:
    """The primitive quadratic character n -> (d/n) of a fundamental discriminant d."""

    discriminant: int

    def __post_init__(self):
        if not is_fundamental_discriminant(self.discriminant):
            raise ValueError(f"{self.discriminant} is not a fundamental discriminant")

    @property
    def conductor(self) -> int:
        return abs(self.discriminant)

    @property
    def parity(self) -> int:
        """0 for even characters (d > 0), 1 for odd ones."""
        return 0 if self.discriminant > 0 else 1

    def __call__(self, n: int) -> int:
        return kronecker(self.discriminant, n)

    def values(self, n_max: int) -> np.ndarray:
        """chi(1), ..., chi(n_max) as int8."""
        if n_max < 1:
            return np.zeros(0, dtype=np.int8)
        return kernels.kronecker_vec_np(self.discriminant, np.arange(1, n_max + 1))

    def period_table(self) -> np.ndarray:
        """chi(0), ..., chi(q - 1)."""
        n = np.arange(self.conductor)
        out = np.zeros(self.conductor, dtype=np.int8)
        out[1:] = kernels.kronecker_vec_np(self.discriminant, n[1:])
        return out


def fundamental_discriminants(Q: int) -> list[QuadraticCharacter]:
    """All fundamental d != 1 with |d| <= Q, by conductor then sign (negative first)."""
    out = []
    for q in range(3, int(Q) + 1):
        for d in (-q, q):
            if is_fundamental_discriminant(d):
                out.append(QuadraticCharacter(d))
    return out


def discriminants_in(lo: int, hi: int) -> list[QuadraticCharacter]:
    """Characters with conductor in (lo, hi]."""
    return [chi for chi in fundamental_discriminants(hi) if chi.conductor > lo]


def dyadic_bounds(N) -> tuple[int, int]:
    """Integer endpoints (first, last) of the range N < n <= 2N."""
    N = Fraction(N)
    return math.floor(N) + 1, math.floor(2 * N)


def squarefree_odd_range(N) -> list[int]:
    """Odd squarefree integers n with N < n <= 2N."""
    if Fraction(N) < Fraction(1, 2):
        raise ValueError("N must be >= 1/2")
    lo, hi = dyadic_bounds(N)
    start = lo if lo % 2 else lo + 1
    return [n for n in range(start, hi + 1, 2) if is_squarefree(n)]
