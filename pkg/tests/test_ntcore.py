import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlslab import kernels
from qlslab.ntcore import (
    ArithmeticTables,
    QuadraticCharacter,
    fundamental_discriminants,
    gauss_sum,
    jacobi,
    kappa,
    kronecker,
    multiplicative_stats,
    squarefree_odd_range,
    squarefree_part,
)

from conftest import euler_legendre, factor_trial, jacobi_by_factoring, small_primes


@pytest.mark.parametrize("a,n,expected", [(1, 9, 1), (2, 15, 1), (7, 15, -1), (3, 9, 0)])
def test_jacobi_examples(a, n, expected):
    assert jacobi(a, n) == expected


@pytest.mark.parametrize("n", [0, -3, 4, 10])
def test_jacobi_rejects_bad_modulus(n):
    with pytest.raises(ValueError):
        jacobi(3, n)


def test_jacobi_matches_euler_criterion_small_primes():
    for p in small_primes(200)[1:]:
        for a in range(-p, 2 * p):
            assert jacobi(a, p) == euler_legendre(a, p)


def test_jacobi_matches_factoring_oracle():
    for n in range(1, 400, 2):
        for a in range(-30, 60):
            assert jacobi(a, n) == jacobi_by_factoring(a, n)


def test_jacobi_multiplicativity_random_triples():
    rng = random.Random(1234)
    for _ in range(10_000):
        a, b = rng.randint(-10**6, 10**6), rng.randint(-10**6, 10**6)
        m, n = 2 * rng.randint(0, 10**4) + 1, 2 * rng.randint(0, 10**4) + 1
        assert jacobi(a, n) * jacobi(b, n) == jacobi(a * b, n)
        assert jacobi(a, m) * jacobi(a, n) == jacobi(a, m * n)


@given(st.integers(-10**12, 10**12), st.integers(0, 10**9))
@settings(max_examples=300, deadline=None)
def test_jacobi_zero_iff_common_factor(a, k):
    n = 2 * k + 1
    assert (jacobi(a, n) == 0) == (math.gcd(a, n) > 1)


@pytest.mark.parametrize("d,n,expected", [(-4, 3, -1), (5, 5, 0), (8, 3, -1)])
def test_kronecker_examples(d, n, expected):
    assert kronecker(d, n) == expected


def test_kronecker_conventions():
    assert kronecker(1, 0) == 1 and kronecker(-1, 0) == 1 and kronecker(5, 0) == 0
    # (d/2) is 1 for d = +-1 mod 8, -1 for d = +-3 mod 8, 0 for even d
    assert [kronecker(d, 2) for d in (1, 7, 3, 5, 4)] == [1, 1, -1, -1, 0]
    assert kronecker(-3, -1) == -1 and kronecker(5, -1) == 1


def test_kronecker_vectorised_matches_scalar():
    ds = np.arange(-60, 61)
    ns = np.arange(1, 90)
    table = kernels.kronecker_vec_np(ds[:, None], ns[None, :])
    for i, d in enumerate(ds):
        for j, n in enumerate(ns):
            assert table[i, j] == kronecker(int(d), int(n))


@pytest.mark.parametrize("m,expected", [(1, 1), (12, 3), (18, 2), (-50, 2), (-1, 1)])
def test_squarefree_part_examples(m, expected):
    assert squarefree_part(m) == expected


def test_squarefree_part_rejects_zero():
    with pytest.raises(ValueError):
        squarefree_part(0)


def test_squarefree_part_reconstructs_up_to_1e6():
    kern = kernels.squarefree_kernels(10**6)
    n = np.arange(1, 10**6 + 1)
    k = kern[1:]
    quotient = n // k
    root = np.rint(np.sqrt(quotient)).astype(np.int64)
    assert np.all(n % k == 0)
    assert np.all(root * root == quotient)
    spot = random.Random(7).sample(range(1, 10**6 + 1), 300)
    assert all(squarefree_part(-m) == kern[m] for m in spot)
    # squarefree: no p^2 divides k for small p, and k is its own kernel on a sample
    assert all(squarefree_part(int(kern[m])) == kern[m] for m in spot)


@pytest.mark.parametrize("n,expected", [(12, (0, 2, 6)), (1, (1, 0, 1)), (15, (1, 2, 4)), (30, (-1, 3, 8))])
def test_multiplicative_stats(n, expected):
    assert multiplicative_stats(n) == expected


def test_squarefree_four_pow_omega_is_d_squared():
    tbl = ArithmeticTables.build(5000)
    for n in range(1, 5001):
        mu, omega, d = multiplicative_stats(n, tbl)
        if mu != 0:
            assert d == 2**omega and 4**omega == d * d


def test_tables_invariants():
    tbl = ArithmeticTables.build(3000)
    mu = tbl.mobius.astype(int)
    assert np.array_equal(mu == 0, ~tbl.is_squarefree)
    for p in small_primes(3000):
        assert tbl.smallest_prime_factor[p] == p
    for n in range(1, 3001):
        s = sum(mu[d] for d in range(1, n + 1) if n % d == 0)
        assert s == (1 if n == 1 else 0)


def test_tables_fall_back_beyond_limit():
    tbl = ArithmeticTables.build(100)
    assert multiplicative_stats(10_007 * 3, tbl) == (1, 2, 4)
    assert tbl.factor(2**5 * 101) == {2: 5, 101: 1}


def test_tables_backends_agree():
    a = kernels.linear_sieve_nb(20_000)
    b = kernels.linear_sieve_np(20_000)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_gauss_sum_examples():
    assert gauss_sum(1) == 1
    assert gauss_sum(5) == pytest.approx(math.sqrt(5), abs=1e-12)
    assert gauss_sum(3) == pytest.approx(1j * math.sqrt(3), abs=1e-12)


@pytest.mark.parametrize("q", [2, 9, 0, 45])
def test_gauss_sum_rejects(q):
    with pytest.raises(ValueError):
        gauss_sum(q)


def test_gauss_sum_modulus_and_phase_up_to_500():
    for q in range(3, 501, 2):
        if any(e > 1 for e in factor_trial(q).values()):
            continue
        tau = gauss_sum(q)
        assert abs(abs(tau) ** 2 - q) <= 1e-10 * q
        if q % 4 == 1:
            assert abs(tau.imag) < 1e-9 and tau.real > 0
        else:
            assert abs(tau.real) < 1e-9 and tau.imag > 0


@pytest.mark.parametrize("delta,q,expected", [
    (1, 7, 1.0),
    (3, 5, 1 + 3 ** -0.5),
    (3, 11, 1 - 3 ** -0.5),
    (12, 5, (1 - (-1) / math.sqrt(2)) * (1 + 3 ** -0.5)),
])
def test_kappa(delta, q, expected):
    assert kappa(delta, q) == pytest.approx(expected, rel=1e-14)


def test_fundamental_discriminants_examples():
    assert [c.discriminant for c in fundamental_discriminants(4)] == [-3, -4]
    assert [c.discriminant for c in fundamental_discriminants(12)] == [-3, -4, 5, -7, -8, 8, -11, 12]
    assert fundamental_discriminants(2) == []


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def test_fundamental_characters_are_primitive_up_to_200():
    for chi in fundamental_discriminants(200):
        f = chi.conductor
        table = chi.period_table()
        units = [a for a in range(1, f) if math.gcd(a, f) == 1]
        assert all(table[a] in (-1, 1) for a in units)
        # completely multiplicative and periodic
        assert all(chi(a) * chi(b) == chi(a * b) for a in range(1, 12) for b in range(1, 12))
        assert all(chi(n) == chi(n + f) for n in range(1, 40))
        assert any(table[a] == -1 for a in units)
        # not induced from any proper divisor: some a = 1 (mod m) has chi(a) = -1
        for m in _divisors(f)[:-1]:
            assert any(table[a] == -1 for a in units if a % m == 1 % m), (chi, m)


def test_quadratic_character_rejects_nonfundamental():
    for d in (1, 0, 9, -12, 20, 3):
        with pytest.raises(ValueError):
            QuadraticCharacter(d)


@pytest.mark.parametrize("N,expected", [(2, [3]), (4, [5, 7]), (Fraction(1, 2), [1]), (0.5, [1]), (10, [11, 13, 15, 17, 19])])
def test_squarefree_odd_range(N, expected):
    assert squarefree_odd_range(N) == expected


def test_squarefree_odd_range_endpoints():
    # 25 is excluded (not squarefree), 2N itself is included when odd squarefree
    assert squarefree_odd_range(Fraction(15, 2)) == [11, 13, 15]
    assert squarefree_odd_range(Fraction(21, 2)) == [11, 13, 15, 17, 19, 21]
    with pytest.raises(ValueError):
        squarefree_odd_range(0.25)
