"""Hot integer kernels, each with a numba loop and a numpy fallback.

The public names at the bottom dispatch on :data:`qlslab._accel.USE_NUMBA`.
``*_nb`` and ``*_np`` stay importable so tests and the benchmark can compare
them directly.
"""
from __future__ import annotations

import math

import numpy as np

from qlslab._accel import USE_NUMBA, njit

SEGMENT = 1 << 20


# --------------------------------------------------------------------------
# Jacobi / Kronecker symbols
# --------------------------------------------------------------------------

@njit
def _jacobi_scalar_nb(a, n):
    a = a % n
    t = 1
    while a != 0:
        while a % 2 == 0:
            a //= 2
            r = n % 8
            if r == 3 or r == 5:
                t = -t
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            t = -t
        a = a % n
    return t if n == 1 else 0


@njit
def _kronecker_scalar_nb(d, n):
    # n >= 1 here
    t = 1
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v > 0:
        if d % 2 == 0:
            return 0
        r = d % 8
        if v % 2 == 1 and (r == 3 or r == 5):
            t = -t
    return t * _jacobi_scalar_nb(d, n)


@njit
def jacobi_outer_nb(a, n):
    out = np.empty((a.shape[0], n.shape[0]), dtype=np.int8)
    for i in range(a.shape[0]):
        for j in range(n.shape[0]):
            out[i, j] = _jacobi_scalar_nb(a[i], n[j])
    return out


def jacobi_vec_np(a, n):
    """Elementwise Jacobi symbol for broadcastable int64 arrays, ``n`` odd positive."""
    a, n = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(n, dtype=np.int64))
    n = n.copy()
    a = np.mod(a, n)
    t = np.ones(a.shape, dtype=np.int64)
    active = a != 0
    while active.any():
        even = active & (a % 2 == 0)
        while even.any():
            a[even] //= 2
            r = n[even] % 8
            t[even] *= np.where((r == 3) | (r == 5), -1, 1)
            even = active & (a % 2 == 0)
        aa = a[active]
        nn = n[active]
        flip = (aa % 4 == 3) & (nn % 4 == 3)
        t[active] *= np.where(flip, -1, 1)
        a[active] = np.mod(nn, aa)
        n[active] = aa
        active = a != 0
    return np.where(n == 1, t, 0).astype(np.int8)


def jacobi_outer_np(a, n):
    a = np.asarray(a, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    return jacobi_vec_np(a[:, None], n[None, :])


def kronecker_vec_np(d, n):
    """Elementwise Kronecker symbol (d/n) for n >= 1."""
    d, n = np.broadcast_arrays(np.asarray(d, dtype=np.int64), np.asarray(n, dtype=np.int64))
    n = n.copy()
    v = np.zeros(n.shape, dtype=np.int64)
    even = n % 2 == 0
    while even.any():
        n[even] //= 2
        v[even] += 1
        even = n % 2 == 0
    r = np.mod(d, 8)
    two = np.where((v % 2 == 1) & ((r == 3) | (r == 5)), -1, 1)
    two = np.where((v > 0) & (d % 2 == 0), 0, two)
    return (two * jacobi_vec_np(d, n)).astype(np.int8)


@njit
def kronecker_sums_nb(ds, a):
    out = np.zeros(ds.shape[0], dtype=np.float64)
    for i in range(ds.shape[0]):
        d = ds[i]
        acc = 0.0
        for k in range(a.shape[0]):
            if a[k] != 0.0:
                acc += a[k] * _kronecker_scalar_nb(d, k + 1)
        out[i] = acc
    return out


def kronecker_sums_np(ds, a, chunk=1 << 22):
    ds = np.asarray(ds, dtype=np.int64)
    a = np.asarray(a, dtype=np.float64)
    support = np.flatnonzero(a)
    ns = support + 1
    out = np.zeros(ds.shape[0], dtype=np.float64)
    if ns.size == 0:
        return out
    rows = max(1, chunk // ns.size)
    for lo in range(0, ds.size, rows):
        block = kronecker_vec_np(ds[lo:lo + rows, None], ns[None, :])
        out[lo:lo + rows] = block @ a[support]
    return out


# --------------------------------------------------------------------------
# Sieves
# --------------------------------------------------------------------------

@njit
def linear_sieve_nb(limit):
    spf = np.zeros(limit + 1, dtype=np.int32)
    mu = np.zeros(limit + 1, dtype=np.int8)
    primes = np.empty(max(16, limit // 2 + 1), dtype=np.int64)
    count = 0
    if limit >= 1:
        mu[1] = 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            mu[i] = -1
            primes[count] = i
            count += 1
        for j in range(count):
            p = primes[j]
            if p > spf[i] or p * i > limit:
                break
            spf[p * i] = p
            if p == spf[i]:
                mu[p * i] = 0
            else:
                mu[p * i] = -mu[i]
    return spf, mu


def linear_sieve_np(limit):
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    idx = np.arange(limit + 1, dtype=np.int32)
    prime_mask = (spf == 0) & (idx >= 2)
    spf[prime_mask] = idx[prime_mask]
    mu = np.zeros(limit + 1, dtype=np.int8)
    if limit >= 1:
        mu[1:] = 1
    for p in np.flatnonzero(prime_mask):
        mu[p::p] *= -1
        if p * p <= limit:
            mu[p * p::p * p] = 0
    return spf, mu


@njit
def _isqrt_nb(x):
    r = int(np.sqrt(x))
    while r * r > x:
        r -= 1
    while (r + 1) * (r + 1) <= x:
        r += 1
    return r


@njit
def primes_upto_nb(x):
    if x < 2:
        return np.empty(0, dtype=np.int64)
    r = _isqrt_nb(x)
    small = np.ones(r + 1, dtype=np.bool_)
    small[0] = False
    if r >= 1:
        small[1] = False
    for i in range(2, _isqrt_nb(r) + 1):
        if small[i]:
            for j in range(i * i, r + 1, i):
                small[j] = False
    base = np.flatnonzero(small)
    out = np.empty(x // 2 + 2, dtype=np.int64)
    count = 0
    seg = np.empty(SEGMENT, dtype=np.bool_)
    lo = 2
    while lo <= x:
        hi = min(lo + SEGMENT - 1, x)
        size = hi - lo + 1
        seg[:size] = True
        for p in base:
            if p * p > hi:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            for j in range(start, hi + 1, p):
                seg[j - lo] = False
        for k in range(size):
            if seg[k]:
                out[count] = lo + k
                count += 1
        lo = hi + 1
    return out[:count]


def primes_upto_np(x):
    if x < 2:
        return np.empty(0, dtype=np.int64)
    r = math.isqrt(x)
    small = np.ones(r + 1, dtype=bool)
    small[:2] = False
    for i in range(2, math.isqrt(r) + 1):
        if small[i]:
            small[i * i::i] = False
    base = np.flatnonzero(small)
    chunks = []
    lo = 2
    while lo <= x:
        hi = min(lo + SEGMENT - 1, x)
        seg = np.ones(hi - lo + 1, dtype=bool)
        for p in base:
            if p * p > hi:
                break
            start = max(p * p, -(-lo // p) * p)
            seg[start - lo::p] = False
        chunks.append(np.flatnonzero(seg) + lo)
        lo = hi + 1
    return np.concatenate(chunks).astype(np.int64)


@njit
def squarefree_kernels_nb(n_max):
    spf, _ = linear_sieve_nb(n_max)
    s = np.zeros(n_max + 1, dtype=np.int64)
    if n_max >= 1:
        s[1] = 1
    for n in range(2, n_max + 1):
        p = spf[n]
        prev = s[n // p]
        s[n] = prev // p if prev % p == 0 else prev * p
    return s


def squarefree_kernels_np(n_max):
    s = np.arange(n_max + 1, dtype=np.int64)
    r = math.isqrt(n_max)
    for p in primes_upto_np(r):
        p2 = int(p) * int(p)
        pk = p2
        while pk <= n_max:
            s[pk::pk] //= p2
            pk *= p2
    return s


@njit
def divisor_counts_nb(n_max):
    d = np.zeros(n_max + 1, dtype=np.int64)
    for k in range(1, n_max + 1):
        for m in range(k, n_max + 1, k):
            d[m] += 1
    return d


def divisor_counts_np(n_max):
    d = np.zeros(n_max + 1, dtype=np.int64)
    for k in range(1, n_max + 1):
        d[k::k] += 1
    return d


@njit
def legendre_prime_sums_nb(qs, primes):
    out = np.zeros(qs.shape[0], dtype=np.int64)
    for i in range(qs.shape[0]):
        q = qs[i]
        table = np.empty(q, dtype=np.int64)
        for r in range(q):
            table[r] = _jacobi_scalar_nb(r, q)
        acc = 0
        for p in primes:
            if p != q:
                acc += table[p % q]
        out[i] = acc
    return out


def legendre_prime_sums_np(qs, primes):
    qs = np.asarray(qs, dtype=np.int64)
    primes = np.asarray(primes, dtype=np.int64)
    out = np.zeros(qs.shape[0], dtype=np.int64)
    for i, q in enumerate(qs):
        table = jacobi_vec_np(np.arange(q), q).astype(np.int64)
        out[i] = table[primes % q].sum()
    return out


def _pick(nb, np_):
    return nb if USE_NUMBA else np_


def jacobi_outer(a, n):
    """``out[i, j] = (a[i] / n[j])`` for odd positive ``n``."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    n = np.ascontiguousarray(n, dtype=np.int64)
    return _pick(jacobi_outer_nb, jacobi_outer_np)(a, n)


def kronecker_sums(ds, a):
    """``out[i] = sum_k a[k] * (ds[i] / (k + 1))``."""
    ds = np.ascontiguousarray(ds, dtype=np.int64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    return _pick(kronecker_sums_nb, kronecker_sums_np)(ds, a)


def linear_sieve(limit):
    return _pick(linear_sieve_nb, linear_sieve_np)(int(limit))


def primes_upto(x):
    return _pick(primes_upto_nb, primes_upto_np)(int(x))


def squarefree_kernels(n_max):
    return _pick(squarefree_kernels_nb, squarefree_kernels_np)(int(n_max))


def divisor_counts(n_max):
    return _pick(divisor_counts_nb, divisor_counts_np)(int(n_max))


def legendre_prime_sums(qs, primes):
    """``out[i] = sum_{p in primes, p != qs[i]} (p / qs[i])`` for odd prime moduli."""
    qs = np.ascontiguousarray(qs, dtype=np.int64)
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    return _pick(legendre_prime_sums_nb, legendre_prime_sums_np)(qs, primes)
