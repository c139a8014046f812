"""Large-sieve quantities over Jacobi-symbol matrices.

Ranges follow the dyadic convention ``N < n <= 2N`` restricted to odd
squarefree integers.  ``sigma`` uses the orientation ``(n/m)`` (rows ``m``),
``sigma_dual`` the flipped symbol ``(m/n)``; ``bnorm(M, N)`` is the squared
top singular value of the ``(n/m)`` matrix, so ``bnorm(N, M)`` is the norm
for the dual orientation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional

import numpy as np

from qlslab import kernels
from qlslab.config import DEFAULT, Tolerances
from qlslab.ntcore import dyadic_bounds, squarefree_odd_range
from qlslab.records import VerificationRecord

KINDS = ("ones", "square_indicator", "prime_indicator", "random_signs", "explicit")


# --------------------------------------------------------------------------
# coefficient families
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientFamily:
    """A reproducible rule n -> a_n.

    ``support`` is an inclusive integer interval ``(lo, hi)`` or ``None`` for
    "no restriction"; values outside it are zero.  ``random_signs`` needs a
    finite support because its signs are drawn from a generator seeded by
    ``(seed, lo, hi)``.
    """

    kind: str
    support: Optional[tuple[int, int]] = None
    seed: Optional[int] = None
    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient family {self.kind!r}")
        if self.kind == "random_signs" and (self.support is None or self.seed is None):
            raise ValueError("random_signs needs a seed and a finite support")
        if self.support is not None and self.support[0] > self.support[1] + 1:
            raise ValueError(f"bad support {self.support}")

    # constructors -------------------------------------------------------
    @classmethod
    def ones(cls, support=None):
        return cls("ones", support)

    @classmethod
    def square_indicator(cls, support=None):
        return cls("square_indicator", support)

    @classmethod
    def prime_indicator(cls, support=None):
        return cls("prime_indicator", support)

    @classmethod
    def random_signs(cls, seed: int, support: tuple[int, int]):
        return cls("random_signs", (int(support[0]), int(support[1])), int(seed))

    @classmethod
    def explicit(cls, values: Mapping[int, float]):
        items = tuple(sorted((int(n), float(v)) for n, v in values.items()))
        support = (items[0][0], items[-1][0]) if items else (1, 0)
        return cls("explicit", support, entries=items)

    @classmethod
    def zeros(cls):
        return cls.explicit({})

    # evaluation --------------------------------------------------------
    @property
    def label(self) -> str:
        if self.kind == "random_signs":
            return f"random_signs(seed={self.seed})"
        return self.kind

    def values(self, ns) -> np.ndarray:
        """a_n at each integer in ``ns`` (float64)."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size == 0:
            return np.zeros(0)
        if self.kind == "ones":
            out = np.ones(ns.shape)
        elif self.kind == "square_indicator":
            r = np.floor(np.sqrt(np.maximum(ns, 0).astype(np.float64))).astype(np.int64)
            r += (r + 1) * (r + 1) <= ns
            r -= r * r > ns
            out = ((r * r == ns) & (ns > 0)).astype(np.float64)
        elif self.kind == "prime_indicator":
            top = int(ns.max())
            is_prime = np.zeros(max(top, 1) + 1, dtype=bool)
            if top >= 2:
                is_prime[kernels.primes_upto(top)] = True
            out = np.where(ns > 0, is_prime[np.clip(ns, 0, None)], False).astype(np.float64)
        elif self.kind == "random_signs":
            lo, hi = self.support
            signs = _signs(self.seed, lo, hi)
            inside = (ns >= lo) & (ns <= hi)
            out = np.zeros(ns.shape)
            out[inside] = signs[ns[inside] - lo]
        else:
            table = dict(self.entries)
            out = np.array([table.get(int(n), 0.0) for n in ns.ravel()]).reshape(ns.shape)
        if self.support is not None:
            lo, hi = self.support
            out = np.where((ns >= lo) & (ns <= hi), out, 0.0)
        return out


@lru_cache(maxsize=256)
def _signs(seed: int, lo: int, hi: int) -> np.ndarray:
    rng = np.random.default_rng([seed, lo, hi])
    out = rng.choice(np.array([-1.0, 1.0]), size=max(hi - lo + 1, 0))
    out.setflags(write=False)
    return out


def dyadic_support(N) -> tuple[int, int]:
    return dyadic_bounds(N)


def initial_support(N) -> tuple[int, int]:
    return 1, int(math.floor(N))


# --------------------------------------------------------------------------
# symbol matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymbolMatrix:
    """Dense matrix ``entries[i, j] = (cols[j] / rows[i])`` over odd squarefree dyadic ranges."""

    rows: np.ndarray
    cols: np.ndarray
    entries: np.ndarray

    @classmethod
    def build(cls, M, N, dual: bool = False) -> "SymbolMatrix":
        rows = np.array(squarefree_odd_range(M), dtype=np.int64)
        cols = np.array(squarefree_odd_range(N), dtype=np.int64)
        if dual:
            entries = kernels.jacobi_outer(rows, cols)
        else:
            entries = kernels.jacobi_outer(cols, rows).T.copy()
        for arr in (rows, cols, entries):
            arr.setflags(write=False)
        return cls(rows, cols, entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def gram(self) -> np.ndarray:
        """Gram matrix on the smaller side (float64, exact integer entries)."""
        E = self.entries.astype(np.float64)
        if E.shape[0] <= E.shape[1]:
            return E @ E.T
        return E.T @ E


def _sum_of_squares(S: SymbolMatrix, a: CoefficientFamily) -> float:
    if S.entries.size == 0:
        return 0.0
    v = a.values(S.cols)
    inner = S.entries.astype(np.float64) @ v
    return float(np.dot(inner, inner))


def sigma(M, N, a: CoefficientFamily) -> float:
    """Σ over m ∼ M of |Σ over n ∼ N of a_n (n/m)|², both ranges odd squarefree."""
    return _sum_of_squares(SymbolMatrix.build(M, N), a)


def sigma_dual(M, N, a: CoefficientFamily) -> float:
    """As :func:`sigma` with the symbol flipped to (m/n)."""
    return _sum_of_squares(SymbolMatrix.build(M, N, dual=True), a)


# --------------------------------------------------------------------------
# spectral norm
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BNormResult:
    value: float
    iterations: int
    converged: bool
    zero_matrix: bool
    shape: tuple[int, int]


def _start_vectors(k: int):
    yield np.ones(k)
    i = np.arange(k, dtype=np.float64)
    yield np.where(i % 2 == 0, 1.0, -1.0) * (1.0 + i / max(k, 1))


def top_eigenvalue_power(G: np.ndarray, rel_tol: float, max_iter: int) -> tuple[float, int, bool]:
    """Largest eigenvalue of a PSD matrix by power iteration.

    Two deterministic starts (all-ones and an alternating ramp) are run and
    the larger Rayleigh quotient kept, so a start orthogonal to the top
    eigenspace cannot silently under-report.
    """
    best, total, all_conv = 0.0, 0, True
    for v in _start_vectors(G.shape[0]):
        v = v / np.linalg.norm(v)
        lam_prev = None
        converged = False
        for it in range(1, max_iter + 1):
            w = G @ v
            lam = float(v @ w)
            nw = np.linalg.norm(w)
            total += 1
            if nw == 0.0:
                lam, converged = 0.0, True
                break
            v = w / nw
            if lam_prev is not None and abs(lam - lam_prev) <= rel_tol * abs(lam):
                converged = True
                break
            lam_prev = lam
        all_conv &= converged
        best = max(best, lam)
    return best, total, all_conv


def bnorm_info(M, N, tol: Optional[float] = None, cfg: Tolerances = DEFAULT) -> BNormResult:
    S = SymbolMatrix.build(M, N)
    tol = cfg.power_rel_tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if min(S.shape) == 0:
        return BNormResult(0.0, 0, True, True, S.shape)
    G = S.gram()
    if not G.any():
        return BNormResult(0.0, 0, True, True, S.shape)
    lam, its, conv = top_eigenvalue_power(G, tol, cfg.power_max_iter)
    return BNormResult(lam, its, conv, False, S.shape)


def bnorm(M, N, tol: Optional[float] = None, cfg: Tolerances = DEFAULT) -> float:
    """B(M, N): sup of sigma(M, N, a) / ||a||^2, via power iteration on the Gram matrix."""
    return bnorm_info(M, N, tol, cfg).value


def jacobi_eigenvalues(A: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    if n <= 1 or scale == 0.0:
        return np.diag(A).copy()
    eps = np.finfo(np.float64).eps
    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(A * A) - np.sum(np.diag(A) ** 2)), 0.0))
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= eps * eps * scale:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
    return np.diag(A).copy()


def bnorm_oracle(M, N, cfg: Tolerances = DEFAULT) -> float:
    """Independent B(M, N): top Gram eigenvalue from cyclic Jacobi sweeps (dims <= 64)."""
    S = SymbolMatrix.build(M, N)
    if max(S.shape) > cfg.oracle_max_dim:
        raise ValueError(f"oracle limited to {cfg.oracle_max_dim} rows/cols, got {S.shape}")
    if min(S.shape) == 0:
        return 0.0
    return float(max(jacobi_eigenvalues(S.gram()).max(), 0.0))


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------

def duality_check(M, N, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    lhs = bnorm(M, N, cfg=cfg)
    rhs = 2.0 * bnorm(N, M, cfg=cfg)
    passed = lhs <= rhs * (1.0 + cfg.duality_slack)
    return VerificationRecord(
        "sievequant.duality", {"M": str(M), "N": str(N)}, lhs, rhs, passed,
        "B(M,N) <= 2 B(N,M)",
        {"slack_factor": rhs / lhs if lhs > 0 else None, "numeric_slack": cfg.duality_slack})


def trivial_bound_check(M, N, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    if N < 2:
        raise ValueError("trivial_bound_check needs N >= 2")
    lhs = bnorm(M, N, cfg=cfg)
    rhs = float(M) + float(N) ** 2 * math.log(float(N))
    ratio = lhs / rhs
    return VerificationRecord(
        "sievequant.trivial_bound", {"M": str(M), "N": str(N)}, lhs, rhs,
        ratio <= cfg.trivial_bound_constant,
        "B(M,N) << M + N^2 log N",
        {"fitted_constant": cfg.trivial_bound_constant})


def sigma_sup_check(M, N, a: CoefficientFamily, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    """sigma(M, N, a) <= B(M, N) ||a||^2 (definition of the supremum)."""
    S = SymbolMatrix.build(M, N)
    v = a.values(S.cols)
    lhs = _sum_of_squares(S, a)
    rhs = bnorm(M, N, cfg=cfg) * float(v @ v)
    return VerificationRecord(
        "sievequant.sigma_sup", {"M": str(M), "N": str(N), "family": a.label}, lhs, rhs,
        lhs <= rhs * (1.0 + 1e-9) + 1e-9, "Sigma(M,N,a) <= B(M,N) ||a||^2")


def dual_sequence_check(M, N, a: CoefficientFamily, max_support: int = 12) -> VerificationRecord:
    """Exhibit a' with |a'| = |a| and sigma(M,N,a) <= 2 sigma_dual(M,N,a') by exhaustive sign search."""
    S = SymbolMatrix.build(M, N)
    D = SymbolMatrix.build(M, N, dual=True)
    v = a.values(S.cols)
    nz = np.flatnonzero(v)
    if nz.size > max_support:
        raise ValueError(f"support {nz.size} exceeds exhaustive-search cap {max_support}")
    lhs = _sum_of_squares(S, a)
    E = D.entries.astype(np.float64)
    best, best_signs = -1.0, None
    mags = np.abs(v[nz])
    for signs in itertools.product((1.0, -1.0), repeat=nz.size):
        w = np.zeros_like(v)
        w[nz] = mags * np.array(signs)
        inner = E @ w
        val = float(inner @ inner)
        if val > best:
            best, best_signs = val, signs
    best = max(best, 0.0)
    witness = {int(S.cols[i]): float(s * m) for i, s, m in zip(nz, best_signs or (), mags)}
    return VerificationRecord(
        "sievequant.dual_sequence", {"M": str(M), "N": str(N), "family": a.label},
        lhs, 2.0 * best, lhs <= 2.0 * best * (1.0 + 1e-12) + 1e-12,
        "exists a' with |a'|=|a| and Sigma(M,N,a) <= 2 Sigma_1(M,N,a')",
        {"witness": {str(k): v for k, v in witness.items()}})


def _int_range(D) -> np.ndarray:
    lo, hi = dyadic_bounds(D)
    return np.arange(lo, hi + 1, dtype=np.int64)


def bilinear_S(M, N, D, a: CoefficientFamily, b: CoefficientFamily,
               cfg: Tolerances = DEFAULT) -> float:
    """Brute-force Σ_{d∼D} Σ*_{m∼M} |Σ*_{(n1,n2)=1, d | n1 n2} a_{n1} b_{n2} (m / n1 n2)|."""
    ms = np.array(squarefree_odd_range(M), dtype=np.int64)
    ns = np.array(squarefree_odd_range(N), dtype=np.int64)
    ds = _int_range(D)
    work = ds.size * ms.size * ns.size * ns.size
    if work > cfg.bilinear_max_work:
        raise ValueError(f"bilinear_S work {work} exceeds cap {cfg.bilinear_max_work}")
    if work == 0:
        return 0.0
    J = kernels.jacobi_outer(ms, ns).astype(np.float64)  # (m / n)
    X = J * a.values(ns)[None, :]
    Y = J * b.values(ns)[None, :]
    coprime = np.gcd.outer(ns, ns) == 1
    prod = np.multiply.outer(ns, ns)
    total = 0.0
    for d in ds:
        mask = (coprime & (prod % d == 0)).astype(np.float64)
        inner = np.einsum("mi,ij,mj->m", X, mask, Y)
        total += float(np.abs(inner).sum())
    return total


def square_pair_sum(a: CoefficientFamily, N: int) -> float:
    """Σ over ordered n1, n2 <= N with n1 n2 a square of |a_{n1} a_{n2}|.

    n1 n2 is a square iff s(n1) = s(n2), so this is Σ_k (Σ_{s(n)=k} |a_n|)^2.
    """
    N = int(N)
    if N < 1:
        return 0.0
    v = np.abs(a.values(np.arange(1, N + 1)))
    kern = kernels.squarefree_kernels(N)[1:]
    groups = np.bincount(kern, weights=v, minlength=N + 1)
    return float(np.dot(groups, groups))


def square_pair_bound_check(a: CoefficientFamily, N: int, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    if N < 2:
        raise ValueError("square_pair_bound_check needs N >= 2")
    lhs = square_pair_sum(a, N)
    amax = float(np.max(np.abs(a.values(np.arange(1, N + 1)))))
    C = cfg.square_pair_constant
    rhs = C * N * math.log(N) * amax**2
    return VerificationRecord(
        "sievequant.square_pair_bound", {"N": int(N), "family": a.label}, lhs, rhs,
        lhs <= rhs, "sum over n1 n2 = square of |a a| << (N log N) max|a_n|^2",
        {"fitted_constant": C})
