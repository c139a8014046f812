"""Tower-scale numbers and the constant recursion F_r(eps).

``F_r(eps) = Q exp(e^{1/eps_1} + ... + e^{1/eps_r}) / eps_r`` with
``eps_i = P^{1 - 2^i} eps^{2^i}`` overflows every float format long before
``r = 5``, so it is handled through iterated logarithms: a :class:`TowerReal`
``(depth, mantissa)`` stands for ``exp`` applied ``depth`` times to
``mantissa``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Optional, Sequence

from qlslab.config import DEFAULT, Tolerances
from qlslab.records import VerificationRecord

E = math.e
CLAMP = -700.0  # exp() of anything smaller is dropped from log-sum-exp corrections
_EXP_MAX = 709.0


@total_ordering
@dataclass(frozen=True)
class TowerReal:
    """exp^depth(mantissa) in canonical form.

    Canonical means: depth 0 exactly when the value is below e, otherwise
    mantissa lies in [1, e).  Canonical values compare lexicographically on
    (depth, mantissa) because exp^d maps [1, e) onto [exp^{d-1}(e), exp^d(e)).
    """

    depth: int
    mantissa: float

    @classmethod
    def make(cls, depth: int, mantissa: float) -> "TowerReal":
        """Normalise exp^depth(mantissa)."""
        depth = int(depth)
        m = float(mantissa)
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if not math.isfinite(m):
            raise ValueError("mantissa must be finite")
        while True:
            if m >= E:
                m = math.log(m)
                depth += 1
            elif depth > 0 and m < 1.0:
                m = math.exp(m)
                depth -= 1
            else:
                return cls(depth, m)

    @classmethod
    def from_float(cls, x: float) -> "TowerReal":
        return cls.make(0, x)

    def _key(self):
        return (self.depth, self.mantissa)

    def __lt__(self, other: "TowerReal") -> bool:
        return self._key() < other._key()

    def iterated_log(self, k: int) -> float:
        """log_k of the represented value as a float (may be inf)."""
        if k <= self.depth:
            x = self.mantissa
            for _ in range(self.depth - k):
                if x > _EXP_MAX:
                    return math.inf
                x = math.exp(x)
            return x
        x = self.mantissa
        for _ in range(k - self.depth):
            if x <= 0:
                raise ValueError("iterated log undefined: value too small")
            x = math.log(x)
        return x

    def to_float(self) -> float:
        return self.iterated_log(0)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "mantissa": self.mantissa}

    @classmethod
    def from_dict(cls, data: dict) -> "TowerReal":
        return cls.make(data["depth"], data["mantissa"])


def tower_compare(a: TowerReal, b: TowerReal) -> int:
    """-1, 0 or 1 as a <, =, > b."""
    a = TowerReal.make(a.depth, a.mantissa)
    b = TowerReal.make(b.depth, b.mantissa)
    return (a > b) - (a < b)


# --------------------------------------------------------------------------
# xi_r
# --------------------------------------------------------------------------

def xi(r: int) -> Fraction:
    """xi_r in closed form, 1 + 1/(r+1)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return Fraction(r + 2, r + 1)


def xi_recursive(r: int) -> Fraction:
    """xi_r from xi_0 = 2 and xi_r = 2 - 1/xi_{r-1}."""
    if r < 0:
        raise ValueError("r must be >= 0")
    x = Fraction(2)
    for _ in range(r):
        x = 2 - 1 / x
    return x


def xi_sequence(r_max: int) -> Iterable[Fraction]:
    x = Fraction(2)
    yield x
    for _ in range(r_max):
        x = 2 - 1 / x
        yield x


# --------------------------------------------------------------------------
# F_r(eps)
# --------------------------------------------------------------------------

def _log(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


@dataclass(frozen=True)
class RecursionTrace:
    """Log-domain bookkeeping of eps_1..eps_r.

    ``log eps_i = a_i log P + b_i log eps`` with exact integer coefficients
    ``(a_i, b_i) = (1 - 2^i, 2^i)``; ``log_inverse_eps[i-1] = -log eps_i`` is
    the log of the exponent 1/eps_i appearing in F_r.
    """

    epsilon: float
    P: float
    Q: float
    r: int
    coefficients: tuple[tuple[int, int], ...]
    log_inverse_eps: tuple[float, ...]

    @classmethod
    def build(cls, r: int, epsilon, P, Q) -> "RecursionTrace":
        if r < 0:
            raise ValueError("r must be >= 0")
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if P < 1 or Q < 1:
            raise ValueError("P and Q must be >= 1")
        lp, le = _log(P), _log(epsilon)
        coeffs = tuple((1 - 2**i, 2**i) for i in range(r + 1))
        logs = tuple(-(a * lp + b * le) for a, b in coeffs)
        return cls(float(epsilon), float(P), float(Q), int(r), coeffs, logs)

    def log_epsilon(self, i: int) -> float:
        return -self.log_inverse_eps[i]

    @property
    def epsilon_r(self) -> float:
        return math.exp(self.log_epsilon(self.r))

    @property
    def logF_terms(self) -> list[float]:
        """The exponents 1/eps_i, i = 1..r (inf once they leave float range)."""
        return [math.exp(L) if L < _EXP_MAX else math.inf for L in self.log_inverse_eps[1:]]


def log_tower_F(r: int, epsilon, P, Q) -> TowerReal:
    """F_r(eps) as a TowerReal, built at whichever iterated-log level is finite.

    With L_i = log(1/eps_i) and S = sum_i exp(e^{L_i}):
        log F   = log Q + L_r + S
        log_2 F = log S + log1p((log Q + L_r)/S),  log S = e^{L_r} + log1p(sum_{i<r} e^{e^{L_i} - e^{L_r}})
        log_3 F = L_r + log1p((log_2 F - e^{L_r}) e^{-L_r})
    """
    tr = RecursionTrace.build(r, epsilon, P, Q)
    logQ = _log(Q)
    L = tr.log_inverse_eps
    Lr = L[r]
    if r == 0:
        return TowerReal.make(1, logQ + Lr)
    if Lr < _EXP_MAX:
        E_ = [math.exp(x) for x in L[1:]]
        Er = E_[-1]
        if Er < _EXP_MAX:
            logF = logQ + Lr + sum(math.exp(e) for e in E_)
            return TowerReal.make(1, logF)
        gaps = [e - Er for e in E_[:-1]]
        corr = math.log1p(sum(math.exp(g) for g in gaps if g > CLAMP))
        logS = Er + corr
        extra = logQ + Lr
        tiny = math.exp(math.log(extra) - logS) if extra > 0 and math.log(extra) - logS > CLAMP else 0.0
        return TowerReal.make(2, logS + math.log1p(tiny))
    # e^{L_r} is beyond float range; every correction below it is < e^{-700} relative
    return TowerReal.make(3, Lr)


def direct_log_F(r: int, epsilon, P, Q) -> float:
    """log F_r(eps) by straightforward float evaluation (small parameters only)."""
    tr = RecursionTrace.build(r, epsilon, P, Q)
    eps = [math.exp(tr.log_epsilon(i)) for i in range(r + 1)]
    return math.log(Q) + sum(math.exp(1.0 / e) for e in eps[1:]) - math.log(eps[r])


def y_of_eps(epsilon, P, Q, r: Optional[int] = None) -> tuple[int, TowerReal, float]:
    """(r, F_r(eps), log_4 F_r(eps)) with r = floor(1/eps) unless given."""
    eps = Fraction(epsilon) if isinstance(epsilon, (Fraction, int, str)) else epsilon
    if r is None:
        r = math.floor(1 / eps)
    F = log_tower_F(r, eps, P, Q)
    return r, F, F.iterated_log(4)


def prop_fe_sweep(epsilons: Sequence, P=10, Q=10, cfg: Tolerances = DEFAULT,
                  r: Optional[int] = None) -> list[VerificationRecord]:
    """y(eps) * eps across the sweep, with y = log_4 F_{floor(1/eps)}(eps).

    One record per eps (inside the configured band) plus a summary record
    whose lhs is max/min of y*eps across the sweep.
    """
    lo, hi = cfg.prop_fe_band
    out, products = [], []
    for e in epsilons:
        e = Fraction(e) if isinstance(e, str) else e
        if not 0 < e <= Fraction(1, 4):
            raise ValueError("each epsilon must lie in (0, 1/4]")
        rr, F, y = y_of_eps(e, P, Q, r)
        prod = y * float(e)
        products.append(prod)
        out.append(VerificationRecord(
            "towerrec.prop_fe", {"epsilon": str(e), "P": str(P), "Q": str(Q), "r": rr},
            prod, hi, lo <= prod <= hi,
            "exp_4(C1/eps) <= F_{floor(1/eps)}(eps) <= exp_4(C2/eps)",
            {"depth": F.depth, "mantissa": F.mantissa, "y": y, "band": [lo, hi]}))
    if products:
        spread = max(products) / min(products)
        out.append(VerificationRecord(
            "towerrec.prop_fe_spread", {"epsilons": [str(e) for e in epsilons], "P": str(P), "Q": str(Q)},
            spread, cfg.prop_fe_max_spread, spread <= cfg.prop_fe_max_spread,
            "y(eps) eps confined to one interval [c1, c2]",
            {"min": min(products), "max": max(products)}))
    return out


def sweep_rows(epsilons: Sequence, P=10, Q=10) -> list[dict]:
    """CSV rows (epsilon, r, depth, mantissa, y_times_eps)."""
    rows = []
    for e in epsilons:
        e = Fraction(e) if isinstance(e, str) else e
        r, F, y = y_of_eps(e, P, Q)
        rows.append({"epsilon": str(e), "r": r, "depth": F.depth, "mantissa": F.mantissa,
                     "y_times_eps": y * float(e)})
    return rows
