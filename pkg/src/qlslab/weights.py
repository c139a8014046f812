"""The bump weight W, its exact derivatives, Fourier and Mellin transforms,
and the two Poisson summation checks.

Conventions
-----------
* ``W(x) = exp(8/3 - 2/(1 - (x - 3/2)^2))`` on the open interval (1/2, 5/2),
  zero elsewhere, so ``W = e^{8/3} * omega(x - 3/2)`` with
  ``omega(t) = h(t) h(-t)`` and ``h(t) = exp(-1/(1 - t))``.
* Fourier transform: ``What(k) = int W(x) e^{-2 pi i k x} dx``; the j-th
  derivative in k is the same integral with the extra factor ``(-2 pi i x)^j``.
* Mellin transform: ``rho_pm(s) = int_0^inf rho(pm x) x^{s-1} dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from qlslab import kernels
from qlslab.config import DEFAULT, Tolerances
from qlslab.ntcore import gauss_sum, is_squarefree, multiplicative_stats
from qlslab.quadrature import QuadratureError, composite_gl, panel_rule
from qlslab.records import VerificationRecord

CENTER = 1.5
LEFT, RIGHT = 0.5, 2.5
LOG_NORM = 8.0 / 3.0
NORM = math.exp(LOG_NORM)
PROP_WX_C1 = 8.0 * NORM


# --------------------------------------------------------------------------
# W and its derivatives
# --------------------------------------------------------------------------

def weight_eval(x):
    """W(x); zero outside the open support, including the endpoints."""
    x = np.asarray(x, dtype=np.float64)
    t = x - CENTER
    inside = np.abs(t) < 1.0
    ts = np.where(inside, t, 0.0)
    out = np.where(inside, np.exp(LOG_NORM - 2.0 / (1.0 - ts * ts)), 0.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def h_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients (ascending in u) of P_n with h^{(n)}(t) = P_n(u) e^{-u}, u = 1/(1-t).

    From du/dt = u^2: P_0 = 1 and P_{n+1} = u^2 (P_n' - P_n).
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    if n == 0:
        return (1,)
    prev = h_poly(n - 1)
    deriv = [i * c for i, c in enumerate(prev)][1:] + [0]
    diff = [d - c for d, c in zip(deriv, prev)]
    return (0, 0) + tuple(diff)


def _poly_exp(coeffs: Sequence[int], u: np.ndarray) -> np.ndarray:
    """P(u) e^{-u} without overflow for large u."""
    c = np.array([float(v) for v in coeffs])
    deg = len(c) - 1
    out = np.zeros_like(u)
    small = u < 1.0
    if small.any():
        us = u[small]
        acc = np.zeros_like(us)
        for ci in c[::-1]:
            acc = acc * us + ci
        out[small] = acc * np.exp(-us)
    big = ~small
    if big.any():
        ub = u[big]
        w = 1.0 / ub
        acc = np.zeros_like(ub)
        for ci in c:  # Horner in w for sum_i c_i w^{deg-i} = u^{-deg} P(u)
            acc = acc * w + ci
        out[big] = acc * np.exp(deg * np.log(ub) - ub)
    return out


def h_derivative(n: int, t) -> np.ndarray:
    """h^{(n)}(t) for h(t) = exp(-1/(1-t)) (zero for t >= 1)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    ok = t < 1.0
    if ok.any():
        u = 1.0 / (1.0 - t[ok])
        out[ok] = _poly_exp(h_poly(n), u)
    return out


def omega_derivative(j: int, t) -> np.ndarray:
    """omega^{(j)}(t) for omega(t) = h(t) h(-t) on (-1, 1), by Leibniz."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    if not inside.any():
        return out
    ti = t[inside]
    acc = np.zeros_like(ti)
    for k in range(j + 1):
        sign = -1.0 if (j - k) % 2 else 1.0
        acc += math.comb(j, k) * sign * h_derivative(k, ti) * h_derivative(j - k, -ti)
    out[inside] = acc
    return out


def weight_derivative(j: int, x):
    """W^{(j)}(x), exact analytic form; identically zero off the open support."""
    if j < 0:
        raise ValueError("order must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    out = NORM * omega_derivative(j, np.atleast_1d(x) - CENTER)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def chebyshev_grid(n: int = 10_000) -> np.ndarray:
    """n Chebyshev points of the first kind, strictly inside (1/2, 5/2)."""
    k = np.arange(n)
    return np.sort(CENTER + np.cos(math.pi * (k + 0.5) / n))


def derivative_bound(j: int) -> float:
    """(8 e^{8/3})^j j^{3j}."""
    return PROP_WX_C1**j * float(j) ** (3 * j)


def derivative_table(j_max: int, grid_points: int = 10_000) -> list[dict]:
    """Rows (j, empirical_sup, bound, slack) for j = 1..j_max."""
    grid = chebyshev_grid(grid_points)
    rows = []
    for j in range(1, j_max + 1):
        sup = float(np.max(np.abs(weight_derivative(j, grid))))
        bound = derivative_bound(j)
        rows.append({"j": j, "empirical_sup": sup, "bound": bound, "slack": bound / sup})
    return rows


def derivative_bound_check(j_max: int, cfg: Tolerances = DEFAULT) -> list[VerificationRecord]:
    if not 1 <= j_max <= 12:
        raise ValueError("j_max must lie in 1..12")
    out = []
    for row in derivative_table(j_max, cfg.sup_grid_points):
        out.append(VerificationRecord(
            "weights.derivative_bound", {"j": row["j"], "grid": cfg.sup_grid_points},
            row["empirical_sup"], row["bound"], row["empirical_sup"] <= row["bound"],
            "|W^(j)(x)| <= (8 e^{8/3})^j j^{3j}", {"slack": row["slack"]}))
    return out


# --------------------------------------------------------------------------
# Faa di Bruno, quadratic inner function
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def faa_di_bruno_coefficients(n: int) -> tuple[int, ...]:
    """n! / (2^r r! (n-2r)!) for r = 0..n//2."""
    if n < 0:
        raise ValueError("order must be >= 0")
    return tuple(math.factorial(n) // (2**r * math.factorial(r) * math.factorial(n - 2 * r))
                 for r in range(n // 2 + 1))


def faa_di_bruno_quadratic(f_derivs: Callable, g: Sequence[float], n: int, x):
    """n-th derivative of f(g(x)) for quadratic g = g0 + g1 x + g2 x^2.

    ``f_derivs(m, y)`` must return f^{(m)}(y) (arrays allowed).
    """
    g0, g1, g2 = (list(g) + [0.0, 0.0, 0.0])[:3]
    x = np.asarray(x)
    gx = g0 + g1 * x + g2 * x * x
    gp = g1 + 2.0 * g2 * x
    gpp = 2.0 * g2
    total = 0
    for r, c in enumerate(faa_di_bruno_coefficients(n)):
        total = total + c * f_derivs(n - r, gx) * gp ** (n - 2 * r) * gpp**r
    return total


# --------------------------------------------------------------------------
# Fourier transform
# --------------------------------------------------------------------------

class FourierQuadrature:
    """Evaluates What^{(j)}(k) for many k at once.

    Works in the centred variable t = x - 3/2:

        What^{(j)}(k) = e^{-3 pi i k} int_{-1}^{1} W(3/2+t) (-2 pi i (3/2+t))^j e^{-2 pi i k t} dt.

    For k != 0 the path is moved off the real segment to
    t = tau - i sgn(k) (1 - tau^2)/2.  The integrand is entire apart from the
    endpoints, which the path reaches at 45 degrees, where omega still decays.
    Along this path |e^{-2 pi i k t}| = e^{-pi |k| (1 - tau^2)}, so the integrand
    is never much larger than the result and the super-polynomial decay of
    What is resolved in relative rather than absolute precision.

    Each |k| is integrated on a composite rule whose panels are at most one
    period wide (GL inside, tanh-sinh on the end panels) and again with twice
    as many panels; the difference is the reported error.
    """

    LIFT = 0.5

    def __init__(self, j_max: int = 0, base_panels: int = 16, chunk: int = 1 << 22):
        self.j_max = int(j_max)
        self.base_panels = int(base_panels)
        self.chunk = int(chunk)
        self._tables: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def panels_for(self, k_abs: float) -> int:
        need = max(self.base_panels, int(math.ceil(2.0 * k_abs)))
        return 1 << (need - 1).bit_length()

    def _table(self, panels: int, sign: int):
        key = (panels, sign)
        tab = self._tables.get(key)
        if tab is None:
            tau, w = panel_rule(-1.0, 1.0, panels)
            lift = self.LIFT * sign
            t = tau - 1j * lift * (1.0 - tau * tau)
            dt = w * (1.0 + 2j * lift * tau)
            gap = 1.0 - t * t
            gap = np.where(gap == 0, 1e-300, gap)
            base = dt * NORM * np.exp(-2.0 / gap)
            x = CENTER + t
            cols = [base * (-2j * math.pi * x) ** j for j in range(self.j_max + 1)]
            tab = (t, np.stack(cols, axis=1))
            self._tables[key] = tab
        return tab

    def _eval(self, k: np.ndarray, panels: int, sign: int) -> np.ndarray:
        t, F = self._table(panels, sign)
        out = np.empty((k.size, F.shape[1]), dtype=np.complex128)
        step = max(1, self.chunk // max(t.size, 1))
        for s in range(0, k.size, step):
            kk = k[s:s + step]
            E = np.exp(-2j * math.pi * np.outer(kk, t))
            out[s:s + step] = E @ F
        phase = np.exp(-3j * math.pi * np.mod(k, 2.0))
        return out * phase[:, None]

    def transform(self, k) -> tuple[np.ndarray, np.ndarray]:
        """(values, errors), each of shape ``k.shape + (j_max + 1,)``."""
        k = np.asarray(k, dtype=np.float64)
        flat = k.ravel()
        vals = np.empty((flat.size, self.j_max + 1), dtype=np.complex128)
        errs = np.empty((flat.size, self.j_max + 1))
        panels = np.array([self.panels_for(abs(v)) for v in flat], dtype=np.int64)
        signs = np.sign(flat).astype(np.int64)
        for p in np.unique(panels):
            for sg in (-1, 0, 1):
                idx = np.flatnonzero((panels == p) & (signs == sg))
                if idx.size == 0:
                    continue
                coarse = self._eval(flat[idx], int(p), sg)
                fine = self._eval(flat[idx], int(2 * p), sg)
                vals[idx] = fine
                errs[idx] = np.abs(fine - coarse)
        shape = k.shape + (self.j_max + 1,)
        return vals.reshape(shape), errs.reshape(shape)


def derivative_scale(j: int) -> float:
    """max |2 pi x|^j on the support; the natural size of What^{(j)}."""
    return (2.0 * math.pi * RIGHT) ** j


def weight_fourier_table(k, j_max: int = 0, abs_tol: Optional[float] = None,
                         cfg: Tolerances = DEFAULT, engine: Optional[FourierQuadrature] = None):
    """What^{(j)}(k) for j = 0..j_max; raises QuadratureError if the self-check fails.

    The tolerance applies to What^{(j)} / (5 pi)^j so that all orders are held
    to the same relative standard.
    """
    abs_tol = cfg.fourier_abs_tol if abs_tol is None else abs_tol
    if abs_tol <= 0:
        raise ValueError("abs_tol must be positive")
    engine = engine or FourierQuadrature(j_max)
    vals, errs = engine.transform(k)
    scales = np.array([derivative_scale(j) for j in range(j_max + 1)])
    worst = float(np.max(errs / scales)) if errs.size else 0.0
    if worst > abs_tol:
        raise QuadratureError(f"Fourier quadrature self-check {worst:.3g} exceeds {abs_tol:.3g}")
    return vals


def weight_fourier(k, abs_tol: Optional[float] = None, j: int = 0, cfg: Tolerances = DEFAULT):
    """What^{(j)}(k) = int W(x) (-2 pi i x)^j e^{-2 pi i k x} dx."""
    vals = weight_fourier_table(k, j, abs_tol, cfg)[..., j]
    return complex(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True)
class DecayEnvelope:
    """|What(k)| <= exp(A - B sqrt|k|) on the fitted range."""

    A: float
    B: float
    k_max: float

    def __call__(self, k):
        return np.exp(self.A - self.B * np.sqrt(np.abs(k)))

    def tail_sum(self, c: float, H: int) -> float:
        """Bound for sum_{h > H} exp(A - B sqrt(c h)) via the integral from H."""
        z = self.B * math.sqrt(c * H)
        return math.exp(self.A) * 2.0 / (c * self.B**2) * (1.0 + z) * math.exp(-z)


@lru_cache(maxsize=1)
def fourier_envelope(k_max: float = 400.0) -> DecayEnvelope:
    """Upper envelope exp(A - B sqrt|k|) for |What(k)|.

    B = 2 sqrt(pi) is the saddle-point rate of omega(t) e^{-2 pi i k t} at the
    endpoints (the remaining factor is a decreasing power of k); A is fitted
    as the maximum of log|What(k)| + B sqrt(k) over a fine grid up to k_max.
    """
    B = 2.0 * math.sqrt(math.pi)
    k = np.arange(0.25, k_max, 0.25)
    mags = np.abs(weight_fourier(k, abs_tol=1e-10))
    A = float(np.max(np.log(mags) + B * np.sqrt(k)))
    return DecayEnvelope(A, B, float(k_max))


# --------------------------------------------------------------------------
# psi(x) = What(a x^2) and its derivatives
# --------------------------------------------------------------------------

def psi_derivatives(a: float, n_max: int, x, abs_tol: float = 1e-10) -> np.ndarray:
    """psi^{(n)}(x) for psi(x) = What(a x^2), n = 0..n_max; shape (n_max+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    table = weight_fourier_table(a * x * x, n_max, abs_tol)  # (len(x), n_max+1)

    def f_derivs(m, y):
        return table[:, m]

    return np.stack([faa_di_bruno_quadratic(f_derivs, (0.0, 0.0, a), n, x) for n in range(n_max + 1)])


def psi_decay_check(a: int, n_max: int, x_max: float = 50.0, split: float = 25.0,
                    points: int = 981) -> list[VerificationRecord]:
    """Check |psi^{(n)}(x)| <= C_n / x^2 on [1, x_max].

    C_n is fitted as the sup of |psi^{(n)}| x^2 over [1, split]; the check
    passes when the same quantity over [split, x_max] does not exceed it,
    i.e. the x^{-2} envelope fitted on the head also covers the tail.
    """
    if a not in (1, -1, 2, -2):
        raise ValueError("a must be one of +-1, +-2")
    if not 0 <= n_max <= 6:
        raise ValueError("n_max must lie in 0..6")
    x = np.linspace(1.0, x_max, points)
    derivs = psi_derivatives(float(a), n_max, x)
    out = []
    for n in range(n_max + 1):
        scaled = np.abs(derivs[n]) * x * x
        head = float(scaled[x <= split].max())
        tail = float(scaled[x >= split].max())
        out.append(VerificationRecord(
            "weights.psi_decay", {"a": a, "n": n, "x_max": x_max, "split": split},
            tail, head, tail <= head,
            "|psi^(n)(x)| <= C_4^n n^{9n} |x|^{-2}, psi(x) = What(a x^2)",
            {"fitted_constant": head, "envelope_exponent": -2}))
    return out


# --------------------------------------------------------------------------
# Mellin transforms
# --------------------------------------------------------------------------

def _auto_xmax(g: Callable, tol: float) -> float:
    x = 1.0
    while x < 1e6:
        probe = np.abs(g(np.array([x, 1.5 * x, 2.0 * x]))) * 2.0 * x
        if probe.max() < tol * 1e-3:
            return x
        x *= 2.0
    return x


def _mellin_rule(sigma_min: float, t_abs_max: float, log_xmax: float, panels_scale: int):
    v_lo = -40.0 / (sigma_min + 1.0) - 5.0
    width = min(0.5, math.pi / max(t_abs_max, 1.0)) / panels_scale
    n_left = max(2, int(math.ceil(-v_lo / width)))
    n_right = max(2, int(math.ceil(max(log_xmax, 0.0) / width)))
    vl, wl = composite_gl(v_lo, 0.0, n_left)
    vr, wr = composite_gl(0.0, max(log_xmax, 1e-3), n_right)
    return vl, wl, vr, wr


def mellin_pm(rho: Callable, sign: int, s, abs_tol: Optional[float] = None,
              x_max: Optional[float] = None, cfg: Tolerances = DEFAULT):
    """rho_pm(s) = int_0^inf rho(pm x) x^{s-1} dx, for Re s > 0.

    Split as rho(0)/s + int_0^1 (rho(pm x) - rho(0)) x^{s-1} dx + int_1^inf,
    with x = e^v and Gauss-Legendre panels in v; checked at doubled resolution.
    """
    abs_tol = cfg.mellin_abs_tol if abs_tol is None else abs_tol
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    if np.any(s_arr.real <= 0):
        raise ValueError("Mellin integral diverges at 0 for Re(s) <= 0")

    def g(x):
        return np.asarray(rho(sign * np.asarray(x, dtype=np.float64)), dtype=np.float64)

    rho0 = float(g(np.array([0.0]))[0])
    if x_max is None:
        x_max = _auto_xmax(g, abs_tol)
    log_xmax = math.log(x_max)
    sigma_min = float(s_arr.real.min())
    t_max = float(np.abs(s_arr.imag).max())

    def evaluate(scale):
        vl, wl, vr, wr = _mellin_rule(sigma_min, t_max, log_xmax, scale)
        fl = wl * (g(np.exp(vl)) - rho0)
        fr = wr * g(np.exp(vr))
        out = np.empty(s_arr.size, dtype=np.complex128)
        step = max(1, (1 << 21) // (vl.size + vr.size))
        for i in range(0, s_arr.size, step):
            ss = s_arr[i:i + step]
            out[i:i + step] = np.exp(np.outer(ss, vl)) @ fl + np.exp(np.outer(ss, vr)) @ fr
        return out + rho0 / s_arr

    coarse = evaluate(1)
    fine = evaluate(2)
    err = float(np.max(np.abs(fine - coarse)))
    if err > abs_tol:
        raise QuadratureError(f"Mellin self-check {err:.3g} exceeds {abs_tol:.3g}")
    return complex(fine[0]) if np.ndim(s) == 0 else fine.reshape(np.shape(s))


def gaussian(x):
    """e^{-x^2}, the Mellin test function (rho_+(s) = Gamma(s/2)/2)."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x * x)


def mellin_l1_integral(rho: Callable, sigma: float, t_max: float = 50.0, sign: int = 1) -> float:
    """int_{|t|<=t_max} |rho_pm(sigma + it)| dt, in t = sigma sinh(tau) to resolve the peak at t = 0."""
    tau_max = math.asinh(t_max / sigma)
    tau, w = composite_gl(-tau_max, tau_max, int(math.ceil(2 * tau_max / 0.25)))
    t = sigma * np.sinh(tau)
    vals = mellin_pm(rho, sign, sigma + 1j * t, abs_tol=1e-8)
    return float(np.sum(w * sigma * np.cosh(tau) * np.abs(vals)))


def mellin_l1_check(rho: Callable = gaussian, sigma_list: Sequence[float] = (0.2, 0.1, 0.05),
                    t_max: float = 50.0, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    """sigma * int |rho_+(sigma+it)| dt stays bounded as sigma -> 0+."""
    sigmas = [float(s) for s in sigma_list]
    if any(not 0 < s <= 0.5 for s in sigmas):
        raise ValueError("sigma values must lie in (0, 1/2]")
    integrals = [mellin_l1_integral(rho, s, t_max) for s in sigmas]
    products = [s * i for s, i in zip(sigmas, integrals)]
    spread = max(products) / min(products)
    order = np.argsort(sigmas)[::-1]
    halving_ok = True
    for a, b in zip(order[:-1], order[1:]):
        s_hi, s_lo = sigmas[a], sigmas[b]
        if s_lo >= s_hi / 2 - 1e-12 and integrals[b] > 3 * integrals[a]:
            halving_ok = False
    return VerificationRecord(
        "weights.mellin_l1", {"sigma_list": sigmas, "t_max": t_max},
        spread, cfg.mellin_l1_spread, spread <= cfg.mellin_l1_spread and halving_ok,
        "int |rho_pm(sigma+it)| dt << 1/sigma as sigma -> 0+",
        {"integrals": integrals, "sigma_times_integral": products, "halving_at_most_triples": halving_ok})


# --------------------------------------------------------------------------
# Poisson summation with a quadratic character
# --------------------------------------------------------------------------

def poisson_sides(q: int, M: float, h_cut: Optional[int] = None,
                  cfg: Tolerances = DEFAULT) -> dict:
    """Both sides of sum_m W(m/M)(m/q) = (M tau(q)/q) sum_h What(hM/q)(h/q)."""
    q = int(q)
    if q < 3 or q % 2 == 0 or not is_squarefree(q):
        raise ValueError("q must be odd squarefree >= 3")
    M = float(M)
    lo, hi = int(math.floor(LEFT * M)) + 1, int(math.ceil(RIGHT * M)) - 1
    m = np.arange(max(lo, 1), hi + 1)
    chi_m = kernels.jacobi_vec_np(m, q).astype(np.float64) if m.size else np.zeros(0)
    lhs = float(np.sum(weight_eval(m / M) * chi_m)) if m.size else 0.0

    env = fourier_envelope()
    c = M / q
    amp = M * math.sqrt(q) / q
    if h_cut is None:
        H = 1
        while 2.0 * amp * env.tail_sum(c, H) > cfg.poisson_tail_floor:
            H = max(H + 1, int(H * 1.25))
    else:
        H = int(h_cut)
    tail = 2.0 * amp * env.tail_sum(c, H)
    h = np.arange(1, H + 1)
    chi_h = kernels.jacobi_vec_np(h, q).astype(np.float64)
    What = weight_fourier(h * c, abs_tol=1e-12)
    minus_one = 1.0 if q % 4 == 1 else -1.0
    inner = np.sum(chi_h * (What + minus_one * np.conj(What)))
    rhs_c = M * gauss_sum(q) / q * inner
    return {"lhs": lhs, "rhs": rhs_c, "h_cut": H, "tail_estimate": tail}


def poisson_character_check(q: int, M, h_cut: Optional[int] = None,
                            cfg: Tolerances = DEFAULT) -> VerificationRecord:
    sides = poisson_sides(q, float(M), h_cut, cfg)
    diff = abs(sides["lhs"] - sides["rhs"])
    allowed = cfg.poisson_abs_tol + sides["tail_estimate"]
    return VerificationRecord(
        "weights.poisson_character", {"q": int(q), "M": str(M), "h_cut": sides["h_cut"]},
        diff, allowed, diff <= allowed,
        "sum_m W(m/M)(m/q) = (M tau(q)/q) sum_h What(hM/q)(h/q)",
        {"lhs": sides["lhs"], "rhs": sides["rhs"], "tail_estimate": sides["tail_estimate"]})


# --------------------------------------------------------------------------
# Truncated Poisson summation over integers coprime to k
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A Schwartz test function with known transform and integral."""

    name: str
    value: Callable
    hat: Callable
    integral: float
    radius: float  # |psi(x)| is negligible beyond this

    __test__ = False  # not a pytest class


def _gauss(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-math.pi * x * x)


GAUSSIAN = TestFunction("gaussian", _gauss, _gauss, 1.0, 7.0)
ZERO = TestFunction("zero", lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
                    lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)), 0.0, 1.0)


def _divisors(k: int) -> list[int]:
    return [d for d in range(1, k + 1) if k % d == 0]


def poisson_truncated_terms(k: int, X: float, X1: float, X2: float, L: int,
                            psi: TestFunction = GAUSSIAN) -> dict:
    if k < 2:
        raise ValueError("k must be >= 2")
    if not 0 < X1 <= X <= X2:
        raise ValueError("need 0 < X1 <= X <= X2")
    if L < (X2 / X) ** 2:
        raise ValueError("need L >= (X2/X)^2")
    n_max = int(math.ceil(psi.radius * X)) + 1
    n = np.arange(-n_max, n_max + 1)
    coprime = np.gcd(n, k) == 1
    exact = float(np.sum(psi.value(n[coprime] / X)))

    divs = _divisors(k)
    mu = {d: multiplicative_stats(d)[0] for d in divs}
    phi_over_k = sum(mu[d] / d for d in divs)
    psi0 = float(psi.value(np.array([0.0]))[0])
    T1 = phi_over_k * X * psi.integral
    T2 = -psi0 * sum(mu[d] for d in divs if d <= X2)
    T3 = -sum(mu[d] * X / d for d in divs if d > X2) * psi.integral
    ls = np.array([l for l in range(-int(L), int(L) + 1) if l != 0], dtype=np.float64)
    T4 = sum(mu[d] * X / d * float(np.sum(psi.hat(ls * X / d)))
             for d in divs if X1 < d <= X2)
    return {"exact": exact, "T1": T1, "T2": T2, "T3": T3, "T4": T4}


def poisson_truncated_check(k: int, X: float, X1: float, X2: float, L: int, A: float,
                            psi: TestFunction = GAUSSIAN,
                            cfg: Tolerances = DEFAULT) -> VerificationRecord:
    """Residual of the four-main-term expansion against C * X * J^{-A}, J = min(X/X1, X2/X)."""
    terms = poisson_truncated_terms(k, X, X1, X2, L, psi)
    main = terms["T1"] + terms["T2"] + terms["T3"] + terms["T4"]
    residual = abs(terms["exact"] - main)
    J = min(X / X1, X2 / X)
    envelope = cfg.poisson2_constant * X * J ** (-A)
    return VerificationRecord(
        "weights.poisson_truncated",
        {"k": k, "X": X, "X1": X1, "X2": X2, "L": L, "A": A, "psi": psi.name},
        residual, envelope, residual <= envelope,
        "coprime Poisson sum = four main terms + O(X J^{-A})",
        dict(terms, J=J, fitted_constant=cfg.poisson2_constant))


def poisson2_calibrate(cases: Sequence[tuple], psi: TestFunction = GAUSSIAN) -> float:
    """max residual / (X J^{-A}) over ``(k, X, X1, X2, L, A)`` tuples (the fitted constant)."""
    worst = 0.0
    for k, X, X1, X2, L, A in cases:
        t = poisson_truncated_terms(k, X, X1, X2, L, psi)
        res = abs(t["exact"] - t["T1"] - t["T2"] - t["T3"] - t["T4"])
        J = min(X / X1, X2 / X)
        worst = max(worst, res / (X * J ** (-A)))
    return worst
