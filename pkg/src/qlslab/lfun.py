"""Quadratic Dirichlet L-functions: complex Gamma, V_s(y), direct values, AFE.

The approximate functional equation checked here is

    L(s, chi)^2 = sum d(n) chi(n) n^{-s} V_s(n/q) + eps(t) sum d(n) chi(n) n^{-(1-s)} V_{1-s}(n/q)

for s = 1/2 + it, with

    V_s(y) = (1/2 pi i) int_(c) (pi y)^{-u} e^{u^2} [Gamma((s+u+a)/2) / Gamma((s+a)/2)]^2 du/u.

eps(t) is never derived; it is solved for and its modulus is checked.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from filelock import FileLock

from qlslab import kernels
from qlslab.config import DEFAULT, Tolerances
from qlslab.ntcore import QuadraticCharacter
from qlslab.quadrature import QuadratureError
from qlslab.records import VerificationRecord

# --------------------------------------------------------------------------
# Gamma
# --------------------------------------------------------------------------

LANCZOS_G = 607 / 128
LANCZOS_COEFFS = np.array([
    0.99999999999999709182,
    57.156235665862923517, -59.597960355475491248, 14.136097974741747174,
    -0.49191381609762019978, 0.33994649984811888699e-4, 0.46523628927048575665e-4,
    -0.98374475304879564677e-4, 0.15808870322491248884e-3, -0.21026444172410488319e-3,
    0.21743961811521264320e-3, -0.16431810653676389022e-3, 0.84418223983852743293e-4,
    -0.26190838401581408670e-4, 0.36899182659531622704e-5,
])
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
POLE_DISTANCE = 1e-12


class PoleError(ValueError):
    """Gamma evaluated at (or within POLE_DISTANCE of) a nonpositive integer."""


@dataclass(frozen=True)
class GammaEngine:
    """Lanczos series (g = 607/128, 15 terms) with reflection for Re z < 1/2.

    Accuracy target: relative 1e-12 for Re z in [-10, 30], |Im z| <= 100.
    Works in log form so that ratios of large Gammas never overflow.
    """

    g: float = LANCZOS_G
    domain_re: tuple = (-10.0, 30.0)
    domain_im: float = 100.0
    rel_tol: float = 1e-12

    def loggamma(self, z) -> np.ndarray:
        """A logarithm of Gamma(z) (branch unspecified; exp of it is exact)."""
        z = np.asarray(z, dtype=complex)
        near = np.abs(z - np.round(z.real)) < POLE_DISTANCE
        if np.any(near & (np.round(z.real) <= 0)):
            raise PoleError("Gamma evaluated at a pole")
        left = z.real < 0.5
        w = np.where(left, 1.0 - z, z)
        out = _lanczos_log(w, self.g)
        if np.any(left):
            # Gamma(z) = pi / (sin(pi z) Gamma(1 - z))
            out = np.where(left, math.log(math.pi) - _log_sin_pi(z) - out, out)
        return out

    def gamma(self, z):
        v = np.exp(self.loggamma(z))
        return complex(v) if np.ndim(v) == 0 else v


def _lanczos_log(z: np.ndarray, g: float) -> np.ndarray:
    ser = np.full(z.shape, LANCZOS_COEFFS[0], dtype=complex)
    for j, c in enumerate(LANCZOS_COEFFS[1:], 1):
        ser = ser + c / (z + j)
    tmp = z + g + 0.5
    return (z + 0.5) * np.log(tmp) - tmp + _LOG_SQRT_2PI + np.log(ser / z)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log sin(pi z), stable for large |Im z|.

    For sgn = sign(Im z): sin(pi z) = e^{-i sgn pi z} (1 - e^{2 i sgn pi z}) / (-2i sgn).
    """
    big = np.abs(z.imag) > 20
    direct = np.log(np.sin(np.pi * np.where(big, 0.5, z)))
    sgn = np.where(z.imag >= 0, 1.0, -1.0)
    zz = np.where(big, z, 0.5j)
    far = -1j * sgn * np.pi * zz + np.log1p(-np.exp(2j * sgn * np.pi * zz)) - np.log(-2j * sgn)
    return np.where(big, far, direct)


GAMMA = GammaEngine()


def loggamma(z):
    return GAMMA.loggamma(z)


def gamma_complex(z) -> complex:
    """Gamma(z) for complex z; raises PoleError at nonpositive integers."""
    return GAMMA.gamma(z)


# --------------------------------------------------------------------------
# Stirling ratio
# --------------------------------------------------------------------------

def stirling_ratio_check(s_list: Sequence[complex], u_grid: Sequence[complex],
                         C: float = math.e, cfg: Tolerances = DEFAULT) -> list[VerificationRecord]:
    """|Gamma(s+u)/Gamma(s)| against C^x x^{2x} |t|^x e^{pi|y|/2}, u = x + iy.

    One record per s; lhs is the fitted constant max(ratio / envelope).
    """
    out = []
    u = np.asarray(u_grid, dtype=complex)
    x, y = u.real, u.imag
    if np.any((x < 1) | (x > 20) | (np.abs(y) > 50)):
        raise ValueError("u must satisfy x in [1, 20], |y| <= 50")
    for s in s_list:
        s = complex(s)
        if not (0 <= s.real <= 1 and abs(s.imag) >= 1):
            raise ValueError("s must satisfy sigma in [0, 1], |t| >= 1")
        log_ratio = (loggamma(s + u) - loggamma(s)).real
        log_env = x * math.log(C) + 2 * x * np.log(x) + x * math.log(abs(s.imag)) + math.pi * np.abs(y) / 2
        excess = log_ratio - log_env
        fitted = float(np.exp(np.max(excess)))
        worst = int(np.argmax(excess))
        out.append(VerificationRecord(
            "lfun.stirling", {"s": [s.real, s.imag], "grid_size": int(u.size), "C": C},
            fitted, cfg.stirling_c_max, fitted <= cfg.stirling_c_max,
            "Gamma(s+u)/Gamma(s) << C^x x^{2x} |t|^x e^{pi|y|/2}",
            {"worst_u": [float(x[worst]), float(y[worst])]}))
    return out


# --------------------------------------------------------------------------
# V_s(y)
# --------------------------------------------------------------------------

MAX_LINE = 6.0
MIN_POS_LINE = 0.25


def _check_s(s: complex) -> complex:
    s = complex(s)
    if not 0 <= s.real <= 1 or abs(s.imag) < 1:
        raise ValueError("V_s needs 0 <= Re s <= 1 and |Im s| >= 1")
    return s


def choose_line(s: complex, y: float, a: int) -> float:
    """Real part of the integration line, near the saddle of the integrand modulus.

    For small y the saddle lies left of 0; the line then sits halfway to the
    first Gamma pole and the residue 1 at u = 0 is added back.
    """
    c = 0.5 * (math.log(math.pi * y) - math.log(abs(s + a) / 2))
    left_room = s.real + a
    if c < MIN_POS_LINE:
        if left_room >= 0.2:
            return max(c, -left_room / 2)
        return MIN_POS_LINE
    return min(c, MAX_LINE)


def _vs_kernel(s: complex, a: int, c: float, v: np.ndarray) -> np.ndarray:
    """e^{u^2} [Gamma((s+u+a)/2)/Gamma((s+a)/2)]^2 / u on u = c + iv."""
    u = c + 1j * v
    lg = loggamma((s + u + a) / 2) - loggamma((s + a) / 2)
    return np.exp(u * u + 2 * lg) / u


def _halfwidth(s: complex, a: int, c: float, log_piy_extreme: float, abs_tol: float, H0: float) -> float:
    # smallest H (step 1) with the integrand at +-H below abs_tol * 1e-3 for the worst y
    H = H0
    while H < 200:
        g = _vs_kernel(s, a, c, np.array([-H, H]))
        mag = np.max(np.abs(g)) * math.exp(-c * log_piy_extreme)
        if mag < abs_tol * 1e-3:
            return H
        H += 1.0
    raise QuadratureError("V_s integrand does not decay")


def _vs_line(s: complex, ys: np.ndarray, a: int, c: float, abs_tol: float,
             cfg: Tolerances, chunk: int = 2048) -> tuple[np.ndarray, float]:
    """Trapezoid along Re u = c with step halving until successive sums agree."""
    logpy = np.log(np.pi * ys)
    extreme = logpy.min() if c > 0 else logpy.max()
    H = _halfwidth(s, a, c, extreme, abs_tol, cfg.vs_min_halfwidth)
    h = 0.5
    v = np.arange(-H, H + h / 2, h)

    def partial(vn):
        g = _vs_kernel(s, a, c, vn)
        acc = np.empty(ys.size, dtype=complex)
        for i in range(0, ys.size, chunk):
            lp = logpy[i:i + chunk]
            acc[i:i + chunk] = np.exp(-np.outer(lp, c + 1j * vn)) @ g
        return acc

    total = partial(v)
    est = h * total / (2 * math.pi)
    for _ in range(10):
        mid = v[:-1] + h / 2
        total = total + partial(mid)
        v = np.sort(np.concatenate([v, mid]))
        h /= 2
        new = h * total / (2 * math.pi)
        err = float(np.max(np.abs(new - est)))
        est = new
        if err <= abs_tol:
            if c < 0:
                est = est + 1.0
            return est, err
    raise QuadratureError(f"V_s trapezoid did not converge (last change {err:.3g})")


def vs_eval_many(s: complex, ys, a: int, abs_tol: Optional[float] = None,
                 line: Optional[float] = None, cfg: Tolerances = DEFAULT) -> np.ndarray:
    """V_s(y) for an array of y > 0.

    Without ``line`` the y are bucketed by decade and each bucket is
    integrated on its own saddle-adapted line.
    """
    s = _check_s(s)
    if a not in (0, 1):
        raise ValueError("a must be 0 or 1")
    tol = cfg.vs_abs_tol if abs_tol is None else abs_tol
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ys <= 0):
        raise ValueError("y must be positive")
    if line is not None:
        if line <= -(s.real + a) or line == 0:
            raise ValueError("line must lie right of the first Gamma pole and avoid 0")
        return _vs_line(s, ys, a, float(line), tol, cfg)[0]
    out = np.empty(ys.size, dtype=complex)
    bucket = np.floor(np.log10(ys) * 2).astype(int)
    for b in np.unique(bucket):
        idx = np.flatnonzero(bucket == b)
        c = choose_line(s, float(ys[idx].min()), a)
        out[idx] = _vs_line(s, ys[idx], a, c, tol, cfg)[0]
    return out


def vs_eval(s: complex, y: float, a: int, abs_tol: Optional[float] = None,
            line: Optional[float] = None, cfg: Tolerances = DEFAULT) -> complex:
    """V_s(y) (scalar)."""
    return complex(vs_eval_many(s, [y], a, abs_tol, line, cfg)[0])


def vs_line_bound(s: complex, a: int, c: float, cfg: Tolerances = DEFAULT) -> float:
    """K(c) = (1/2pi) int |kernel(c + iv)| dv, so that |V_s(y)| <= K(c) (pi y)^{-c} for c > 0."""
    s = _check_s(s)
    H = _halfwidth(s, a, c, 0.0, 1e-30, cfg.vs_min_halfwidth)
    v = np.linspace(-H, H, int(40 * H) + 1)
    g = np.abs(_vs_kernel(s, a, c, v))
    return float(np.sum(g) * (v[1] - v[0]) / (2 * math.pi)) * 1.01


def vs_contour_check(s: complex, y: float, a: int, lines=(2.0, 3.0, 4.0),
                     tol: float = 1e-10, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    vals = [vs_eval(s, y, a, abs_tol=tol * 1e-2, line=c, cfg=cfg) for c in lines]
    spread = max(abs(v - vals[0]) for v in vals)
    return VerificationRecord(
        "lfun.vs_contour", {"s": [s.real, s.imag], "y": y, "a": a, "lines": list(lines)},
        spread, tol, spread <= tol, "moving the line of integration",
        {"values": [[v.real, v.imag] for v in vals]})


def vs_small_check(s: complex, ys=None, a: int = 0, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    """Slope of log|V_s(y) - 1| against log y on [1e-4, 1e-2]; must be >= 1/3 - 0.05."""
    s = _check_s(s)
    ys = np.logspace(-4, -2, 9) if ys is None else np.asarray(ys, dtype=float)
    vals = vs_eval_many(s, ys, a, cfg=cfg)
    dev = np.abs(vals - 1.0)
    slope = float(np.polyfit(np.log(ys), np.log(dev), 1)[0])
    T = abs(s.imag)
    fitted = float(np.max(dev / (ys / T) ** (1 / 3)))
    bound = 1 / 3 - 0.05
    return VerificationRecord(
        "lfun.vs_small", {"s": [s.real, s.imag], "a": a, "y_range": [float(ys.min()), float(ys.max())]},
        slope, bound, slope >= bound, "V_s(y) = 1 + O{(y/|t|)^{1/3}}",
        {"fitted_constant": fitted, "deviations": dev.tolist()})


def vs_large_check(s: complex, a: int = 0, A: int = 3, factor: float = 100.0,
                   cfg: Tolerances = DEFAULT) -> VerificationRecord:
    """|V_s(y)| at y = factor*|t| below the A-envelope K_A (y/|t|)^{-A}.

    K_A = K(A) (pi |t|)^{-A} with K(A) the modulus integral along Re u = A,
    i.e. the bound obtained by moving the line to A; the equivalent C in
    K_A = C^A A^A e^{A^2} is recorded.
    """
    s = _check_s(s)
    T = abs(s.imag)
    K = vs_line_bound(s, a, float(A), cfg) * (math.pi * T) ** (-A)
    target = abs(vs_eval(s, factor * T, a, cfg=cfg))
    env = K * factor ** (-A)
    C = (K / (A**A * math.exp(A * A))) ** (1 / A)
    return VerificationRecord(
        "lfun.vs_large", {"s": [s.real, s.imag], "a": a, "A": A, "y_over_t": factor},
        target, env, target <= env, "V_s(y) << C^A A^A e^{A^2} (y/|t|)^{-A}",
        {"fitted_K": K, "fitted_C": C})


# --------------------------------------------------------------------------
# Direct L-values (Hurwitz + Euler-Maclaurin)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LValue:
    discriminant: int
    s: complex
    value: complex
    method: str
    error_estimate: float

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be >= 0")


@lru_cache(maxsize=1)
def _bernoulli_even(k_max: int = 40) -> tuple[float, ...]:
    """B_2, B_4, ..., B_{2 k_max} (Akiyama-Tanigawa, exact then rounded)."""
    n = 2 * k_max
    a = [Fraction(0)] * (n + 1)
    B = []
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        B.append(a[0])
    return tuple(float(B[2 * k]) for k in range(1, k_max + 1))


def _em_character_sum(s: complex, residues: np.ndarray, signs: np.ndarray, q: int,
                      N: int, K: int) -> tuple[complex, float]:
    """sum_a chi(a) zeta(s, a/q) by Euler-Maclaurin at cutoff N with K correction terms.

    The (N+alpha)^{1-s}/(s-1) term is replaced by ((N+alpha)^{1-s} - 1)/(s-1),
    which is legitimate because sum chi(a) = 0 and removes the pole at s = 1.
    Also returns sum |terms|, the scale of the floating-point rounding floor.
    """
    alpha = residues / q
    n = np.arange(N)
    head = 0j
    scale = 0.0
    for i in range(0, alpha.size, 256):
        al = alpha[i:i + 256]
        base = np.exp(-s * np.log(n[None, :] + al[:, None]))
        head += signs[i:i + 256] @ base.sum(axis=1)
        scale += float(np.abs(base).sum())
    X = N + alpha
    logX = np.log(X)
    w = 1 - s
    if abs(w) < 1e-6:
        ser = logX * (1 + w * logX / 2 + (w * logX) ** 2 / 6)
        pole_term = -ser  # (X^{w} - 1)/(s - 1) = -(X^w - 1)/w
    else:
        pole_term = (np.exp(w * logX) - 1) / (s - 1)
    tail = pole_term + 0.5 * np.exp(-s * logX)
    B = _bernoulli_even(K)
    rising = s  # (s)_{2k-1}
    fact = 2.0  # (2k)!
    for k in range(1, K + 1):
        if k > 1:
            rising = rising * (s + 2 * k - 3) * (s + 2 * k - 2)
            fact = fact * (2 * k - 1) * (2 * k)
        tail = tail + B[k - 1] / fact * rising * np.exp(-(s + 2 * k - 1) * logX)
    return complex(head + signs @ tail), scale


def l_direct(s: complex, chi: QuadraticCharacter, rel_tol: Optional[float] = None,
             cfg: Tolerances = DEFAULT) -> LValue:
    """L(s, chi) = q^{-s} sum_{a mod q} chi(a) zeta(s, a/q), Hurwitz zetas by Euler-Maclaurin.

    The cutoff N is doubled until two evaluations agree to ``rel_tol``, or
    to the rounding floor of the sum when |L| is too small for that.
    """
    s = complex(s)
    tol = cfg.lvalue_rel_tol if rel_tol is None else rel_tol
    if s.real < 0.5 or abs(s.imag) > 100 or chi.conductor > 100_000:
        raise ValueError("l_direct needs Re s >= 1/2, |Im s| <= 100, conductor <= 1e5")
    q = chi.conductor
    table = chi.period_table()
    residues = np.flatnonzero(table).astype(float)
    signs = table[table != 0].astype(float)
    K = 12
    N = int(abs(s) + 2 * K) + 8
    scale = np.exp(-s * math.log(q))
    prev = scale * _em_character_sum(s, residues, signs, q, N, K)[0]
    for _ in range(8):
        N *= 2
        val, mag = _em_character_sum(s, residues, signs, q, N, K)
        cur = scale * val
        floor = 64 * np.finfo(float).eps * mag * abs(scale)
        err = abs(cur - prev)
        if err <= max(tol * abs(cur), floor):
            return LValue(chi.discriminant, s, complex(cur), "direct_oracle", float(err))
        prev = cur
    raise QuadratureError(f"L({s}, chi_{chi.discriminant}) did not stabilise (last change {err:.3g})")


# --------------------------------------------------------------------------
# L-value cache
# --------------------------------------------------------------------------

CACHE_FILE = "lvalues.jsonl"
QUARANTINE_FILE = "lvalues.quarantine.jsonl"


def default_cache_dir() -> Path:
    env = os.environ.get("QLSLAB_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "qlslab"


def _checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


class CacheCorruption(ValueError):
    pass


def _parse_line(line: str) -> dict:
    try:
        entry = json.loads(line)
        check = entry.pop("check")
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise CacheCorruption(str(exc)) from exc
    if _checksum(entry) != check:
        raise CacheCorruption("checksum mismatch")
    return entry


class LValueCache:
    """Append-only JSON-lines store of L-values, one writer at a time.

    Floats are stored with ``float.hex`` so hits replay bit-identically.
    Entries are keyed by (d, sigma, t, method, tol); a lookup hits only on
    an exact key.  Every line carries a checksum of its own content.
    """

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.path = self.directory / CACHE_FILE
        self.lock = FileLock(str(self.path) + ".lock")

    @staticmethod
    def key(d: int, s: complex, method: str, tol: float) -> dict:
        return {"d": int(d), "sigma": float(s.real).hex(), "t": float(s.imag).hex(),
                "method": method, "tol": float(tol).hex()}

    def _lines(self) -> list[str]:
        if not self.path.exists():
            return []
        return self.path.read_text().splitlines()

    def entries(self) -> list[dict]:
        """Snapshot of every valid entry (corrupt or partial lines skipped)."""
        out = []
        for line in self._lines():
            if not line.strip():
                continue
            try:
                out.append(_parse_line(line))
            except CacheCorruption:
                continue
        return out

    def get(self, d: int, s: complex, method: str, tol: float) -> Optional[LValue]:
        k = self.key(d, s, method, tol)
        for entry in self.entries():
            if entry["key"] == k:
                re, im = (float.fromhex(x) for x in entry["value"])
                return LValue(d, complex(s), complex(re, im), method, float.fromhex(entry["error"]))
        return None

    def put(self, lv: LValue, tol: float) -> None:
        entry = {"key": self.key(lv.discriminant, lv.s, lv.method, tol),
                 "value": [float(lv.value.real).hex(), float(lv.value.imag).hex()],
                 "error": float(lv.error_estimate).hex()}
        entry["check"] = _checksum(entry)
        self.directory.mkdir(parents=True, exist_ok=True)
        with self.lock:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self.entries())


def cache_gc(cache_dir=None) -> dict:
    """Drop entries dominated by a stricter-tolerance entry for the same (d, s, method).

    Corrupt lines are moved to a quarantine file, never deleted.
    """
    cache = LValueCache(cache_dir)
    report = {"entries": 0, "kept": 0, "removed": 0, "quarantined": 0}
    if not cache.path.exists():
        return report
    with cache.lock:
        lines = [ln for ln in cache.path.read_text().splitlines() if ln.strip()]
        report["entries"] = len(lines)
        best: dict = {}
        bad = []
        order = []
        for ln in lines:
            try:
                e = _parse_line(ln)
            except CacheCorruption:
                bad.append(ln)
                continue
            k = e["key"]
            group = (k["d"], k["sigma"], k["t"], k["method"])
            tol = float.fromhex(k["tol"])
            if group not in best:
                order.append(group)
                best[group] = (tol, ln)
            elif tol < best[group][0]:
                best[group] = (tol, ln)
        kept = [best[g][1] for g in order]
        report["kept"] = len(kept)
        report["quarantined"] = len(bad)
        report["removed"] = len(lines) - len(kept) - len(bad)
        if bad:
            with open(cache.directory / QUARANTINE_FILE, "a") as fh:
                fh.writelines(b + "\n" for b in bad)
        tmp = cache.path.with_suffix(".tmp")
        tmp.write_text("".join(k + "\n" for k in kept))
        os.replace(tmp, cache.path)
    return report


def l_value(s: complex, chi: QuadraticCharacter, rel_tol: Optional[float] = None,
            cache: Optional[LValueCache] = None, cfg: Tolerances = DEFAULT) -> LValue:
    """l_direct through the cache (if given)."""
    tol = cfg.lvalue_rel_tol if rel_tol is None else rel_tol
    s = complex(s)
    if cache is not None:
        hit = cache.get(chi.discriminant, s, "direct_oracle", tol)
        if hit is not None:
            return hit
    lv = l_direct(s, chi, tol, cfg)
    if cache is not None:
        cache.put(lv, tol)
    return lv


# --------------------------------------------------------------------------
# Approximate functional equation
# --------------------------------------------------------------------------

def divisor_tail_bound(N: int, alpha: float) -> float:
    """Upper bound for sum_{n > N} d(n) n^{-alpha}, alpha > 1.

    Partial summation with D(x) = sum_{n <= x} d(n) <= x (log x + 1).
    """
    b = alpha - 1
    L = math.log(N)
    return alpha * N ** (-b) * ((L + 1) / b + 1 / b**2)


@dataclass(frozen=True)
class AFESums:
    plus: complex
    minus: complex
    n_terms: int
    tail_bound: float
    line: float


def afe_truncation(s: complex, chi: QuadraticCharacter, cfg: Tolerances = DEFAULT,
                   n_cap: int = 4_000_000) -> tuple[int, float, float]:
    """(N, bound, c): the smallest N whose omitted mass in either sum is below afe_tail_tol.

    |V_s(y)| <= K(c)(pi y)^{-c}, so each tail is at most
    K(c) (q/pi)^c * sum_{n>N} d(n) n^{-1/2-c}.
    """
    q, a = chi.conductor, chi.parity
    best = None
    for c in (2.0, 3.0, 4.0, 5.0, 6.0):
        K = max(vs_line_bound(s, a, c, cfg), vs_line_bound(s.conjugate(), a, c, cfg))
        pref = K * (q / math.pi) ** c
        lo, hi = 1, 2
        while pref * divisor_tail_bound(hi, 0.5 + c) > cfg.afe_tail_tol:
            lo, hi = hi, hi * 2
            if hi > n_cap:
                break
        if hi > n_cap:
            continue
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pref * divisor_tail_bound(mid, 0.5 + c) > cfg.afe_tail_tol:
                lo = mid
            else:
                hi = mid
        cand = (hi, pref * divisor_tail_bound(hi, 0.5 + c), c)
        if best is None or cand[0] < best[0]:
            best = cand
    if best is None:
        raise ValueError("AFE truncation exceeds the term cap")
    return best


def afe_sums(s: complex, chi: QuadraticCharacter, n_terms: Optional[int] = None,
             cfg: Tolerances = DEFAULT) -> AFESums:
    """The two smoothed divisor sums, truncated where the rigorous tail bound allows."""
    s = complex(s)
    if abs(s.real - 0.5) > 1e-15 or abs(s.imag) < 1:
        raise ValueError("afe_sums needs s = 1/2 + it with |t| >= 1")
    q, a = chi.conductor, chi.parity
    if n_terms is None:
        N, bound, c = afe_truncation(s, chi, cfg)
    else:
        N, bound, c = int(n_terms), float("nan"), float("nan")
    n = np.arange(1, N + 1)
    coeff = kernels.divisor_counts(N)[1:N + 1].astype(float) * chi.values(N).astype(float)
    nz = coeff != 0
    n, coeff = n[nz], coeff[nz]
    y = n / q
    logn = np.log(n)
    plus = complex(np.sum(coeff * np.exp(-s * logn) * vs_eval_many(s, y, a, cfg=cfg)))
    sb = 1 - s
    minus = complex(np.sum(coeff * np.exp(-sb * logn) * vs_eval_many(sb, y, a, cfg=cfg)))
    return AFESums(plus, minus, N, bound, c)


def root_number_estimate(s: complex, chi: QuadraticCharacter, cfg: Tolerances = DEFAULT,
                         cache: Optional[LValueCache] = None) -> tuple[Optional[complex], AFESums, LValue]:
    sums = afe_sums(s, chi, cfg=cfg)
    L = l_value(s, chi, cache=cache, cfg=cfg)
    if abs(sums.minus) < cfg.degenerate_minus:
        return None, sums, L
    return (L.value**2 - sums.plus) / sums.minus, sums, L


def afe_root_number_check(s: complex, chi: QuadraticCharacter, cfg: Tolerances = DEFAULT,
                          cache: Optional[LValueCache] = None) -> VerificationRecord:
    """| |eps_hat| - 1 | <= root_number_tol, eps_hat = (L^2 - sum_plus) / sum_minus."""
    s = complex(s)
    eps, sums, L = root_number_estimate(s, chi, cfg, cache)
    inputs = {"d": chi.discriminant, "s": [s.real, s.imag]}
    notes = {"n_terms": sums.n_terms, "tail_bound": sums.tail_bound, "line": sums.line,
             "sum_plus": sums.plus, "sum_minus": sums.minus, "L": L.value}
    statement = "eps(t) is some function satisfying |eps(t)| = 1"
    if eps is None:
        return VerificationRecord("lfun.afe_root_number", inputs, float("nan"), cfg.root_number_tol,
                                  None, statement, {**notes, "reason": "degenerate sum_minus"})
    dev = abs(abs(eps) - 1)
    notes["eps_hat"] = eps
    return VerificationRecord("lfun.afe_root_number", inputs, dev, cfg.root_number_tol,
                              dev <= cfg.root_number_tol, statement, notes)


def root_number_continuity(s: complex, chi: QuadraticCharacter, dt: float = 1e-3,
                           tol: float = 1e-2, cfg: Tolerances = DEFAULT) -> VerificationRecord:
    e0 = root_number_estimate(complex(s), chi, cfg)[0]
    e1 = root_number_estimate(complex(s) + 1j * dt, chi, cfg)[0]
    inputs = {"d": chi.discriminant, "s": [s.real, s.imag], "dt": dt}
    if e0 is None or e1 is None:
        return VerificationRecord("lfun.root_number_continuity", inputs, float("nan"), tol, None,
                                  "eps(t) continuity probe")
    diff = abs(e1 - e0)
    return VerificationRecord("lfun.root_number_continuity", inputs, diff, tol, diff <= tol,
                              "eps(t) continuity probe", {"eps0": e0, "eps1": e1})
