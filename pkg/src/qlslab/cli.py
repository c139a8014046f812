"""Command-line entry point: ``qlslab <subcommand> [options]``.

Exit status: 0 when every record passed or was inconclusive, 2 when any
record failed, 1 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from qlslab import __version__
from qlslab.config import DEFAULT, Tolerances
from qlslab.records import (SchemaError, VerificationRecord, all_ok, records_to_rows, rows_to_csv,
                            validate_record_dict)

RUN_SCHEMA = "qlslab.run/1"
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    """Bad flags, parameters or environment; maps to exit status 1."""


# --------------------------------------------------------------------------
# Parameter parsing
# --------------------------------------------------------------------------

def parse_rational(text) -> Fraction:
    """'p/q', an integer or a decimal string as an exact Fraction."""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a rational number: {text!r}") from exc


def _split(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(x) for x in text]
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _num(conv):
    def f(x):
        try:
            return conv(x)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value {x!r}") from exc
    return f


_CONVERT: dict[str, Callable] = {
    "rat": parse_rational,
    "int": _num(int),
    "float": _num(float),
    "str": str,
    "rat_list": lambda s: [parse_rational(p) for p in _split(s)],
    "int_list": lambda s: [_num(int)(p) for p in _split(s)],
    "float_list": lambda s: [_num(float)(p) for p in _split(s)],
    "str_list": _split,
}


def _normalise(kind: str, value):
    """Canonical JSON form of a parameter (rationals as 'p/q' strings)."""
    v = _CONVERT[kind](value)
    if kind == "rat":
        return str(v)
    if kind == "rat_list":
        return [str(x) for x in v]
    return v


# name -> (kind, default, help)
PARAMS: dict[str, dict[str, tuple]] = {
    "bnorm": {"M": ("rat", "2", "dyadic parameter M"), "N": ("rat", "4", "dyadic parameter N")},
    "sieve-check": {"sizes": ("rat_list", "2,4,8,16,32,64", "values for both M and N"),
                    "seeds": ("int", 0, "random-sign families per (M, N) for the sup check")},
    "weights": {"j_max": ("int", 10, "highest derivative order"),
                "psi_a": ("int_list", "", "a values for the psi decay check (slow)"),
                "psi_n": ("int", 6, "highest psi derivative")},
    "poisson": {"q_max": ("int", 45, "largest odd squarefree modulus"),
                "multipliers": ("rat_list", "1/2,1,2,10", "M = multiplier * q"),
                "k": ("int", 0, "modulus for the truncated check (0 skips it)"),
                "X": ("float", 100.0, "truncated check: X"), "X1": ("float", 10.0, "truncated check: X1"),
                "X2": ("float", 1000.0, "truncated check: X2"), "L": ("int", 100, "truncated check: L"),
                "A": ("float", 2.0, "truncated check: A")},
    "mellin": {"sigma_list": ("float_list", "0.2,0.1,0.05", "sigma values"),
               "t_max": ("float", 50.0, "|t| cut-off of the L1 integral")},
    "recursion": {"eps_list": ("rat_list", "1/4,1/6,1/8,1/12,1/16,1/20", "epsilon sweep"),
                  "P": ("rat", "10", "P"), "Q": ("rat", "10", "Q"),
                  "xi_max": ("int", 1000, "check xi_r for r <= xi_max")},
    "vs": {"t_list": ("float_list", "2,5", "imaginary parts t"), "a_list": ("int_list", "0,1", "parities"),
           "sigma": ("float", 0.5, "real part of s")},
    "lmoment": {"Q_list": ("int_list", "25,50,100,200", "Q grid"), "t_list": ("float_list", "0", "t grid"),
                "afe_d": ("int_list", "", "discriminants for the root-number check"),
                "afe_t": ("float_list", "2,5", "t values for the root-number check")},
    "qls": {"Q_list": ("int_list", "50,100,200,400", "Q grid"), "N": ("int", 1000, "N"),
            "families": ("str_list", "square_indicator,prime_indicator,random_signs", "families"),
            "seeds": ("int", 10, "seeds for the stability check")},
    "census": {"Q": ("int", 100, "q ranges over primes 3 mod 4 in (Q, 2Q]"), "X": ("int", 1_000_000, "X"),
               "delta": ("float", 0.05, "deviation threshold")},
    "selftest": {},
}
SUBCOMMANDS = tuple(PARAMS)


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    tolerance_overrides: dict = field(default_factory=dict)
    output_dir: Optional[str] = None
    cache_dir: Optional[str] = None
    jobs: int = 1

    def normalised_params(self) -> dict:
        if self.subcommand not in PARAMS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        table = PARAMS[self.subcommand]
        unknown = set(self.params) - set(table)
        if unknown:
            raise UsageError(f"unknown parameter(s) for {self.subcommand}: {sorted(unknown)}")
        return {k: _normalise(kind, self.params.get(k, default)) for k, (kind, default, _) in table.items()}

    def tolerances(self) -> Tolerances:
        over = {k: tuple(v) if isinstance(v, list) else v for k, v in self.tolerance_overrides.items()}
        try:
            return DEFAULT.with_overrides(**over)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


@dataclass
class RunResult:
    exit_code: int
    records: list
    rows: list
    series: list
    text: str = ""
    paths: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# Subcommand handlers: (params, cfg, run_config) -> (records, rows, series, text)
# --------------------------------------------------------------------------

def _bnorm(p, cfg, rc):
    from qlslab.sievequant import SymbolMatrix, bnorm_info, bnorm_oracle
    M, N = Fraction(p["M"]), Fraction(p["N"])
    info = bnorm_info(M, N, cfg=cfg)
    oracle = float("nan")
    passed = None
    if max(SymbolMatrix.build(M, N).shape) <= cfg.oracle_max_dim:
        oracle = bnorm_oracle(M, N, cfg)
        passed = abs(info.value - oracle) <= 1e-6 * max(oracle, 1e-300) if oracle > 0 else info.value == 0
    rec = VerificationRecord("sievequant.bnorm", {"M": str(M), "N": str(N)}, info.value, oracle, passed,
                             "B(M,N) = top singular value squared of ((n/m))",
                             {"iterations": info.iterations, "converged": info.converged,
                              "shape": list(info.shape)})
    row = {"M": str(M), "N": str(N), "B": info.value, "oracle": oracle, "iterations": info.iterations}
    return [rec], [row], [], f"{info.value:.10g}"


def _sieve_check(p, cfg, rc):
    from qlslab.sievequant import CoefficientFamily, duality_check, sigma_sup_check, trivial_bound_check
    sizes = [Fraction(s) for s in p["sizes"]]
    recs, series = [], []
    for M in sizes:
        for N in sizes:
            d = duality_check(M, N, cfg)
            recs.append(d)
            if N >= 2:
                t = trivial_bound_check(M, N, cfg)
                recs.append(t)
                series.append((float(N), t.ratio, f"trivial M={M}"))
            for k in range(p["seeds"]):
                lo, hi = math.floor(N) + 1, math.floor(2 * N)
                recs.append(sigma_sup_check(M, N, CoefficientFamily.random_signs(rc.seed + k, (lo, hi)), cfg))
    return recs, records_to_rows(recs), series, ""


def _involutions(n_max: int) -> list[int]:
    a = [1, 1]
    for n in range(2, n_max + 1):
        a.append(a[-1] + (n - 1) * a[-2])
    return a[: n_max + 1]


def _weights(p, cfg, rc):
    from qlslab.weights import derivative_bound_check, derivative_table, faa_di_bruno_coefficients, psi_decay_check
    recs = list(derivative_bound_check(p["j_max"], cfg))
    for n, expected in enumerate(_involutions(6)):
        total = sum(faa_di_bruno_coefficients(n))
        recs.append(VerificationRecord("weights.faa_di_bruno_rows", {"n": n}, total, expected, total == expected,
                                       "row sums of the quadratic-argument chain-rule coefficients"))
    for a in p["psi_a"]:
        recs.extend(psi_decay_check(a, p["psi_n"]))
    rows = derivative_table(p["j_max"], cfg.sup_grid_points)
    series = [(r["j"], math.log10(r["empirical_sup"]), "log10 sup") for r in rows]
    series += [(r["j"], math.log10(r["bound"]), "log10 bound") for r in rows]
    return recs, rows, series, ""


def _poisson(p, cfg, rc):
    from qlslab.ntcore import is_squarefree
    from qlslab.weights import poisson_character_check, poisson_truncated_check
    recs, series = [], []
    for q in range(3, p["q_max"] + 1, 2):
        if not is_squarefree(q):
            continue
        for mult in p["multipliers"]:
            M = Fraction(mult) * q
            r = poisson_character_check(q, M, cfg=cfg)
            recs.append(r)
            series.append((q, r.lhs, f"M={mult}q"))
    if p["k"]:
        recs.append(poisson_truncated_check(p["k"], p["X"], p["X1"], p["X2"], p["L"], p["A"], cfg=cfg))
    return recs, records_to_rows(recs), series, ""


def _mellin(p, cfg, rc):
    from qlslab.lfun import gamma_complex
    from qlslab.weights import gaussian, mellin_l1_check, mellin_pm
    rec = mellin_l1_check(gaussian, p["sigma_list"], p["t_max"], cfg)
    s_grid = [complex(x, y) for x in (0.25, 0.5, 1.0, 2.0) for y in (0.0, 1.0, 5.0, 20.0)]
    vals = np.atleast_1d(mellin_pm(gaussian, 1, np.array(s_grid), cfg=cfg))
    err = max(abs(v - gamma_complex(s / 2) / 2) for v, s in zip(vals, s_grid))
    ref = VerificationRecord("weights.mellin_gaussian", {"grid": len(s_grid)}, err, cfg.mellin_abs_tol,
                             err <= cfg.mellin_abs_tol, "Mellin transform of e^{-x^2} is Gamma(s/2)/2")
    series = [(s, v, "sigma*L1") for s, v in zip(p["sigma_list"], rec.notes["sigma_times_integral"])]
    return [rec, ref], records_to_rows([rec, ref]), series, ""


def _recursion(p, cfg, rc):
    from qlslab.towerrec import prop_fe_sweep, sweep_rows, xi, xi_sequence
    eps = [Fraction(e) for e in p["eps_list"]]
    P, Q = Fraction(p["P"]), Fraction(p["Q"])
    recs = prop_fe_sweep(eps, P, Q, cfg)
    bad = sum(1 for r, x in enumerate(xi_sequence(p["xi_max"])) if x != xi(r))
    recs.append(VerificationRecord("towerrec.xi", {"r_max": p["xi_max"]}, bad, 0, bad == 0,
                                   "xi_r = 1 + 1/(r+1)"))
    rows = sweep_rows(eps, P, Q)
    series = [(float(Fraction(r["epsilon"])), r["y_times_eps"], "y*eps") for r in rows]
    return recs, rows, series, ""


def _vs(p, cfg, rc):
    from qlslab.lfun import vs_contour_check, vs_eval_many, vs_large_check, vs_small_check
    recs, series = [], []
    for t in p["t_list"]:
        s = complex(p["sigma"], t)
        for a in p["a_list"]:
            recs.append(vs_contour_check(s, 2 * abs(t), a, cfg=cfg))
            recs.append(vs_small_check(s, a=a, cfg=cfg))
            recs.append(vs_large_check(s, a=a, cfg=cfg))
            ys = np.logspace(-3, math.log10(100 * abs(t)), 25)
            for y, v in zip(ys, np.abs(vs_eval_many(s, ys, a, cfg=cfg))):
                series.append((float(y), float(v), f"t={t},a={a}"))
    return recs, records_to_rows(recs), series, ""


def _open_cache(rc):
    from qlslab.lfun import CACHE_FILE, LValueCache, _parse_line, CacheCorruption
    cache = LValueCache(rc.cache_dir)
    if cache.path.exists():
        bad = 0
        for line in cache.path.read_text().splitlines():
            if line.strip():
                try:
                    _parse_line(line)
                except CacheCorruption:
                    bad += 1
        if bad:
            raise UsageError(f"cache {cache.path} has {bad} corrupt line(s); run 'qlslab cache-gc'")
    return cache


def _lmoment(p, cfg, rc):
    from qlslab.experiments import fourth_moment_trend
    from qlslab.lfun import afe_root_number_check
    from qlslab.ntcore import QuadraticCharacter
    cache = _open_cache(rc)
    recs, results = fourth_moment_trend(p["Q_list"], p["t_list"], cache, rc.jobs, cfg)
    for d in p["afe_d"]:
        for t in p["afe_t"]:
            recs.append(afe_root_number_check(complex(0.5, t), QuadraticCharacter(d), cfg, cache))
    rows = [{"Q": r.Q, "t": r.t, "S": r.value, "count": r.count, "complete": r.complete} for r in results]
    series = [(r.Q, r.value, f"t={r.t}") for r in results]
    return recs, rows, series, ""


def _family(name: str, seed: int, N: int):
    from qlslab.sievequant import CoefficientFamily
    if name == "random_signs":
        return CoefficientFamily.random_signs(seed, (1, N))
    if name in ("ones", "square_indicator", "prime_indicator"):
        return getattr(CoefficientFamily, name)()
    raise UsageError(f"unknown family {name!r}")


def _qls(p, cfg, rc):
    from qlslab.experiments import qls_growth_check, qls_ratio_report, qls_seed_stability
    from qlslab.sievequant import CoefficientFamily
    N = p["N"]
    fams = [_family(f, rc.seed, N) for f in p["families"]]
    recs = []
    for Q in p["Q_list"]:
        recs.extend(qls_ratio_report(Q, N, fams, cfg))
    recs.append(qls_growth_check(p["Q_list"], N, CoefficientFamily.square_indicator()))
    if p["seeds"] > 1:
        recs.append(qls_seed_stability(p["Q_list"][0], N, range(rc.seed, rc.seed + p["seeds"])))
    series = [(r.inputs["Q"], r.ratio, r.inputs["family"]) for r in recs if r.claim_id == "experiments.qls_ratio"]
    return recs, records_to_rows(recs), series, ""


def _census(p, cfg, rc):
    from qlslab.experiments import census
    m, rows, recs = census(p["Q"], p["X"], p["delta"], cfg)
    table = [dict(asdict(r), fraction=r.fraction) for r in rows]
    series = [(r.q, r.fraction, "P_q/(pi-2)") for r in rows]
    return recs, table, series, f"m_Q = {m} of {len(rows)}"


def _selftest(p, cfg, rc):
    """Small-instance versions of every invariant; a few seconds in total."""
    from qlslab import kernels
    from qlslab.experiments import census, qls_lhs
    from qlslab.lfun import afe_root_number_check, l_direct, vs_contour_check
    from qlslab.ntcore import QuadraticCharacter, gauss_sum, jacobi, squarefree_odd_range
    from qlslab.sievequant import CoefficientFamily, bnorm, bnorm_oracle, duality_check
    from qlslab.towerrec import prop_fe_sweep, xi, xi_recursive
    from qlslab.weights import derivative_bound_check, faa_di_bruno_coefficients, poisson_character_check

    recs = []
    bad = 0
    for p_ in kernels.primes_upto(200)[1:]:
        p_ = int(p_)
        for a in range(-p_, 2 * p_):
            e = pow(a % p_, (p_ - 1) // 2, p_)
            bad += jacobi(a, p_) != (-1 if e == p_ - 1 else e)
    recs.append(VerificationRecord("selftest.jacobi_euler", {"p_max": 200}, bad, 0, bad == 0, "Euler's criterion"))
    worst = 0.0
    for q in range(3, 100, 2):
        if squarefree_odd_range(Fraction(q - 1, 2))[0:1] and q in squarefree_odd_range(Fraction(q, 2)):
            worst = max(worst, abs(abs(gauss_sum(q)) ** 2 - q))
    recs.append(VerificationRecord("selftest.gauss_sum", {"q_max": 99}, worst, 1e-10, worst <= 1e-10, "|tau(q)|^2 = q"))
    worst = 0.0
    for M in (1, 2, 4, 8):
        for N in (1, 2, 4, 8):
            o = bnorm_oracle(M, N, cfg)
            if o > 0:
                worst = max(worst, abs(bnorm(M, N, cfg=cfg) - o) / o)
    recs.append(VerificationRecord("selftest.bnorm_oracle", {"grid": "1..8"}, worst, 1e-6, worst <= 1e-6, "power vs Jacobi"))
    recs.append(duality_check(4, 8, cfg))
    recs.append(poisson_character_check(7, 7, cfg=cfg))
    recs.extend(derivative_bound_check(3, cfg))
    sums = [sum(faa_di_bruno_coefficients(n)) for n in range(7)]
    recs.append(VerificationRecord("selftest.faa_rows", {}, float(sums == _involutions(6)), 1.0,
                                   sums == _involutions(6), "involution row sums"))
    recs.append(VerificationRecord("selftest.xi", {"r": 500}, 0.0, 0.0, xi_recursive(500) == xi(500), "xi recursion"))
    recs.append(prop_fe_sweep([Fraction(1, 4), Fraction(1, 8)], 10, 10, cfg)[-1])
    recs.append(vs_contour_check(0.5 + 5j, 10.0, 0, cfg=cfg))
    beta = l_direct(0.5, QuadraticCharacter(-4), cfg=cfg).value.real
    recs.append(VerificationRecord("selftest.beta_half", {}, abs(beta - 0.6676914571896091), 1e-12,
                                   abs(beta - 0.6676914571896091) <= 1e-12, "Dirichlet beta(1/2)"))
    recs.append(afe_root_number_check(0.5 + 2j, QuadraticCharacter(-4), cfg))
    recs.append(VerificationRecord("selftest.qls_example", {"Q": 4, "N": 2}, qls_lhs(4, 2, CoefficientFamily.ones()),
                                   1.0, qls_lhs(4, 2, CoefficientFamily.ones()) == 1.0, "hand-evaluated example"))
    recs.extend(r for r in census(20, 1000, 0.1, cfg)[2] if r.claim_id == "experiments.census_chebyshev_exact")
    return recs, records_to_rows(recs), [], ""


HANDLERS = {"bnorm": _bnorm, "sieve-check": _sieve_check, "weights": _weights, "poisson": _poisson,
            "mellin": _mellin, "recursion": _recursion, "vs": _vs, "lmoment": _lmoment, "qls": _qls,
            "census": _census, "selftest": _selftest}


# --------------------------------------------------------------------------
# run / output
# --------------------------------------------------------------------------

def manifest_for(config: RunConfig):
    from qlslab.experiments import ExperimentManifest
    return ExperimentManifest(config.subcommand, config.normalised_params(), config.seed,
                              config.tolerances().to_dict())


def run(config: RunConfig) -> RunResult:
    """Run one subcommand; write artifacts when ``output_dir`` is set."""
    from qlslab.experiments import write_outputs
    params = config.normalised_params()
    cfg = config.tolerances()
    table = PARAMS[config.subcommand]
    typed = {k: _CONVERT[table[k][0]](v) if table[k][0] in ("rat", "rat_list") else v for k, v in params.items()}
    try:
        recs, rows, series, text = HANDLERS[config.subcommand](typed, cfg, config)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    code = EXIT_OK if all_ok(recs) else EXIT_FAILED
    result = RunResult(code, recs, rows, series, text)
    if config.output_dir:
        try:
            result.paths = write_outputs(config.output_dir, manifest_for(config), recs, rows, series)
        except OSError as exc:
            raise UsageError(f"cannot write to {config.output_dir}: {exc}") from exc
    return result


def run_document(config: RunConfig, result: RunResult) -> dict:
    return {"schema": RUN_SCHEMA, "subcommand": config.subcommand, "exit_code": result.exit_code,
            "params": config.normalised_params(), "seed": config.seed,
            "records": [r.to_dict() for r in result.records],
            "rows": json.loads(rows_to_json(result.rows))}


def rows_to_json(rows) -> str:
    from qlslab.records import _jsonable
    return json.dumps(_jsonable(rows), sort_keys=True)


def load_run_document(text: str) -> dict:
    """Parse and validate the output of ``--json``."""
    doc = json.loads(text)
    if not isinstance(doc, dict) or doc.get("schema") != RUN_SCHEMA:
        raise SchemaError(f"unsupported run schema {doc.get('schema') if isinstance(doc, dict) else doc!r}")
    for key in ("subcommand", "exit_code", "records", "rows"):
        if key not in doc:
            raise SchemaError(f"run document missing {key!r}")
    for rec in doc["records"]:
        validate_record_dict(rec)
    return doc


def _csv_rows(result: RunResult) -> str:
    from qlslab.experiments import _union_columns
    return rows_to_csv(_union_columns(result.rows)) if result.rows else ""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    fmt = g.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="print a JSON run document")
    fmt.add_argument("--csv", action="store_true", help="print the result rows as CSV")
    g.add_argument("--out", metavar="DIR", help="write manifest.json, results.csv, records.jsonl, plot.tsv")
    g.add_argument("--seed", type=int, default=0, help="seed for random coefficient families (default 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    g.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                   help="override a tolerance (VALUE parsed as JSON); repeatable")
    g.add_argument("--cache-dir", help="L-value cache directory (default $QLSLAB_CACHE_DIR or ~/.cache/qlslab)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlslab", description="Numerical checks for quadratic character sums.")
    parser.add_argument("--version", action="version", version=f"qlslab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    for name, table in PARAMS.items():
        p = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).splitlines()[0])
        for key, (kind, default, help_) in table.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                           help=f"{help_} (default {default!s})" if default != "" else help_)
        _add_common(p)
    rp = sub.add_parser("replay", help="re-run a manifest.json")
    rp.add_argument("manifest")
    _add_common(rp)
    gc = sub.add_parser("cache-gc", help="drop dominated L-value cache entries, quarantine corrupt lines")
    gc.add_argument("--cache-dir")
    gc.add_argument("--json", action="store_true")
    return parser


def _parse_tol(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--tol value for {k} is not JSON: {v!r}") from exc
    return out


def config_from_args(args) -> RunConfig:
    if args.subcommand == "replay":
        from qlslab.experiments import ExperimentManifest
        try:
            man = ExperimentManifest.load(args.manifest)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read manifest: {exc}") from exc
        tol = dict(man.tolerances)
        tol.update(_parse_tol(args.tol))
        return RunConfig(man.experiment, man.params, man.seed, tol, args.out, args.cache_dir, args.jobs)
    params = {k: getattr(args, k) for k in PARAMS[args.subcommand] if getattr(args, k) is not None}
    return RunConfig(args.subcommand, params, args.seed, _parse_tol(args.tol), args.out,
                     args.cache_dir, args.jobs)


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        if args.subcommand is None:
            raise UsageError("a subcommand is required (see --help)")
        if args.subcommand == "cache-gc":
            from qlslab.lfun import cache_gc
            report = cache_gc(args.cache_dir)
            print(json.dumps(report, sort_keys=True) if args.json else
                  " ".join(f"{k}={v}" for k, v in report.items()))
            return EXIT_OK
        config = config_from_args(args)
        result = run(config)
    except UsageError as exc:
        print(f"qlslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(run_document(config, result), sort_keys=True))
    elif args.csv:
        sys.stdout.write(_csv_rows(result))
    else:
        if result.text:
            print(result.text)
        for r in result.records:
            print(r.summary_line())
        if result.paths:
            print(f"wrote {', '.join(str(p) for p in result.paths.values())}")
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
