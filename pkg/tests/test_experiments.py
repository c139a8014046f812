import math

import numpy as np
import pytest

from qlslab.experiments import (
    CensusRow,
    ExperimentManifest,
    census,
    census_primes,
    euler_sample_check,
    fourth_moment,
    fourth_moment_trend,
    loglog_slope,
    parallel_map,
    qls_growth_check,
    qls_lhs,
    qls_ratio_report,
    qls_seed_stability,
    split_count,
    write_outputs,
)
from qlslab.lfun import LValueCache
from qlslab.ntcore import fundamental_discriminants, is_squarefree, kronecker
from qlslab.sievequant import CoefficientFamily as CF, square_pair_sum


def qls_loop(Q, N, a):
    total = 0.0
    vals = a.values(np.arange(1, N + 1))
    for chi in fundamental_discriminants(Q):
        s = sum(vals[n - 1] * kronecker(chi.discriminant, n) for n in range(1, N + 1))
        total += s * s
    return total


def qls_expanded(Q, N, a):
    vals = a.values(np.arange(1, N + 1))
    ds = [c.discriminant for c in fundamental_discriminants(Q)]
    total = 0.0
    for n1 in range(1, N + 1):
        for n2 in range(1, N + 1):
            if vals[n1 - 1] and vals[n2 - 1]:
                total += vals[n1 - 1] * vals[n2 - 1] * sum(kronecker(d, n1 * n2) for d in ds)
    return total


def primes_brute(X):
    return [p for p in range(2, X + 1) if all(p % k for k in range(2, math.isqrt(p) + 1))]


# ---------------------------------------------------------------- large sieve

def test_qls_examples():
    assert qls_lhs(10, 8, CF.zeros()) == 0.0
    assert qls_lhs(4, 2, CF.ones()) == 1.0
    assert qls_lhs(12, 10, CF.ones()) == pytest.approx(qls_loop(12, 10, CF.ones()))


def test_qls_matches_expansion_for_seeded_families():
    for seed in range(20):
        a = CF.random_signs(seed, (1, 12))
        assert qls_lhs(30, 12, a) == pytest.approx(qls_expanded(30, 12, a), abs=1e-9)


def test_qls_limits():
    with pytest.raises(ValueError):
        qls_lhs(20_000, 10, CF.ones())


def test_ratio_denominator_is_norm_on_squarefree_support():
    N = 60
    vals = {n: (-1) ** n * (n % 7 + 1) for n in range(1, N + 1) if is_squarefree(n)}
    a = CF.explicit(vals)
    rec = qls_ratio_report(50, N, [a])[0]
    assert rec.rhs == pytest.approx((50 + N) * sum(v * v for v in vals.values()))


def test_ratio_report_families():
    recs = qls_ratio_report(100, 300, [CF.square_indicator(), CF.prime_indicator(),
                                       CF.random_signs(1, (1, 300))])
    assert [r.notes["polylog_limit"] for r in recs][0] == pytest.approx(math.log(30000) ** 2)
    assert all(r.passed for r in recs)
    assert qls_ratio_report(10, 5, [CF.zeros()])[0].passed is None


def test_square_indicator_grows_linearly_in_Q():
    rec = qls_growth_check([50, 100, 200, 400], 1000, CF.square_indicator())
    assert rec.passed and abs(rec.lhs - 1) <= 0.2
    assert qls_growth_check([50], 100, CF.square_indicator()).passed is None


def test_seed_stability():
    assert qls_seed_stability(100, 300).passed


# ---------------------------------------------------------------- fourth moment

def test_fourth_moment_examples(tmp_path):
    assert fourth_moment(1, 0).value == 0.0  # (1, 2] has no fundamental discriminant
    cache = LValueCache(tmp_path)
    first = fourth_moment(10, 1, cache=cache)
    assert first.value > 0 and first.complete and first.count == len(LValueCache(tmp_path).entries())
    again = fourth_moment(10, 1, cache=cache)
    assert again.value.hex() == first.value.hex()
    assert fourth_moment(10, 1).value.hex() == first.value.hex()


def test_fourth_moment_parallel_equals_serial():
    assert fourth_moment(20, 0.5, jobs=2).value == fourth_moment(20, 0.5, jobs=1).value


def test_fourth_moment_monotone_in_range():
    # (Q, 2Q] is contained in (Q, 2Q] u (2Q, 4Q]
    Q = 15
    assert fourth_moment(Q, 0).value <= fourth_moment(Q, 0).value + fourth_moment(2 * Q, 0).value


def test_fourth_moment_domain():
    with pytest.raises(ValueError):
        fourth_moment(600, 0)
    with pytest.raises(ValueError):
        fourth_moment(10, 11)


def test_fourth_moment_trend_degenerate_and_ratio():
    recs, _ = fourth_moment_trend([20], [0])
    assert recs[0].passed is None
    recs, res = fourth_moment_trend([20, 40], [1, 5])
    assert len(recs) == 2 and all(math.isfinite(r.lhs) for r in recs)
    assert res[-1].value > res[1].value  # larger |t| raises the moment here


# ---------------------------------------------------------------- census

def test_split_count_examples():
    assert split_count(3, 20).P_qX == 3
    assert split_count(7, 7).P_qX == 0
    assert split_count(3, 2).P_qX == 0 and split_count(11, 1).P_qX == 0


def test_split_count_matches_brute_force():
    for q in (3, 7, 11, 19, 23, 103):
        for X in (5, 50, 997, 5000):
            expected = sum(1 for p in primes_brute(X) if p > 2 and p != q and kronecker(-q, p) == 1)
            row = split_count(q, X)
            assert row.P_qX == expected
            assert 0 <= row.P_qX <= row.pi_X


def test_split_count_rejects_bad_q():
    for q in (5, 9, 13, 15):
        with pytest.raises(ValueError):
            split_count(q, 100)


def test_euler_sample():
    from qlslab import kernels
    ps = kernels.primes_upto(20_000)
    assert euler_sample_check(43, ps[ps > 2]) >= 22


def test_census_row_invariant():
    with pytest.raises(ValueError):
        CensusRow(3, 10, 9, 4, 2.0, 0.0, 0)


def test_census_chebyshev_exact_everywhere():
    for Q in (5, 20, 50):
        for X in (10, 30, 100, 1000, 20_000):
            for delta in (0.01, 0.05, 0.2, 0.45):
                m, rows, recs = census(Q, X, delta)
                exact = [r for r in recs if r.claim_id == "experiments.census_chebyshev_exact"][0]
                assert exact.passed
                assert m == sum(1 for r in rows if r.deviation > delta)
                assert [r.q for r in rows] == census_primes(Q)


def test_census_large_run():
    m, rows, recs = census(100, 10**6, 0.05)
    by = {r.claim_id: r for r in recs}
    assert by["experiments.census_chebyshev"].passed
    assert by["experiments.census_mean"].passed
    assert m < len(rows)
    assert all(0 <= r.fraction <= 1 for r in rows)


def test_census_domain():
    with pytest.raises(ValueError):
        census(100, 1000, 0.5)


# ---------------------------------------------------------------- plumbing

def test_parallel_map_preserves_order():
    assert parallel_map(abs, [-3, 1, -2], jobs=2) == [3, 1, 2]
    assert parallel_map(abs, [], jobs=4) == []


def test_loglog_slope():
    assert loglog_slope([1, 2, 4], [3, 12, 48]) == pytest.approx(2.0)


def test_manifest_round_trip_and_outputs(tmp_path):
    man = ExperimentManifest("census", {"Q": 20, "X": 100, "delta": 0.1}, seed=3)
    m, rows, recs = census(20, 100, 0.1)
    row_dicts = [r.__dict__ for r in rows]
    paths = write_outputs(tmp_path / "a", man, recs, row_dicts, [(r.q, r.deviation, "dev") for r in rows])
    loaded = ExperimentManifest.load(paths["manifest"])
    assert loaded.to_dict(with_timestamp=False) == man.to_dict(with_timestamp=False)
    assert loaded.config() == man.config()
    man2 = ExperimentManifest.load(paths["manifest"])
    man2.timestamp = ""
    paths2 = write_outputs(tmp_path / "b", man2, recs, row_dicts, [(r.q, r.deviation, "dev") for r in rows])
    for key in ("results", "records", "plot"):
        assert paths[key].read_bytes() == paths2[key].read_bytes()
    assert paths["plot"].read_text().splitlines()[0] == "x\ty\tseries"


def test_manifest_rejects_unknown_schema():
    with pytest.raises(ValueError):
        ExperimentManifest.from_dict({"schema": "nope"})
