"""Every tolerance, cap and fitted-constant default in one place."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # sievequant
    power_rel_tol: float = 1e-12
    power_max_iter: int = 100_000
    oracle_max_dim: int = 64
    duality_slack: float = 1e-9
    trivial_bound_constant: float = 10.0
    square_pair_constant: float = 2.0
    bilinear_max_work: int = 1_000_000

    # weights
    fourier_abs_tol: float = 1e-12
    poisson_abs_tol: float = 1e-8
    poisson_tail_floor: float = 1e-14
    poisson2_constant: float = 1.0
    mellin_abs_tol: float = 1e-10
    mellin_l1_spread: float = 4.0
    sup_grid_points: int = 10_000

    # towerrec
    prop_fe_band: tuple = (0.5, 2.0)
    prop_fe_max_spread: float = 3.0

    # lfun
    vs_abs_tol: float = 1e-12
    vs_min_halfwidth: float = 12.0
    afe_tail_tol: float = 1e-8
    lvalue_rel_tol: float = 1e-12
    root_number_tol: float = 1e-4
    degenerate_minus: float = 1e-6
    stirling_c_max: float = 10.0

    # experiments
    qls_polylog_constant: float = 1.0
    moment_slope_max: float = 1.2
    census_mean_tol: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **overrides) -> "Tolerances":
        unknown = set(overrides) - set(self.to_dict())
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **overrides)


DEFAULT = Tolerances()
