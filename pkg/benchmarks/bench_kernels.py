"""Compare the numba and numpy variants of every hot kernel.

Both variants are called directly, so one process measures both backends
whatever ``QLSLAB_BACKEND`` says. Outputs are checked for equality before
timing. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0] [--json]
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from qlslab import kernels as K
from qlslab._accel import HAS_NUMBA
from qlslab.ntcore import fundamental_discriminants


def cases(scale: float):
    n = lambda x: max(10, int(x * scale))
    ds = np.array([c.discriminant for c in fundamental_discriminants(n(2000))], dtype=np.int64)
    a = np.random.default_rng(0).choice([-1.0, 1.0], size=n(2000))
    odd = np.arange(1, 2 * n(300), 2, dtype=np.int64)
    ps = K.primes_upto_np(n(1_000_000))
    qs = np.array([q for q in K.primes_upto_np(n(400)) if q % 4 == 3 and q > n(200)], dtype=np.int64)
    return {
        "jacobi_outer": ((np.arange(-n(300), n(300), dtype=np.int64), odd), K.jacobi_outer_nb, K.jacobi_outer_np),
        "kronecker_sums": ((ds, a), K.kronecker_sums_nb, K.kronecker_sums_np),
        "linear_sieve": ((n(2_000_000),), K.linear_sieve_nb, K.linear_sieve_np),
        "primes_upto": ((n(5_000_000),), K.primes_upto_nb, K.primes_upto_np),
        "squarefree_kernels": ((n(2_000_000),), K.squarefree_kernels_nb, K.squarefree_kernels_np),
        "divisor_counts": ((n(2_000_000),), K.divisor_counts_nb, K.divisor_counts_np),
        "legendre_prime_sums": ((qs, ps), K.legendre_prime_sums_nb, K.legendre_prime_sums_np),
    }


def bench(repeat: int = 5, scale: float = 1.0) -> list[dict]:
    rows = []
    for name, (args, nb, np_) in cases(scale).items():
        ref = np_(*args)
        row = {"kernel": name, "numpy_s": min(timeit.repeat(lambda: np_(*args), number=1, repeat=repeat))}
        if HAS_NUMBA:
            got = nb(*args)  # also triggers compilation outside the timed region
            if not np.array_equal(np.asarray(got), np.asarray(ref)):
                raise AssertionError(f"{name}: backends disagree")
            row["numba_s"] = min(timeit.repeat(lambda: nb(*args), number=1, repeat=repeat))
            row["speedup"] = row["numpy_s"] / row["numba_s"]
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply all problem sizes")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    rows = bench(args.repeat, args.scale)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<22}{r['numpy_s']:>12.4f}{r.get('numba_s', float('nan')):>12.4f}"
              f"{r.get('speedup', float('nan')):>9.1f}x")


if __name__ == "__main__":
    main()
