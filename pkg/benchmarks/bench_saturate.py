"""Compare the numba and numpy saturation kernels on random pushdown systems.

    python3 benchmarks/bench_saturate.py [--states 20 60 120] [--repeat 3]

Each size is built from a random system of tree constraints, saturated by
both kernels, and the results are checked to be identical before timing is
reported. The first numba call (compilation or cache load) is timed apart.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from utcsolve._kernels import saturate_numba, saturate_numpy
from utcsolve.core import TreeConstraint, TreeExpr
from utcsolve.reach import build_pushdown


def random_system(n_constraints: int, seed: int, alphabet=("l", "r", "m"), variables=("x", "y", "z", "t")):
    rng = random.Random(seed)

    def word(k):
        return tuple(rng.choice(alphabet) for _ in range(k))

    tc = []
    for _ in range(n_constraints):
        lhs = TreeExpr(word(rng.randint(0, 3)), rng.choice(variables))
        rhs = tuple(TreeExpr(word(rng.randint(0, 3)), rng.choice(variables)) for _ in range(rng.randint(1, 2)))
        tc.append(TreeConstraint(lhs, rhs))
    return build_pushdown(tc, alphabet, variables)


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--constraints", type=int, nargs="+", default=[5, 20, 60, 120])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    warm = random_system(3, args.seed).matrices()
    t0 = time.perf_counter()
    saturate_numba(*warm)
    print(f"numba first call (compile or cache load): {time.perf_counter() - t0:.3f}s")
    print(f"{'constraints':>11} {'states':>6} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for k in args.constraints:
        mats = random_system(k, args.seed + k).matrices()
        q_np = saturate_numpy(*mats)
        q_nb = saturate_numba(*mats)
        assert np.array_equal(q_np, q_nb), "kernels disagree"
        t_np = best_of(lambda: saturate_numpy(*mats), args.repeat)
        t_nb = best_of(lambda: saturate_numba(*mats), args.repeat)
        print(f"{k:>11} {mats[0].shape[0]:>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / max(t_nb, 1e-9):>7.1f}x")


if __name__ == "__main__":
    main()
