"""Sweep affine objective rescalings over the builtin problems and report,
per feature, the largest deviation from the untransformed feature vector.

The feature stack is designed so that y -> a*y + b (a > 0) leaves every
feature bit-identical; this script measures that claim empirically.  A clean
run prints all-zero deviations and exits 0; any mismatch exits 1.

Usage:
    python3 scripts/run_invariance_sweep.py --instances 20 --transforms 25
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from landsel.ela import compute_all
from landsel.preprocess import preprocess_pipeline
from landsel.sampling import create_initial_design, evaluate_design, with_objective
from landsel.space import BUILTIN_FUNCTIONS, ObjectiveTransform, apply_transform, builtin_problem


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=20, help="random problem instances")
    ap.add_argument("--transforms", type=int, default=25, help="rescalings per instance")
    ap.add_argument("--n", type=int, default=None, help="design size (default 50*D)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    fids = sorted(BUILTIN_FUNCTIONS)
    max_dev: dict[str, float] = {}
    missing_flips: dict[str, int] = {}
    calls = 0
    start = time.perf_counter()

    for i in range(args.instances):
        fid = fids[i % len(fids)]
        problem = builtin_problem(fid, int(rng.integers(0, 100)), int(rng.integers(2, 4)))
        design = evaluate_design(
            problem,
            create_initial_design(problem.space, n=args.n, seed=int(rng.integers(0, 2**31))),
        )
        seed = int(rng.integers(0, 2**31))
        base = compute_all(preprocess_pipeline(design), seed=seed)
        for _ in range(args.transforms):
            transform = ObjectiveTransform(
                scale=float(10.0 ** rng.uniform(-3.0, 3.0)),
                shift=float(rng.uniform(-1e6, 1e6)),
            )
            rescaled = with_objective(design, apply_transform(transform, design.y))
            other = compute_all(preprocess_pipeline(rescaled), seed=seed)
            calls += 1
            for name in base.names():
                u, v = base[name], other[name]
                if (u is None) != (v is None):
                    missing_flips[name] = missing_flips.get(name, 0) + 1
                elif u is not None:
                    max_dev[name] = max(max_dev.get(name, 0.0), abs(u - v))

    elapsed = time.perf_counter() - start
    width = max(len(n) for n in max_dev) if max_dev else 10
    print(f"{args.instances} instances x {args.transforms} transforms "
          f"({calls} feature vectors, {elapsed:.1f} s)")
    print(f"{'feature':<{width}}  max |deviation|  missing flips")
    bad = 0
    for name in sorted(set(max_dev) | set(missing_flips)):
        dev = max_dev.get(name, 0.0)
        flips = missing_flips.get(name, 0)
        if dev > 0.0 or flips:
            bad += 1
        print(f"{name:<{width}}  {dev:15.6e}  {flips:13d}")
    print("invariance holds" if bad == 0 else f"invariance VIOLATED for {bad} features")
    return 0 if bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
