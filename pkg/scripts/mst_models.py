"""Mean query counts of every MST algorithm on one shared grid, side by side.

Shows how the cost grows as the oracle gets weaker: full access, ranking only,
then unbiased variation of arity 3, 2 and 1, plus the two heuristics.
"""
import argparse

import numpy as np

from blackbox_lab.harness import ALGORITHMS, ExperimentConfig, run_experiment

ap = argparse.ArgumentParser()
ap.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10, 12])
ap.add_argument("--seeds", type=int, default=5)
args = ap.parse_args()

names = [a for a in ALGORITHMS if a.startswith("mst_")]
print(f"{'algorithm':<18}" + "".join(f"{f'n={n}':>10}" for n in args.sizes))
for name in names:
    # duplicate-free weights, so mst_unary is not routed elsewhere
    rows = list(run_experiment(ExperimentConfig(name, "mst_random", args.sizes, seeds=args.seeds)))
    means = [np.mean([r.queries_to_optimum for r in rows if r.n == n and r.success])
             for n in args.sizes]
    print(f"{name:<18}" + "".join(f"{q:>10.0f}" for q in means))
