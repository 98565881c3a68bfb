"""How often the multi-criteria SSSP algorithm needs n queries instead of n - 1.

The closing query is needed exactly when the last settled node does not hang
off the node settled just before it, so path-shaped instances never pay it.
"""
import argparse
from collections import Counter

from blackbox_lab.harness import ExperimentConfig, run_experiment

FAMILIES = ["hidden_path", "hidden_path_complete", "cheap_pred", "random_complete",
            "random_sparse"]

ap = argparse.ArgumentParser()
ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
ap.add_argument("--seeds", type=int, default=100)
args = ap.parse_args()

print(f"{'family':<22}" + "".join(f"{n:>8}" for n in args.sizes) + "   max extra")
for fam in FAMILIES:
    rows = list(run_experiment(ExperimentConfig("sssp_multi", fam, args.sizes, seeds=args.seeds)))
    over = Counter(r.n for r in rows if r.queries_to_optimum > r.n - 1)
    extra = max(r.queries_to_optimum - (r.n - 1) for r in rows)
    print(f"{fam:<22}" + "".join(f"{over[n] / args.seeds:>8.2f}" for n in args.sizes)
          + f"   {extra:>9}")
print("entries: fraction of runs above n - 1")
