"""Sweep one algorithm over a size grid and fit a power law to its query counts.

    python scripts/scaling_sweep.py mst_3ary mst_sparse m --sizes 32 64 128 256 --seeds 20
"""
import argparse
import sys
import time

from blackbox_lab.harness import ExperimentConfig, InsufficientData, fit_scaling, run_experiment

ap = argparse.ArgumentParser()
ap.add_argument("algorithm")
ap.add_argument("family")
ap.add_argument("predictor", help='e.g. "m", "m*log(n)", "n^2"')
ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256])
ap.add_argument("--seeds", type=int, default=20)
ap.add_argument("--jobs", type=int, default=1)
args = ap.parse_args()

t0 = time.perf_counter()
rows = list(run_experiment(ExperimentConfig(args.algorithm, args.family, args.sizes,
                                            seeds=args.seeds), jobs=args.jobs))
print(f"{len(rows)} runs in {time.perf_counter() - t0:.1f}s, "
      f"{sum(not r.success for r in rows)} unsolved")

try:
    fit = fit_scaling(rows, args.predictor)
except InsufficientData as e:
    sys.exit(f"cannot fit: {e}")
print(f"{'n':>6} {'m':>7} {'predictor':>12} {'mean queries':>14} {'q/pred':>7}")
for n, m, p, q in fit.points:
    print(f"{n:>6} {m:>7} {p:>12.1f} {q:>14.1f} {q / p:>7.3f}")
lo, hi = fit.slope_band
print(f"log-log slope {fit.slope:.3f} (bootstrap band {lo:.3f}..{hi:.3f}), "
      f"q/pred max over min {fit.ratio:.3f}")
