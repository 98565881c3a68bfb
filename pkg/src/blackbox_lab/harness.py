"""Experiment engine: algorithm and family registries, sweeps, fits and reports."""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from . import mst, sssp
from .core import (Capability, RunRecord, check_permits, parse_capability, records_to_csv, run)
from .graphs import DistinctUniform, UnitWeights


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


# --------------------------------------------------------------------------
# registries


@dataclass(frozen=True)
class AlgSpec:
    fn: Callable
    kind: str                  # "mst", "multi" or "single"
    bound: str                 # claimed growth, as printed in reports
    predictor: str             # key into PREDICTORS
    exact: Callable[[int, int], float] | None = None   # per-run upper bound, if any
    baseline: bool = False


ALGORITHMS: dict[str, AlgSpec] = {
    "mst_unrestricted": AlgSpec(mst.alg_mst_unrestricted, "mst", "2m+1", "m", lambda n, m: 2 * m + 1),
    "mst_unary": AlgSpec(mst.alg_mst_unary, "mst", "O(mn log(m/n))", "m*n*log(m/n)"),
    "mst_rb_unary": AlgSpec(mst.alg_mst_rb_unary, "mst", "O(mn log n)", "m*n*log(n)"),
    "mst_binary": AlgSpec(mst.alg_mst_binary, "mst", "O(m log n)", "m*log(n)"),
    "mst_3ary": AlgSpec(mst.alg_mst_3ary, "mst", "O(m)", "m"),
    "sssp_multi": AlgSpec(sssp.alg_sssp_multi, "multi", "n-1", "n", lambda n, m: n - 1),
    "sssp_multi_complete": AlgSpec(sssp.alg_sssp_multi_complete, "multi", "floor((n+1)/2)+1", "n",
                                   lambda n, m: (n + 1) // 2 + 1),
    "sssp_single_unrestricted": AlgSpec(sssp.alg_sssp_single_unrestricted, "single", "n(n-1)/2",
                                        "n^2", lambda n, m: n * (n - 1) // 2),
    "sssp_single_ranking": AlgSpec(sssp.alg_sssp_single_ranking, "single", "(n-1)^2", "n^2",
                                   lambda n, m: (n - 1) ** 2),
    "struct_unary": AlgSpec(sssp.alg_struct_unary, "single", "O(n^3 log n)", "n^3*log(n)"),
    "struct_binary": AlgSpec(sssp.alg_struct_binary, "single", "O(n^2 log n)", "n^2*log(n)"),
    "struct_3ary": AlgSpec(sssp.alg_struct_3ary, "single", "O(n^2)", "n^2"),
    "redirect_rls": AlgSpec(sssp.baseline_redirect_rls, "single", "O(n^3)", "n^3"),
    "mst_rls": AlgSpec(mst.baseline_rls_mst, "mst", "O(m^2 log n)", "m^2*log(n)", baseline=True),
    "mst_ea": AlgSpec(mst.baseline_ea_mst, "mst", "O(m^2 log n)", "m^2*log(n)", baseline=True),
}

PREDICTORS: dict[str, Callable[[int, int], float]] = {
    "n": lambda n, m: n,
    "m": lambda n, m: m,
    "m*log(n)": lambda n, m: m * math.log2(n),
    "m*log(m)": lambda n, m: m * math.log2(m),
    "m*n*log(m/n)": lambda n, m: m * n * math.log(m / n),
    "m*n*log(n)": lambda n, m: m * n * math.log(n),
    "m^2*log(n)": lambda n, m: m * m * math.log(n),
    "n^2": lambda n, m: n * n,
    "n^2*log(n)": lambda n, m: n * n * math.log(n),
    "n^3": lambda n, m: n ** 3,
    "n^3*log(n)": lambda n, m: n ** 3 * math.log(n),
}


def _sparse_n(m: int) -> int:
    return max(2, m // 2)


# family name -> (kind, builder(size, seed, params)); "size" is m for the
# edge-indexed MST families and n everywhere else
FAMILIES: dict[str, tuple[str, Callable]] = {
    "mst_path": ("mst", lambda size, seed, p: mst.gen_path(size)),
    "mst_sparse": ("mst", lambda size, seed, p: mst.gen_random_connected(
        _sparse_n(size), size, DistinctUniform, seed)),
    "mst_random": ("mst", lambda size, seed, p: mst.gen_random_connected(
        size, min(int(p.get("density", 2) * size), size * (size - 1) // 2), DistinctUniform, seed)),
    "mst_random_unit": ("mst", lambda size, seed, p: mst.gen_random_connected(
        size, min(int(p.get("density", 2) * size), size * (size - 1) // 2), UnitWeights, seed)),
    "mst_hidden_tree": ("mst", lambda size, seed, p: mst.gen_complete_hidden_tree(size, seed)),
    "hidden_path": ("sssp", lambda size, seed, p: sssp.gen_hidden_path(size, seed)),
    "hidden_path_complete": ("sssp", lambda size, seed, p: sssp.gen_hidden_path(size, seed, complete=True)),
    "cheap_pred": ("sssp", lambda size, seed, p: sssp.gen_complete_cheap_pred(size, seed)),
    "random_complete": ("sssp", lambda size, seed, p: sssp.gen_random_complete(
        size, seed, int(p.get("low", 1)), int(p.get("high", 100)))),
    "random_sparse": ("sssp", lambda size, seed, p: sssp.gen_random_sparse(
        size, min(int(p.get("density", 2) * size), size * (size - 1) // 2), seed)),
}


def make_instance(family: str, size: int, seed: int, params: dict | None = None):
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}")
    return FAMILIES[family][1](size, seed, params or {})


def make_problem(kind: str, inst):
    if kind == "mst":
        return mst.mst_problem(inst)
    if kind == "multi":
        return sssp.multi_problem(inst)
    return sssp.single_problem(inst)


# --------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    algorithm: str
    family: str
    sizes: list[int]
    seeds: int = 10
    seed: int = 0
    model: str | None = None
    params: dict = field(default_factory=dict)
    budget_multiplier: float = 50.0
    budget: int | None = None
    out: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if not self.sizes:
            raise ConfigError("size grid is empty")
        if self.seeds < 1:
            raise ConfigError("need at least one seed")
        spec = ALGORITHMS[self.algorithm]
        fam_kind = FAMILIES[self.family][0]
        if (spec.kind == "mst") != (fam_kind == "mst"):
            raise ConfigError(f"{self.algorithm} cannot run on family {self.family}")
        check_permits(self.capability, spec.fn.requires)

    @property
    def capability(self) -> Capability:
        if self.model is None:
            return ALGORITHMS[self.algorithm].fn.requires
        return parse_capability(self.model)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None


def budget_for(spec: AlgSpec, n: int, m: int, multiplier: float) -> int:
    base = spec.exact(n, m) if spec.exact else PREDICTORS[spec.predictor](n, m)
    return max(1000, int(math.ceil(multiplier * max(base, 1.0))))


def _cell(args) -> RunRecord:
    algorithm, family, size, seed, params, cap_text, multiplier, budget = args
    spec = ALGORITHMS[algorithm]
    inst = make_instance(family, size, seed, params)
    cap = parse_capability(cap_text)
    if algorithm == "mst_unary" and mst.has_duplicate_weights(inst):
        spec = ALGORITHMS["mst_rb_unary"]
        cap = spec.fn.requires
    problem = make_problem(spec.kind, inst)
    n, m = inst.n, inst.m
    b = budget if budget is not None else budget_for(spec, n, m, multiplier)
    return run(spec.fn, problem, cap, b, seed, instance_id=inst.instance_id)


def _cells(config: ExperimentConfig) -> list[tuple]:
    cap = str(config.capability)
    return [(config.algorithm, config.family, size, config.seed + i, config.params, cap,
             config.budget_multiplier, config.budget)
            for size in config.sizes for i in range(config.seeds)]


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> Iterator[RunRecord]:
    """One record per (size, seed), in grid order whatever the parallelism."""
    cells = _cells(config)
    if jobs > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(jobs) as pool:
            yield from pool.imap(_cell, cells)
    else:
        for c in cells:
            yield _cell(c)


def write_records(records: Iterable[RunRecord], path: str) -> None:
    """Write the CSV via a temporary file so readers never see a partial table."""
    text = records_to_csv(list(records))
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".part")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def violations(records: Iterable[RunRecord]) -> list[RunRecord]:
    """Runs of exact-bound algorithms that failed or exceeded the bound."""
    bad = []
    for r in records:
        spec = ALGORITHMS.get(r.algorithm)
        if spec is None or spec.exact is None:
            continue
        if not r.success or r.queries_to_optimum > spec.exact(r.n, r.m):
            bad.append(r)
    return bad


# --------------------------------------------------------------------------
# scaling fits


@dataclass(frozen=True)
class ScalingFit:
    predictor: str
    slope: float
    intercept: float
    residual_spread: float
    ratio: float
    slope_band: tuple[float, float]
    points: tuple            # (n, m, predictor value, statistic)

    def to_dict(self) -> dict:
        return {"predictor": self.predictor, "slope": self.slope, "intercept": self.intercept,
                "residual_spread": self.residual_spread, "ratio": self.ratio,
                "slope_band": list(self.slope_band),
                "points": [list(p) for p in self.points]}


def _loglog(xs, ys) -> tuple[float, float, float]:
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.std(resid))


def fit_scaling(records: Iterable[RunRecord], predictor: str, statistic: str = "mean",
                min_sizes: int = 4, min_seeds: int = 10, bootstrap: int = 200,
                seed: int = 0) -> ScalingFit:
    """Log-log least squares of the per-size statistic against a predictor."""
    if predictor not in PREDICTORS:
        raise ValueError(f"unknown predictor {predictor!r}")
    groups: dict[tuple[int, int], list[int]] = {}
    for r in records:
        if r.success:
            groups.setdefault((r.n, r.m), []).append(r.queries_to_optimum)
    if len(groups) < min_sizes:
        raise InsufficientData(f"{len(groups)} sizes, need {min_sizes}")
    thin = [k for k, v in groups.items() if len(v) < min_seeds]
    if thin:
        raise InsufficientData(f"sizes {thin} have fewer than {min_seeds} successful runs")
    stat = np.mean if statistic == "mean" else np.median
    keys = sorted(groups)
    xs = np.array([PREDICTORS[predictor](n, m) for n, m in keys], dtype=float)
    if np.any(xs <= 0):
        raise InsufficientData("predictor is not positive on the whole grid")
    samples = [np.array(groups[k], dtype=float) for k in keys]
    ys = np.array([stat(s) for s in samples])
    slope, intercept, spread = _loglog(xs, ys)
    norm = ys / xs
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(bootstrap):
        yb = np.array([stat(s[rng.integers(0, len(s), len(s))]) for s in samples])
        boot.append(_loglog(xs, yb)[0])
    band = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5))) if boot else (slope, slope)
    pts = tuple((n, m, float(x), float(y)) for (n, m), x, y in zip(keys, xs, ys))
    return ScalingFit(predictor, slope, intercept, spread, float(norm.max() / norm.min()), band, pts)


# --------------------------------------------------------------------------
# reports


def report(records: list[RunRecord]) -> tuple[str, int]:
    """Summary table, one row per algorithm, plus the number of bound violations."""
    by_alg: dict[str, list[RunRecord]] = {}
    for r in records:
        by_alg.setdefault(r.algorithm, []).append(r)
    header = f"{'algorithm':<26} {'model':<34} {'claimed':<18} {'runs':>5} {'ok':>5} " \
             f"{'mean q (largest)':>17} {'slope':>7} {'ratio':>7} {'viol':>5}"
    lines_main, lines_base = [header, "-" * len(header)], [header, "-" * len(header)]
    bad_total = 0
    for name in ALGORITHMS:
        rs = by_alg.get(name)
        if not rs:
            continue
        spec = ALGORITHMS[name]
        ok = [r for r in rs if r.success]
        bad = len(violations(rs))
        bad_total += bad
        largest = max((r.n, r.m) for r in rs)
        top = [r.queries_to_optimum for r in ok if (r.n, r.m) == largest]
        mean_top = f"{np.mean(top):.1f}" if top else "-"
        try:
            fit = fit_scaling(rs, spec.predictor, min_seeds=1, bootstrap=0)
            slope, ratio = f"{fit.slope:.3f}", f"{fit.ratio:.3f}"
        except InsufficientData:
            slope = ratio = "-"
        line = f"{name:<26} {rs[0].model:<34} {spec.bound:<18} {len(rs):>5} {len(ok):>5} " \
               f"{mean_top:>17} {slope:>7} {ratio:>7} {bad:>5}"
        (lines_base if spec.baseline else lines_main).append(line)
    text = "\n".join(lines_main)
    if len(lines_base) > 2:
        text += "\n\nheuristic baselines\n" + "\n".join(lines_base)
    text += f"\n\nbound violations: {bad_total}\n"
    return text, bad_total
