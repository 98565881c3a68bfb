"""Command line entry point: ``blackbox-lab <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import harness, operators
from .core import CapabilityError, records_from_csv, records_to_csv
from .harness import ConfigError, ExperimentConfig

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_configs(path: str) -> list[ExperimentConfig]:
    """A TOML file holds one ``[experiment]`` table or an ``[[experiment]]`` array."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    exps = data.get("experiment")
    if exps is None:
        raise ConfigError(f"{path} has no [experiment] table")
    if isinstance(exps, dict):
        exps = [exps]
    return [ExperimentConfig.from_dict(dict(e)) for e in exps]


def _override(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "budget_multiplier", None) is not None:
        cfg.budget_multiplier = args.budget_multiplier
    return cfg


def _run_configs(configs, args) -> list:
    records = []
    for cfg in configs:
        rows = list(harness.run_experiment(_override(cfg, args), jobs=args.jobs))
        if cfg.out and not getattr(args, "out", None):
            harness.write_records(rows, cfg.out)
        records.extend(rows)
    return records


def _emit(text: str, out: str | None) -> None:
    if out:
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        seed = args.seed + i
        inst = harness.make_instance(args.family, args.size, seed)
        text = inst.to_dimacs()
        path = os.path.join(args.out, f"{args.family}_{args.size}_{seed}.txt")
        with open(path, "w") as fh:
            fh.write(text)
        print(path)
    return EXIT_OK


def _configs_from_args(args) -> list[ExperimentConfig]:
    if args.config:
        return load_configs(args.config)
    if not (args.algorithm and args.family and args.sizes):
        raise UsageError("give --config or all of --algorithm, --family, --sizes")
    return [ExperimentConfig(args.algorithm, args.family, args.sizes, seeds=args.seeds,
                             model=args.model)]


def cmd_run(args) -> int:
    records = _run_configs(_configs_from_args(args), args)
    if args.out:
        harness.write_records(records, args.out)
    elif not args.config or not any(c.out for c in load_configs(args.config)):
        sys.stdout.write(records_to_csv(records))
    bad = harness.violations(records)
    for r in bad:
        print(f"violation: {r.algorithm} n={r.n} m={r.m} seed={r.seed} "
              f"queries={r.queries_to_optimum}", file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_fit(args) -> int:
    with open(args.csv) as fh:
        records = records_from_csv(fh.read())
    if args.algorithm:
        records = [r for r in records if r.algorithm == args.algorithm]
    fit = harness.fit_scaling(records, args.predictor, statistic=args.statistic)
    _emit(json.dumps(fit.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


SHIPPED_CHECKS = [
    ("uniform_bits", "hypercube", 6), ("rls", "hypercube", 8), ("rls2", "hypercube", 6),
    ("standard_bit_mutation", "hypercube", 5), ("complement", "hypercube", 8),
    ("rls_k", "hypercube", 6), ("update", "hypercube", 8), ("test", "hypercube", 8),
    ("distance_probe", "hypercube", 6),
    ("self_loops", "structure-preserving", 6), ("one_to_source", "structure-preserving", 6),
    ("all_to_one", "structure-preserving", 6), ("uniform_preds", "redirecting", 4),
    ("redirect_one", "redirecting", 5), ("extend_path", "structure-preserving", 6),
    ("attach_any", "structure-preserving", 6), ("attach", "structure-preserving", 6),
    ("mark_union", "structure-preserving", 6), ("keep_marked", "structure-preserving", 6),
    ("agree", "structure-preserving", 6), ("attach_unmarked", "structure-preserving", 6),
    ("graft", "structure-preserving", 6),
]
CONTROL = ("flip_first_bit", "hypercube", 8)


def _op(name: str) -> operators.VariationOp:
    for v in vars(operators).values():
        if isinstance(v, operators.VariationOp) and v.name == name:
            return v
    raise UsageError(f"unknown operator {name!r}")


def _preds(n: int, assign: dict[int, int]) -> np.ndarray:
    x = np.arange(2, n + 1, dtype=np.int64)
    for node, target in assign.items():
        x[node - 2] = target
    return x


def campaign_case(name: str, dim: int, rng) -> tuple[list | None, dict | None]:
    """Parents and parameters that reach an operator's interesting branch.

    Random predecessor vectors are almost never well-formed paths or trees,
    so the tree-shaped operators get hand-built parents instead.
    """
    if name in ("rls_k", "distance_probe"):
        bits = lambda s: np.array([int(ch) for ch in s], dtype=np.uint8)
        x = bits("011010")
        # distance 2 (probe returns x) and distance 4 (probe and rls_k move)
        return [(x, bits("110010")), (x, bits("100110"))], {"k": 2}
    if name not in ("extend_path", "attach_unmarked", "attach_any", "attach"):
        return None, None
    n = dim
    path = _preds(n, {3: 1, 5: 3})                # 1 <- 3 <- 5
    tree = _preds(n, {2: 1, 3: 1, 4: 3})          # 1 <- 2, 1 <- 3 <- 4
    if name == "extend_path":
        return [(path,)], None
    if name == "attach_unmarked":
        return [(path, _preds(n, {2: 1}))], None
    if name == "attach_any":
        return [(tree,)], None
    kids = operators.children_of(tree)
    parent = {c: p for p, cs in kids.items() for c in cs}
    return [(tree,)], {"address": operators.address_in(kids, parent, 3)}


def verify_campaign(trials: int = 100_000, names: list[str] | None = None) -> list[dict]:
    rng = np.random.default_rng(0)
    out = []
    for name, notion, dim in SHIPPED_CHECKS + [CONTROL]:
        if names and name not in names:
            continue
        panels, params = campaign_case(name, dim, rng)
        rep = operators.verify_unbiased(_op(name), notion, dim, trials=trials, parents=panels,
                                        params=params)
        rep["expected"] = "fail" if name == CONTROL[0] else "pass"
        out.append(rep)
    return out


def cmd_verify(args) -> int:
    if not args.all and not args.operator:
        raise UsageError("give --all or --operator NAME")
    reports = verify_campaign(args.trials, None if args.all else args.operator)
    ok = True
    for rep in reports:
        print(operators.report_json(rep))
        want = rep["expected"] == "pass"
        if rep["pass"] != want:
            ok = False
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_report(args) -> int:
    records = []
    for path in args.csv or []:
        with open(path) as fh:
            records.extend(records_from_csv(fh.read()))
    if args.config:
        records.extend(_run_configs(load_configs(args.config), args))
    if not records:
        raise UsageError("report needs --config or --csv")
    text, bad = harness.report(records)
    _emit(text, args.out)
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blackbox-lab")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="TOML experiment or campaign file")
        sp.add_argument("--seed", type=int, help="base seed override")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--budget-multiplier", type=float, dest="budget_multiplier")

    g = sub.add_parser("generate", help="write instance files")
    g.add_argument("--family", required=True, choices=sorted(harness.FAMILIES))
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="instances")
    g.set_defaults(func=cmd_generate)

    for name, helptext in (("run", "run one experiment"), ("sweep", "run every experiment of a campaign")):
        r = sub.add_parser(name, help=helptext)
        common(r)
        r.add_argument("--algorithm", choices=sorted(harness.ALGORITHMS))
        r.add_argument("--family", choices=sorted(harness.FAMILIES))
        r.add_argument("--sizes", type=int, nargs="+")
        r.add_argument("--seeds", type=int, default=10)
        r.add_argument("--model")
        r.set_defaults(func=cmd_run)

    f = sub.add_parser("fit", help="fit a scaling law to a CSV of runs")
    f.add_argument("--csv", required=True)
    f.add_argument("--predictor", required=True, choices=sorted(harness.PREDICTORS))
    f.add_argument("--algorithm")
    f.add_argument("--statistic", choices=["mean", "median"], default="mean")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    v = sub.add_parser("verify-unbiased", help="statistical symmetry check of operators")
    v.add_argument("--all", action="store_true")
    v.add_argument("--operator", nargs="+")
    v.add_argument("--trials", type=int, default=100_000)
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="summary table with claimed bounds")
    common(rp)
    rp.add_argument("--csv", nargs="+")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, CapabilityError, harness.InsufficientData, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
