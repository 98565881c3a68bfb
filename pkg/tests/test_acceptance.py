"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints after
the run (see conftest.py). Wall times exclude the one-off load of the
compiled kernels, which the module fixture triggers up front.
"""
import dataclasses
import itertools
import math
import time

import numpy as np
import pytest

from _oracles import (Recorder, chain_walk, components, is_spanning_tree, nx_distances,
                      nx_mst_weight, selected_weight)
from conftest import ACCEPTANCE
from blackbox_lab import harness, mst, sssp
from blackbox_lab.cli import CONTROL, verify_campaign
from blackbox_lab.core import Session, Unrestricted, run, run_session
from blackbox_lab.graphs import DistinctUniform, gen_path, gen_random_connected
from blackbox_lab.harness import ExperimentConfig, fit_scaling, run_experiment, violations


def verdict(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def sweep(algorithm, family, sizes, seeds):
    t0 = time.perf_counter()
    rows = list(run_experiment(ExperimentConfig(algorithm, family, list(sizes), seeds=seeds)))
    return rows, time.perf_counter() - t0


def ratio(rows, predictor, statistic="mean"):
    return fit_scaling(rows, predictor, statistic=statistic, bootstrap=0)


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    for alg, fam, size in [("mst_unrestricted", "mst_path", 3), ("sssp_multi", "cheap_pred", 4),
                           ("sssp_single_unrestricted", "random_complete", 4),
                           ("struct_unary", "random_complete", 4)]:
        list(run_experiment(ExperimentConfig(alg, fam, [size], seeds=1)))


def test_criterion_01_mst_unrestricted_exact_count():
    sparse_n = {5: 4, 20: 10, 100: 50, 400: 200}
    cases = []
    for m in (5, 20, 100, 400):
        for seed in range(100):
            for g in (gen_path(m), gen_random_connected(sparse_n[m], m, DistinctUniform, seed)):
                _, chosen = mst.kruskal(g)
                position = {e: k for k, e in
                            enumerate(sorted(range(m), key=lambda i: (g.edges[i][2], i)))}
                t = max(position[i] for i in chosen) + 1
                cases.append((mst.mst_problem(g), seed, m, t))
    # a sub-second limit is at the mercy of scheduler jitter: time three
    # complete repetitions, check every one, keep the fastest
    times, bad = [], 0
    for _ in range(3):
        t0 = time.perf_counter()
        got = [run(mst.alg_mst_unrestricted, p, Unrestricted(), None, seed).queries_to_optimum
               for p, seed, _, _ in cases]
        times.append(time.perf_counter() - t0)
        bad += sum(q != 1 + m + t or t > m for q, (_, _, m, t) in zip(got, cases))
    took = min(times)
    verdict(1, bad == 0 and took < 1.0,
            f"{len(cases)} runs x3, {bad} off 1+m+t, best {took:.2f}s "
            f"(all {', '.join(f'{x:.2f}' for x in times)}; limit 1s)")


def test_criterion_02_mst_3ary_linear():
    rows, took = sweep("mst_3ary", "mst_sparse", [32, 64, 128, 256, 512, 1024], 30)
    fit = ratio(rows, "m")
    ok = all(r.success for r in rows) and 0.85 <= fit.slope <= 1.15 and fit.ratio <= 2.0
    verdict(2, ok and took < 30, f"slope {fit.slope:.3f}, ratio {fit.ratio:.3f}, {took:.1f}s")


def test_criterion_03_mst_binary_m_log_n():
    rows, took = sweep("mst_binary", "mst_sparse", [32, 64, 128, 256, 512, 1024], 30)
    by_n, by_m = ratio(rows, "m*log(n)"), ratio(rows, "m*log(m)")
    ok = all(r.success for r in rows) and by_n.ratio <= 3.0 and by_m.ratio <= 3.0
    verdict(3, ok and took < 60,
            f"ratio vs m log n {by_n.ratio:.3f}, vs m log m {by_m.ratio:.3f}, {took:.1f}s")


def test_criterion_04_mst_unary():
    rows, took = sweep("mst_unary", "mst_random", [8, 12, 16, 24], 20)
    fit = ratio(rows, "m*n*log(m/n)")
    ok = all(r.success and r.m == 2 * r.n for r in rows) and fit.ratio <= 3.0
    verdict(4, ok and took < 300, f"ratio {fit.ratio:.3f}, {took:.1f}s")


def test_criterion_05_mst_ranking_unary():
    rows, took = sweep("mst_rb_unary", "mst_random_unit", [8, 12, 16, 24], 20)
    fit = ratio(rows, "m*n*log(n)")
    ok = all(r.success and r.m == 2 * r.n for r in rows) and fit.ratio <= 3.0
    verdict(5, ok and took < 300, f"ratio {fit.ratio:.3f}, {took:.1f}s")


def test_criterion_06_sssp_multi_n_minus_1():
    families = ["hidden_path", "hidden_path_complete", "cheap_pred", "random_complete",
                "random_sparse"]
    took = 0.0
    over, exact_path, total = {}, True, 0
    for fam in families:
        rows, dt = sweep("sssp_multi", fam, range(4, 65), 100)
        took += dt
        total += len(rows)
        over[fam] = len(violations(rows))
        if fam == "hidden_path":
            exact_path = all(r.success and r.queries_to_optimum == r.n - 1 for r in rows)
    bad = sum(over.values())
    detail = (f"{bad}/{total} runs above n-1 ({', '.join(f'{k}={v}' for k, v in over.items())}); "
              f"hidden path exactly n-1: {exact_path}; {took:.1f}s")
    verdict(6, bad == 0 and exact_path and took < 10, detail)


def test_criterion_07_sssp_complete_graph():
    rows, took = sweep("sssp_multi_complete", "cheap_pred", range(4, 65), 100)
    bad = len(violations(rows))
    verdict(7, bad == 0 and took < 10, f"{len(rows)} runs, {bad} violations, {took:.1f}s")


def test_criterion_08_decomposition():
    t0 = time.perf_counter()
    bad = []
    for n in range(2, 201):
        trees = sssp.decompose_Kn(n)
        spanning = all(is_spanning_tree(n, t) for t in trees)
        covered = {(min(a, b), max(a, b)) for t in trees for a, b in t}
        full = covered == set(itertools.combinations(range(1, n + 1), 2))
        if not (spanning and full and len(trees) == (n + 1) // 2):
            bad.append(n)
    took = time.perf_counter() - t0
    verdict(8, not bad and took < 5, f"failures at n={bad}, {took:.2f}s")


def test_criterion_09_single_criterion_exact():
    rows_u, tu = sweep("sssp_single_unrestricted", "random_complete", range(4, 33), 50)
    rows_r, tr = sweep("sssp_single_ranking", "random_complete", range(4, 33), 50)
    bad = len(violations(rows_u)) + len(violations(rows_r))
    verdict(9, bad == 0 and tu + tr < 30,
            f"{len(rows_u) + len(rows_r)} runs, {bad} violations, {tu + tr:.1f}s")


def test_criterion_10_structure_preserving():
    sizes = [8, 12, 16, 24, 32]
    t0 = time.perf_counter()
    fits, ok = {}, True
    for alg, pred in [("struct_unary", "n^3*log(n)"), ("struct_binary", "n^2*log(n)"),
                      ("struct_3ary", "n^2")]:
        rows, _ = sweep(alg, "random_complete", sizes, 20)
        ok &= all(r.success for r in rows)
        fits[alg] = ratio(rows, pred).ratio
        if alg == "struct_3ary":
            slope = ratio(rows, "n").slope
    took = time.perf_counter() - t0
    ok &= all(v <= 3.0 for v in fits.values()) and 1.8 <= slope <= 2.2
    detail = ", ".join(f"{k} ratio {v:.3f}" for k, v in fits.items())
    verdict(10, ok and took < 900, f"{detail}; 3-ary slope {slope:.3f}; {took:.0f}s")


def test_criterion_11_redirecting_rls():
    rows, took = sweep("redirect_rls", "hidden_path_complete", [8, 16, 32, 64], 30)
    fit = ratio(rows, "n", statistic="median")
    ok = all(r.success for r in rows) and 2.3 <= fit.slope <= 3.5
    verdict(11, ok and took < 600, f"median slope {fit.slope:.3f}, {took:.0f}s")


def test_criterion_12_unbiasedness_campaign():
    t0 = time.perf_counter()
    reports = verify_campaign(100_000)
    took = time.perf_counter() - t0
    shipped = [r for r in reports if r["operator"] != CONTROL[0]]
    (control,) = [r for r in reports if r["operator"] == CONTROL[0]]
    worst = max(r["max_tv"] for r in shipped)
    ok = all(r["pass"] and r["max_tv"] <= 0.05 for r in shipped)
    ok &= not control["pass"] and control["max_tv"] >= 0.3
    verdict(12, ok and took < 120, f"{len(shipped)} operators, worst TV {worst:.4f}, "
            f"control TV {control['max_tv']:.3f}, {took:.0f}s")


def bits_of(i, m):
    return np.array([(i >> j) & 1 for j in range(m)], dtype=np.uint8)


def test_criterion_13_oracles_exhaustive():
    t0 = time.perf_counter()
    bad = 0
    for m in range(1, 13):
        g = gen_random_connected(min(m + 1, 6), m, DistinctUniform, m)
        f = mst.mst_oracle(g)
        unit = mst.mst_oracle(gen_path(m))
        for i in range(2 ** m):
            x = bits_of(i, m)
            v = f(x)
            bad += v.components != components(g.n, g.edges, x)
            bad += not math.isclose(v.weight, selected_weight(g.edges, x))
            bad += unit(x) != (m + 1 - int(x.sum()), float(x.sum()))
    for n in (2, 3, 4):
        for seed in range(3):
            inst = sssp.gen_random_sparse(n, n - 1 + seed % 2, seed) if n > 2 else \
                sssp.gen_random_complete(2, seed)
            multi, single = sssp.multi_oracle(inst), sssp.single_oracle(inst)
            for x in itertools.product(range(1, n + 1), repeat=n - 1):
                x = np.array(x, dtype=np.int64)
                walk = chain_walk(x, inst.weights, n)
                bad += list(multi(x)) != walk
                bad += not math.isclose(single(x), sum(inst.C if d == math.inf else d
                                                       for d in walk))
    rng = np.random.default_rng(0)
    for m in range(1, 11):
        g = gen_path(m) if m < 5 else gen_random_connected(6, m, seed=m)
        s = Session(mst.mst_problem(g), Unrestricted(), stop_at_optimum=False)
        x0 = rng.integers(0, 2, m).astype(np.uint8)
        hx = s.query(x0)
        for i in range(2 ** m):
            y = x0 ^ bits_of(i, m)
            hy = s.query(y)
            d = int(np.count_nonzero(x0 != y))
            bad += any(mst.hamming_probe(s, hx, hy, k) != (d == k) for k in range(m + 1))
    took = time.perf_counter() - t0
    verdict(13, bad == 0 and took < 60, f"{bad} mismatches, {took:.1f}s")


def terminal_point(alg, problem, seed):
    rec = Recorder(problem.oracle)
    s = run_session(alg, dataclasses.replace(problem, oracle=rec), budget=5_000_000, seed=seed)
    return (rec.points[s.queries_to_optimum - 1] if s.solved else None), s


def test_criterion_14_terminal_points_are_optimal():
    cases = {"mst": ("mst_random", 8), "multi": ("random_sparse", 10),
             "single": ("random_complete", 7)}
    checked = mismatches = 0
    for name, spec in harness.ALGORITHMS.items():
        family, size = cases[spec.kind]
        if name == "mst_rb_unary":
            family = "mst_random_unit"
        if name == "sssp_multi_complete":
            family = "cheap_pred"
        for seed in range(20):
            inst = harness.make_instance(family, size, seed)
            x, s = terminal_point(spec.fn, harness.make_problem(spec.kind, inst), seed)
            if x is None:
                continue
            checked += 1
            if spec.kind == "mst":
                ok = components(inst.n, inst.edges, x) == 1 and math.isclose(
                    selected_weight(inst.edges, x), nx_mst_weight(inst.n, inst.edges))
            else:
                got = chain_walk(x, inst.weights, inst.n)
                ok = np.allclose(got, nx_distances(inst.n, inst.graph.edges))
            mismatches += not ok
    verdict(14, mismatches == 0 and checked == 15 * 20,
            f"{checked} accepted runs re-checked, {mismatches} mismatches")
