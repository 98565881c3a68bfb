import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blackbox_lab import harness
from blackbox_lab.core import CapabilityError, RunRecord, records_from_csv, records_to_csv
from blackbox_lab.harness import (ConfigError, ExperimentConfig, InsufficientData, fit_scaling,
                                  report, run_experiment, violations, write_records)


def planted(law, sizes, seeds=10, algorithm="mst_3ary"):
    return [RunRecord(f"i{m}", algorithm, "unrestricted", max(2, m // 2), m, s, int(law(m)),
                      None, True) for m in sizes for s in range(seeds)]


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("mst_3ary", "mst_sparse", [])
    with pytest.raises(ConfigError):
        ExperimentConfig("mst_3ary", "mst_sparse", [8], seeds=0)
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", "mst_sparse", [8])
    with pytest.raises(ConfigError):
        ExperimentConfig("mst_3ary", "nope", [8])
    with pytest.raises(ConfigError):
        ExperimentConfig("mst_3ary", "hidden_path", [8])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"algorithm": "mst_3ary", "family": "mst_path", "sizes": [4],
                                    "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"algorithm": "mst_3ary"})
    # a weaker model than the algorithm needs
    with pytest.raises(CapabilityError):
        ExperimentConfig("mst_3ary", "mst_sparse", [8], model="unbiased-1/hypercube")
    cfg = ExperimentConfig("mst_3ary", "mst_sparse", [8], model="unrestricted")
    assert str(cfg.capability) == "unrestricted"


def test_every_registered_algorithm_has_a_predictor_and_model():
    assert len(harness.ALGORITHMS) == 15
    assert sum(not s.baseline for s in harness.ALGORITHMS.values()) == 13
    for name, spec in harness.ALGORITHMS.items():
        assert spec.predictor in harness.PREDICTORS
        assert spec.fn.name == name


def test_unrestricted_paths_give_one_row_per_cell():
    cfg = ExperimentConfig("mst_unrestricted", "mst_path", [4, 8], seeds=3)
    rows = list(run_experiment(cfg))
    assert len(rows) == 6
    assert [(r.m, r.seed) for r in rows] == [(4, 0), (4, 1), (4, 2), (8, 0), (8, 1), (8, 2)]
    assert all(r.success and r.queries_to_optimum <= 2 * r.m + 1 for r in rows)
    assert violations(rows) == []


def test_rerun_is_byte_identical(tmp_path):
    cfg = ExperimentConfig("mst_3ary", "mst_sparse", [16, 32], seeds=3)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records(run_experiment(cfg), str(a))
    write_records(run_experiment(cfg), str(b))
    assert a.read_bytes() == b.read_bytes()
    assert len(records_from_csv(a.read_text())) == 6


def test_parallel_cells_match_serial():
    cfg = ExperimentConfig("sssp_multi", "random_sparse", [6, 9], seeds=3)
    assert list(run_experiment(cfg, jobs=2)) == list(run_experiment(cfg))


def test_write_records_leaves_no_partial_files(tmp_path):
    path = tmp_path / "sub" / "out.csv"
    rows = planted(lambda m: m, [4])
    write_records(rows, str(path))
    write_records(rows[:2], str(path))
    assert os.listdir(path.parent) == ["out.csv"]
    assert records_from_csv(path.read_text()) == rows[:2]


def test_duplicate_weights_route_to_the_ranking_variant():
    cfg = ExperimentConfig("mst_unary", "mst_random_unit", [6], seeds=2)
    rows = list(run_experiment(cfg))
    assert {r.algorithm for r in rows} == {"mst_rb_unary"}
    assert all(r.success for r in rows)


def test_fit_recovers_planted_laws():
    sizes = [8, 16, 32, 64, 128]
    lin = fit_scaling(planted(lambda m: 7 * m, sizes), "m")
    assert abs(lin.slope - 1) < 1e-6 and abs(lin.ratio - 1) < 1e-6
    assert abs(lin.intercept - np.log(7)) < 1e-6 and lin.residual_spread < 1e-6
    quad = fit_scaling(planted(lambda m: m * m, sizes), "m")
    assert abs(quad.slope - 2) < 1e-6
    assert quad.slope_band[0] <= quad.slope <= quad.slope_band[1]
    assert len(quad.points) == 5


@given(st.floats(0.5, 3.0), st.floats(1.0, 50.0))
@settings(max_examples=30, deadline=None)
def test_fit_recovers_any_power_law(exponent, scale):
    sizes = [10, 100, 1000, 10000]
    # the fit only reads the counts, so plant exact real values
    rows = [RunRecord("x", "a", "unrestricted", 2, m, s, scale * m ** exponent, None, True)
            for m in sizes for s in range(10)]
    fit = fit_scaling(rows, "m", bootstrap=0)
    assert abs(fit.slope - exponent) < 1e-6


def test_fit_needs_enough_data():
    with pytest.raises(InsufficientData):
        fit_scaling(planted(lambda m: m, [8, 16, 32]), "m")
    with pytest.raises(InsufficientData):
        fit_scaling(planted(lambda m: m, [8, 16, 32, 64], seeds=9), "m")
    with pytest.raises(ValueError):
        fit_scaling(planted(lambda m: m, [8, 16, 32, 64]), "m^7")


def test_fit_median_statistic():
    rows = planted(lambda m: 3 * m, [8, 16, 32, 64])
    rows[0] = RunRecord("i8", "mst_3ary", "unrestricted", 4, 8, 0, 10**6, None, True)
    assert abs(fit_scaling(rows, "m", statistic="median").slope - 1) < 1e-6
    assert fit_scaling(rows, "m").slope < 0.5


def test_violations_catch_exact_bound_breaches():
    ok = RunRecord("a", "sssp_multi", "unrestricted", 8, 10, 0, 7, None, True)
    over = RunRecord("b", "sssp_multi", "unrestricted", 8, 10, 1, 8, None, True)
    failed = RunRecord("c", "mst_unrestricted", "unrestricted", 5, 4, 0, None, 100, False)
    loose = RunRecord("d", "mst_3ary", "unrestricted", 5, 4, 0, 10**6, None, True)
    assert violations([ok, over, failed, loose]) == [over, failed]


def test_report_counts_violations():
    rows = planted(lambda m: 3 * m, [8, 16, 32, 64], seeds=2)
    text, bad = report(rows)
    assert bad == 0 and "mst_3ary" in text and "bound violations: 0" in text
    rows.append(RunRecord("b", "sssp_multi", "unrestricted", 8, 10, 1, 8, None, True))
    text, bad = report(rows)
    assert bad == 1 and "bound violations: 1" in text


def test_report_separates_baselines():
    rows = planted(lambda m: m, [8, 16, 32, 64], algorithm="mst_rls")
    text, _ = report(rows + planted(lambda m: m, [8, 16, 32, 64]))
    main, base = text.split("heuristic baselines")
    assert "mst_3ary" in main and "mst_rls" not in main and "mst_rls" in base


def test_csv_rows_from_real_runs_round_trip():
    cfg = ExperimentConfig("sssp_single_ranking", "random_complete", [5], seeds=4)
    rows = list(run_experiment(cfg))
    assert records_from_csv(records_to_csv(rows)) == rows
