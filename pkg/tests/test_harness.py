"""Experiment drivers: statistics, reports, determinism, round-trips."""

import json
import math

import numpy as np
import pytest

from relq import __version__
from relq.brownian import prob_at_least_one, prob_three_or_more
from relq.harness import (
    ExperimentConfig,
    Report,
    conjecture_experiment,
    correlation_gap_closed_form,
    end_to_end_ratio,
    format_report_csv,
    format_report_json,
    mc_correlation_gap,
    mc_sign_change,
    parse_report_csv,
    report_gate_ok,
    reproduce_constants,
    write_report,
)
from relq.instance import Instance, generate_instance
from relq.sdp import SolverConfig

TRIANGLE = Instance(p=4, n=3, equations=[(0, 1, 2), (1, 2, 2), (2, 0, 2)])


def _cells(report: Report) -> list[dict]:
    return [dict(zip(report.columns, row)) for row in report.rows]


def test_experiment_config_validation():
    ExperimentConfig()
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(s=999)
    with pytest.raises(ValueError):
        ExperimentConfig(alpha=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(ell=0)
    with pytest.raises(ValueError):
        ExperimentConfig(theta_grid=(0.1, 4.0))


def test_report_csv_round_trip():
    report = Report(
        name="demo",
        parameters={"k": 1},
        columns=["label", "value", "count", "flag"],
        rows=[["a", 0.1 + 0.2, 7, True], ["b", -1.5e-300, 0, False]],
    )
    text = format_report_csv(report)
    columns, rows = parse_report_csv(text)
    assert columns == report.columns
    assert rows == report.rows
    with pytest.raises(ValueError):
        parse_report_csv("")


def test_write_report_emits_csv_and_json(tmp_path):
    report = mc_correlation_gap(theta=math.pi / 3, trials=1000, seed=5)
    csv_path, json_path = write_report(report, tmp_path / "gap.csv")
    assert csv_path.exists() and json_path.exists()
    summary = json.loads(json_path.read_text())
    assert set(summary) == {"name", "parameters", "provenance", "columns", "row_count"}
    assert summary["provenance"] == {"package": "relq", "version": __version__, "seed": 5}
    assert summary["row_count"] == 1
    columns, rows = parse_report_csv(csv_path.read_text())
    assert columns == report.columns
    assert rows == report.rows


def test_reports_are_byte_identical_on_rerun(tmp_path):
    a = mc_correlation_gap(theta=math.pi / 3, trials=2000, seed=5)
    b = mc_correlation_gap(theta=math.pi / 3, trials=2000, seed=5)
    assert format_report_csv(a) == format_report_csv(b)
    assert format_report_json(a) == format_report_json(b)
    pa = write_report(a, tmp_path / "a.csv")
    pb = write_report(b, tmp_path / "b.csv")
    assert pa[0].read_bytes() == pb[0].read_bytes()
    assert pa[1].read_bytes() == pb[1].read_bytes()


def test_mc_sign_change_statistics():
    report = mc_sign_change(s=200, trials=4000, seed=17)
    cells = {row[0]: row for row in report.rows}
    freqs = {name: row[1] for name, row in cells.items()}
    assert freqs["count_zero"] + freqs["count_one"] + freqs["count_two_plus"] == pytest.approx(1.0, abs=1e-12)
    # two or more cyclic up-crossings and three or more half-trace
    # alternations are the same event, counted by two different routes
    assert freqs["count_two_plus"] == freqs["half_alternations_three_plus"]
    p1, p3 = prob_at_least_one(), prob_three_or_more()
    assert cells["count_zero"][3] == pytest.approx(1.0 - p1, abs=1e-12)
    assert cells["count_one"][3] == pytest.approx(p1 - p3, abs=1e-12)
    assert cells["count_two_plus"][3] == pytest.approx(p3, abs=1e-12)
    for name, row in cells.items():
        f = row[1]
        assert row[2] == pytest.approx(math.sqrt(f * (1 - f) / 4000), abs=1e-12)


def test_mc_sign_change_matches_quadrature_at_scale():
    report = mc_sign_change(s=2000, trials=20_000, seed=5)
    freqs = {row[0]: row[1] for row in report.rows}
    assert freqs["count_one"] >= 0.96
    assert freqs["count_one"] == pytest.approx(prob_at_least_one() - prob_three_or_more(), abs=0.005)


def test_mc_sign_change_validation_and_determinism():
    with pytest.raises(ValueError):
        mc_sign_change(s=99, trials=10, seed=0)
    with pytest.raises(ValueError):
        mc_sign_change(s=200, trials=0, seed=0)
    a = mc_sign_change(s=200, trials=3000, seed=8)
    b = mc_sign_change(s=200, trials=3000, seed=8)
    assert format_report_csv(a) == format_report_csv(b)


def test_mc_correlation_gap_closed_forms():
    assert correlation_gap_closed_form(math.pi) == pytest.approx(1.595769, abs=1e-6)
    assert correlation_gap_closed_form(math.pi / 2) == pytest.approx(1.128379, abs=1e-6)
    zero = mc_correlation_gap(theta=0.0, trials=1000, seed=3)
    cell = _cells(zero)[0]
    assert cell["mean_abs_gap"] == 0.0
    assert cell["stderr"] == 0.0
    for theta in (math.pi / 2, math.pi):
        report = mc_correlation_gap(theta=theta, trials=200_000, seed=3)
        cell = _cells(report)[0]
        rel = abs(cell["mean_abs_gap"] - cell["closed_form"]) / cell["closed_form"]
        assert rel <= 0.01
    with pytest.raises(ValueError):
        mc_correlation_gap(theta=-0.1, trials=10, seed=0)
    with pytest.raises(ValueError):
        mc_correlation_gap(theta=1.0, trials=0, seed=0)


def test_conjecture_experiment_zero_angle_and_shape():
    report = conjecture_experiment([0.0, math.pi / 2], s=200, trials=4000, seed=13)
    cells = _cells(report)
    assert cells[0]["theta"] == 0.0
    assert cells[0]["audit_ok"] is True
    assert cells[0]["conditioned"] > 0
    # identical increments give identical traces, so every distance is zero
    assert cells[0]["mean_distance"] == 0.0
    assert cells[0]["bound"] == 0.0
    right = cells[1]
    assert right["bound"] == pytest.approx(0.25, abs=1e-12)
    assert 0.0 <= right["mean_distance"] <= 0.5
    assert right["cos_theta"] == pytest.approx(0.0, abs=1e-12)
    assert right["conditioning_rate"] <= right["marginal_one_rate"]


def test_conjecture_experiment_validation_and_determinism():
    with pytest.raises(ValueError):
        conjecture_experiment([0.5], s=99, trials=10, seed=0)
    with pytest.raises(ValueError):
        conjecture_experiment([0.5], s=200, trials=0, seed=0)
    with pytest.raises(ValueError):
        conjecture_experiment([3.5], s=200, trials=10, seed=0)
    a = conjecture_experiment([math.pi / 6], s=200, trials=2000, seed=4)
    b = conjecture_experiment([math.pi / 6], s=200, trials=2000, seed=4)
    assert format_report_csv(a) == format_report_csv(b)


def test_conjecture_marginal_rate_matches_sign_change_mc():
    # same marginal walk process, two independent drivers
    sign = mc_sign_change(s=500, trials=20_000, seed=9)
    one = {row[0]: (row[1], row[2]) for row in sign.rows}["count_one"]
    conj = conjecture_experiment([math.pi / 6], s=1000, trials=20_000, seed=10)
    cell = _cells(conj)[0]
    rate = cell["marginal_one_rate"]
    se = math.sqrt(rate * (1 - rate) / 20_000)
    assert abs(rate - one[0]) <= 3.0 * math.sqrt(se * se + one[1] * one[1])


def test_end_to_end_planted_instance():
    inst, hidden = generate_instance(n=4, p=8, m=6, seed=21, planted=True)
    assert hidden is not None
    report = end_to_end_ratio(inst, ExperimentConfig(trials=50, seed=2, ell=1))
    cell = _cells(report)[0]
    assert cell["brute_optimum"] == pytest.approx(6.0, abs=1e-12)
    assert cell["sdp_value"] >= 6.0 - 1e-3
    assert cell["solver_converged"] is True
    assert cell["sandwich_ok"] is True
    assert cell["mean_rounded"] <= cell["brute_optimum"] + 3 * cell["stderr"]


def test_end_to_end_lifted_triangle(tmp_path):
    report = end_to_end_ratio(TRIANGLE, ExperimentConfig(trials=300, seed=1, ell=5))
    cell = _cells(report)[0]
    assert cell["ell"] == 5
    assert cell["sdp_value"] == pytest.approx(2.25, abs=1e-6)
    assert cell["brute_optimum"] == pytest.approx(2.0, abs=1e-12)
    assert cell["sandwich_ok"] is True
    assert 0.0 < cell["ratio_rounded_to_sdp"] < 1.0
    again = end_to_end_ratio(TRIANGLE, ExperimentConfig(trials=300, seed=1, ell=5))
    assert format_report_csv(report) == format_report_csv(again)


def test_end_to_end_flags_unconverged_solver():
    crippled = SolverConfig(max_iterations=1, engine_cycles=5)
    report = end_to_end_ratio(TRIANGLE, ExperimentConfig(trials=20, seed=3, ell=1), solver_cfg=crippled)
    cell = _cells(report)[0]
    assert cell["solver_converged"] is False


def test_reproduce_constants_report():
    report = reproduce_constants()
    assert report_gate_ok(report)
    cells = _cells(report)
    by_name = {c["name"]: c for c in cells}
    assert by_name["at_least_one_total"]["abs_delta"] <= 1e-4
    assert by_name["three_or_more_total"]["abs_delta"] <= 1e-4
    bound = by_name["exact_one_lower_bound"]
    assert bound["kind"] == "bound" and bound["computed"] >= 0.96
    kinds = {c["kind"] for c in cells}
    assert kinds == {"quoted", "bound", "info"}


def test_report_gate_logic():
    base = Report(name="x", parameters={}, columns=["kind", "ok"], rows=[["quoted", True], ["info", False]])
    assert report_gate_ok(base)
    base.rows[0][1] = False
    assert not report_gate_ok(base)
    sandwich = Report(name="y", parameters={}, columns=["sandwich_ok"], rows=[[True]])
    assert report_gate_ok(sandwich)
    with pytest.raises(ValueError):
        report_gate_ok(Report(name="z", parameters={}, columns=["a"], rows=[[1]]))
