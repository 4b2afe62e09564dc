import json

import numpy as np
import pytest

from bsmc import instance
from bsmc.cli import EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE, EXIT_OK, main
from bsmc.config import InstanceConfig
from bsmc.diagnostics import multinomial_counts, write_counts

SMALL = """
jitter: {n_jitter: 100, seed: 3}
budget: {reference_m: 23, reference_n_jitter: 50, realizations: 4}
sweep: {m_list: [12, 23], n_jitter_list: [10, 30], repeats: 3, epsilon_grid: [0.0, 0.1], realizations: 4}
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def run(args, out):
    return main([*args, "--out", str(out)])


def test_error_budget_rows(cfg_path, tmp_path):
    assert run(["error-budget", "--config", str(cfg_path), "--format", "json"], tmp_path / "o") == EXIT_OK
    rows = json.loads((tmp_path / "o" / "error_budget.json").read_text())["rows"]
    assert [r["row"] for r in rows] == ["reference", "ideal", "s_bar", "fidelity@0.985", "both@0.985", "distinguishable", "both@0.904"]


def test_error_budget_without_jitter_gives_both_rules(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("jitter: {enabled: false}\nbudget: {reference_m: 23, fidelity_targets: []}\n")
    assert run(["error-budget", "--config", str(p), "--format", "json"], tmp_path / "o") == EXIT_OK
    rows = json.loads((tmp_path / "o" / "error_budget.json").read_text())["rows"]
    assert {r["boundary_rule"] for r in rows} == {"include", "exclude"}
    assert len(rows) == 8


@pytest.mark.parametrize("axis,curves", [("modes", {"include", "exclude", "jitter"}), ("s", {""}), ("fidelity", {""}), ("jitter", {"N=10", "N=30"})])
def test_sweeps(cfg_path, tmp_path, axis, curves):
    assert run(["sweep", axis, "--config", str(cfg_path)], tmp_path) == EXIT_OK
    summary = json.loads((tmp_path / f"sweep_{axis}_summary.json").read_text())
    assert set(summary["curves"]) == curves
    assert (tmp_path / f"sweep_{axis}.csv").read_text().splitlines()[0].split(",")[0] in ("m", "s", "fidelity")


def test_fidelity_sweep_reports_spread(cfg_path, tmp_path):
    run(["sweep", "fidelity", "--config", str(cfg_path)], tmp_path)
    header = (tmp_path / "sweep_fidelity.csv").read_text().splitlines()[0].split(",")
    assert {"fidelity", "E1", "ensemble_std", "fidelity_std", "epsilon"} <= set(header)


def test_compare_synthetic_counts(cfg_path, tmp_path):
    cfg = InstanceConfig.load(cfg_path)
    dist = instance.distribution(cfg)
    counts = tmp_path / "counts.csv"
    write_counts(counts, dist, multinomial_counts(dist, 250_000, 4))
    assert run(["compare", str(counts), "--config", str(cfg_path)], tmp_path / "o") == EXIT_OK
    s = json.loads((tmp_path / "o" / "compare_summary.json").read_text())
    assert s["tvd_ideal"] < 0.02
    assert s["E1_measured"] == pytest.approx(s["E1_ideal"], rel=0.02)


def test_compare_bad_counts_exit_code(cfg_path, tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("pattern,count\n111000000000,4\n000000001111,2\n")
    assert run(["compare", str(counts), "--config", str(cfg_path)], tmp_path) == EXIT_DATA
    assert "line 3" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("m: 1\n")
    assert run(["distribution", "--config", str(p)], tmp_path) == EXIT_CONFIG


def test_degenerate_exit_code(tmp_path):
    # a hard shell wider than the grid rejects everything
    p = tmp_path / "wide.yaml"
    p.write_text("d_hs: 50.0\njitter: {n_jitter: 10}\n")
    assert run(["sample", "--samples", "100", "--config", str(p)], tmp_path) == EXIT_DEGENERATE


def test_sample_and_encode(cfg_path, tmp_path):
    assert run(["sample", "--samples", "2000", "--config", str(cfg_path)], tmp_path) == EXIT_OK
    est = json.loads((tmp_path / "sample_estimate.json").read_text())
    assert est["n_samples"] == 2000 and np.isfinite(est["E1"])
    assert run(["encode", "--format", "json"], tmp_path) == EXIT_OK
    u = json.loads((tmp_path / "unitary.json").read_text())
    assert np.array(u["real"]).shape == (12, 12)


def test_seed_override_changes_output(cfg_path, tmp_path):
    run(["sample", "--samples", "500", "--config", str(cfg_path), "--seed", "1"], tmp_path / "a")
    run(["sample", "--samples", "500", "--config", str(cfg_path), "--seed", "2"], tmp_path / "b")
    assert (tmp_path / "a" / "samples.csv").read_bytes() != (tmp_path / "b" / "samples.csv").read_bytes()
