import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hadamard_ppa import ArgumentError, ConfigurationError, compare_runs, parse_config, run_experiment
from hadamard_ppa.cli import main
from hadamard_ppa.harness import CSV_COLUMNS, RunReport, read_trajectory, replay_files

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
schema_version: 1
name: minimal
space: {kind: euclidean, dim: 1}
objective: {kind: squared_distance, center: [0.0]}
x0: [1.0]
schedule: {kind: constant, value: 1.0}
stop: {max_iter: 100, eps_step: 0.0}
"""

GAUSS = """
schema_version: 1
name: gauss
space: {kind: euclidean, dim: 1}
objective: {kind: gaussian_well, center: [0.0]}
x0: [1.0]
schedule: {kind: constant, value: %s}
stop: {max_iter: %d}
"""


def with_lines(text, *lines):
    return text + "\n".join(lines) + "\n"


# -- parsing -----------------------------------------------------------------

def test_minimal_config_is_valid():
    cfg = parse_config(MINIMAL)
    assert cfg.stop.max_iter == 100
    assert cfg.monitors == ("f_monotone", "fejer", "tilde", "strong_qc", "rate")


def test_step_above_bound_rejected_with_values():
    with pytest.raises(ConfigurationError) as info:
        parse_config(GAUSS % ("0.6", 10))
    msg = str(info.value)
    assert "0.6" in msg and "0.5" in msg


def test_strong_qc_without_alpha_rejected():
    with pytest.raises(ConfigurationError, match="strong quasi-convexity"):
        parse_config(with_lines(GAUSS % ("0.25", 10), "monitors: [strong_qc]"))


def test_all_errors_are_collected():
    text = """
schema_version: 3
space: {kind: euclidean, dim: 1, flat: true}
objective: {kind: gaussian_well, center: [0.0]}
x0: [1.0]
schedule: {kind: geometric, value: 0.1}
monitors: [fejer, nonsense]
extra: 1
"""
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    errs = info.value.errors
    assert len(errs) >= 4
    joined = " ".join(errs)
    for word in ("schema_version", "extra", "flat", "geometric", "nonsense"):
        assert word in joined


@pytest.mark.parametrize("bad", [
    "seed: 1.5",
    "stop: {max_iter: -3}",
    "tolerances: {monitor: -1}",
    "resolvent: {method: newton}",
    "oracle: true\nspace: {kind: euclidean, dim: 3}",
])
def test_invalid_fields(bad):
    text = MINIMAL if "space:" not in bad else MINIMAL.replace("space: {kind: euclidean, dim: 1}\n", "")
    if "dim: 3" in bad:
        text = text.replace("center: [0.0]", "center: [0.0, 0.0, 0.0]").replace("x0: [1.0]", "x0: [1.0, 0, 0]")
    with pytest.raises(ConfigurationError):
        parse_config(with_lines(text, bad))


def test_x0_outside_domain():
    text = MINIMAL.replace("objective: {kind: squared_distance, center: [0.0]}",
                           "objective: {kind: ball_indicator_plus, base: {kind: distance, center: [0.0]}, "
                           "center: [0.0], radius: 0.5}")
    with pytest.raises(ConfigurationError, match="domain"):
        parse_config(text)


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.yaml")):
        assert main(["validate", "--config", str(path)]) == 0


# -- running ------------------------------------------------------------------

def test_minimal_run_rows(tmp_path):
    rep = run_experiment(parse_config(MINIMAL), tmp_path)
    rows = read_trajectory(tmp_path / "minimal.csv")
    assert list(rows[0]) == list(CSV_COLUMNS)
    for r in rows[:15]:
        n = r["n"]
        assert r["f_x"] == pytest.approx(9.0**-n, rel=1e-12)
        assert r["dist_to_ref"] == pytest.approx(3.0**-n, rel=1e-12)
    assert rows[0]["lambda"] is None and rows[0]["fejer_margin"] is None
    assert rep.exit_status == 0
    summary = json.loads((tmp_path / "minimal.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["iterations"] == 100
    assert set(summary["monitors"]) == set(rep.monitors)


def test_csv_uses_round_trip_precision(tmp_path):
    rep = run_experiment(parse_config(MINIMAL), tmp_path)
    with open(tmp_path / "minimal.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    for rec, row in zip(rep.trajectory.records, rows[1:]):
        assert row[2] == "%.17g" % rec.f_x
        assert float(row[2]) == rec.f_x
        assert float(row[3]) == rec.step_dist


def test_seed_does_not_change_csv(tmp_path):
    run_experiment(parse_config(MINIMAL), tmp_path / "a", seed=0)
    run_experiment(parse_config(MINIMAL), tmp_path / "b", seed=99)
    assert (tmp_path / "a/minimal.csv").read_bytes() == (tmp_path / "b/minimal.csv").read_bytes()


def test_gaussian_run_with_oracle(tmp_path):
    rep = run_experiment(parse_config(GAUSS % ("0.25", 500)), tmp_path, oracle=True)
    assert rep.monitors["fejer"]["worst"] >= -1e-8
    assert rep.final_slope_residual <= 1e-4
    assert not rep.oracle["violated"]
    assert rep.exit_status == 0


def test_compare_schedules(tmp_path):
    fast = run_experiment(parse_config(MINIMAL.replace("name: minimal", "name: one")), tmp_path)
    slow = run_experiment(parse_config(MINIMAL.replace("name: minimal", "name: quarter").replace("value: 1.0", "value: 0.25")),
                          tmp_path)
    rows = compare_runs([fast, slow])
    assert rows[0]["iterations_to_eps"] < rows[1]["iterations_to_eps"]
    # contraction factors 1/3 and 2/3 per step
    assert rows[0]["iterations_to_eps"] == 13
    assert rows[1]["iterations_to_eps"] == 35


def test_compare_identical_and_mismatched(tmp_path):
    a = run_experiment(parse_config(MINIMAL), tmp_path / "a")
    b = run_experiment(parse_config(MINIMAL), tmp_path / "b")
    ra, rb = compare_runs([a, b])
    ra.pop("name"), rb.pop("name")
    assert ra == rb
    g = run_experiment(parse_config(GAUSS % ("0.25", 20)), tmp_path)
    with pytest.raises(ArgumentError):
        compare_runs([a, g])


def test_replay_matches_run(tmp_path):
    rep = run_experiment(parse_config(MINIMAL), tmp_path)
    table, bad = replay_files(tmp_path / "minimal.csv", tmp_path / "minimal.json")
    assert not bad
    for name, m in rep.monitors.items():
        assert table[name]["worst"] == m["worst"]
        assert table[name]["index"] == m["index"]
    loaded = RunReport.from_summary(tmp_path / "minimal.json")
    assert loaded.dist_to_ref == rep.dist_to_ref


# -- CLI ------------------------------------------------------------------------

def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_run_exit_zero(tmp_path, capsys):
    assert main(["run", "--config", write(tmp_path, MINIMAL), "--out", str(tmp_path / "o")]) == 0
    assert "minimal" in capsys.readouterr().out


def test_cli_validate_reports_errors(tmp_path, capsys):
    assert main(["validate", "--config", write(tmp_path, GAUSS % ("0.6", 10))]) == 2
    assert "1/(2 alpha)" in capsys.readouterr().err


def test_cli_nonzero_on_violation(tmp_path):
    bad = """
schema_version: 1
name: liar
space: {kind: euclidean, dim: 1}
objective: {kind: tabulated, knots: [-2, 0, 2], values: [2, 0, 2], weak_convexity_alpha: 0.0, known_minimizer: [1.5]}
x0: [1.0]
schedule: {kind: constant, value: 0.5}
stop: {max_iter: 20}
"""
    assert main(["run", "--config", write(tmp_path, bad), "--out", str(tmp_path)]) == 1
    s = json.loads((tmp_path / "liar.json").read_text())
    assert "fejer" in s["violations"] and s["exit_status"] == 1
    assert main(["run", "--config", write(tmp_path, bad), "--out", str(tmp_path / "s"), "--strict"]) == 1


def test_cli_replay_detects_corruption(tmp_path):
    main(["run", "--config", write(tmp_path, MINIMAL), "--out", str(tmp_path)])
    csv_path, js = tmp_path / "minimal.csv", tmp_path / "minimal.json"
    assert main(["replay", "--trajectory", str(csv_path), "--summary", str(js)]) == 0
    lines = csv_path.read_text().splitlines()
    cells = lines[5].split(",")
    cells[4] = "0.75"  # dist_to_ref at n=4 jumps back up
    lines[5] = ",".join(cells)
    csv_path.write_text("\n".join(lines) + "\n")
    assert main(["replay", "--trajectory", str(csv_path), "--summary", str(js)]) == 1


def test_cli_compare_and_checks(tmp_path, capsys):
    a = write(tmp_path, MINIMAL, "a.yaml")
    b = write(tmp_path, MINIMAL.replace("name: minimal", "name: b").replace("value: 1.0", "value: 0.25"), "b.yaml")
    assert main(["compare", "--config", a, "--config", b, "--out", str(tmp_path)]) == 0
    assert "iterations_to_eps" in capsys.readouterr().out
    assert main(["compare", str(tmp_path / "minimal.json"), str(tmp_path / "b.json")]) == 0
    assert main(["conformance", "--space", '{"kind": "spider", "legs": 4}', "--samples", "200", "--seeds", "2"]) == 0
    assert main(["oracle-check", "--config", str(CONFIGS / "spider_quadratic.yaml"), "--samples", "5"]) == 0


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "hadamard_ppa", "validate", "--config", str(CONFIGS / "line_gaussian.yaml")],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr


def test_oracle_refused_for_planar_hard_wall(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "plane_ball_indicator.yaml"), "--out", str(tmp_path), "--oracle"]) == 2
    with pytest.raises(ConfigurationError, match="oracle"):
        parse_config((CONFIGS / "plane_ball_indicator.yaml").read_text() + "oracle: true\n")
