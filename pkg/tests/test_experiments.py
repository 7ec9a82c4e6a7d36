import json
from dataclasses import replace

import numpy as np
import pytest

from irsopt.channel import ConfigError
from irsopt.cli import EXIT_CONFIG, EXIT_GATE, EXIT_IO, EXIT_OK, main
from irsopt.moments import PhaseVector
from irsopt.experiments import (
    PRESETS,
    ExperimentConfig,
    MonteCarloSettings,
    Scenario,
    Sweep,
    analytic_metric,
    load_phases,
    parse_method,
    preset,
    run_optimize,
    run_overhead,
    run_sweep,
    run_validate,
    write_optimize,
    write_sweep,
    write_validate,
)
from irsopt.optimizers import OptimizerSettings, brute_force, build_op_objective

QUICK = OptimizerSettings(particles=30, iterations=15)


def tiny_config(**changes) -> ExperimentConfig:
    cfg = ExperimentConfig(
        name="tiny",
        scenario=Scenario(M=2, N=4, bits=2, snr_db=70.0),
        sweep=Sweep("snr_db", [68.0, 70.0]),
        metric="op",
        methods=["mpso-b1", "pso", "zero-phase", "random", "instantaneous-greedy"],
        optimizer=QUICK,
        mc=MonteCarloSettings(samples=3000, seed=2, baseline_samples=500),
    )
    return replace(cfg, **changes)


@pytest.mark.parametrize("name", PRESETS)
def test_preset_round_trip(name):
    cfg = preset(name)
    again = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert again == cfg
    assert again.to_yaml() == cfg.to_yaml()
    assert again.fingerprint() == cfg.fingerprint()


def test_fig3b_uses_two_antennas():
    assert preset("fig3b").scenario.M == 2


def test_config_errors():
    with pytest.raises(ConfigError):
        preset("fig9")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("name: x\nbogus: 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("metric: snr\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("sweep: {axis: K, values: [1]}\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("scenario: {rice: {sd: 1, sr: 1}}\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("methods: [mpso-bx]\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("methods: [fixed-phase]\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_yaml("[1, 2\n")


def test_method_names():
    assert parse_method("mpso-b5") == ("mpso", 5)
    assert parse_method("instantaneous-greedy") == ("greedy", None)
    assert parse_method("instantaneous-greedy-b3") == ("greedy", 3)
    with pytest.raises(ConfigError):
        parse_method("mpso-b0")


def test_overhead_table():
    rows = run_overhead([10, 20, 30, 40, 50], 5)
    assert [r["reduction_pct"] for r in rows] == [98.44, 99.22, 99.48, 99.61, 99.69]
    assert run_overhead([1], 32)[0]["reduction_pct"] == 0.0
    for N in (1, 40, 1000):
        rows_n = run_overhead([10, 20, 30, 40, 50], 5, N=N)
        assert [r["reduction_pct"] for r in rows_n] == [r["reduction_pct"] for r in rows]
        assert rows_n[0]["bits_instantaneous"] == 320 * N and rows_n[0]["bits_statistical"] == 5 * N
    with pytest.raises(ConfigError):
        run_overhead([0], 5)


def test_validate_is_byte_identical(tmp_path):
    cfg = tiny_config(sweep=Sweep("N", [3, 5]), mc=MonteCarloSettings(samples=2000, seed=4))
    a = write_validate(tmp_path / "a", cfg, run_validate(cfg))
    b = write_validate(tmp_path / "b", cfg, run_validate(cfg))
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("#") and "fingerprint=" in lines[0] and "seed=4" in lines[0]
    assert lines[1] == "N,snr_db,empirical_cdf,gamma_cdf"


def test_validate_single_sample_warns():
    cfg = tiny_config(sweep=Sweep("N", [4]), mc=MonteCarloSettings(samples=1, seed=0))
    (res,) = run_validate(cfg)
    assert 0 <= res.ks <= 1
    assert res.warning == "low-sample"


def test_sweep_rows_and_header(tmp_path):
    cfg = tiny_config()
    rows = run_sweep(cfg)
    assert [(r["axis_value"], r["method"]) for r in rows] == [
        (v, m) for v in cfg.sweep.values for m in cfg.methods
    ]
    greedy = [r for r in rows if r["method"] == "instantaneous-greedy"]
    assert all(np.isnan(r["analytic_metric"]) for r in greedy)
    assert all(r["status"] == "ok" for r in rows)
    path = write_sweep(tmp_path, cfg, rows)
    head = path.read_text().splitlines()[:2]
    assert "seed=2" in head[0] and "instantaneous-CSI-greedy-baseline" in head[0]
    assert head[1] == "axis_value,method,analytic_metric,mc_metric,mc_stderr,status"


def test_sweep_parallel_matches_serial():
    cfg = tiny_config(methods=["zero-phase", "pso"])
    assert run_sweep(cfg, jobs=2) == run_sweep(cfg, jobs=1)


def test_sweep_missing_phase_file_aborts():
    cfg = tiny_config(sweep=Sweep("N", [4, 5]), methods=["zero-phase", "fixed-phase"], phases_file="missing.json")
    with pytest.raises(FileNotFoundError):
        run_sweep(cfg)


def test_fixed_phase_round_trip(tmp_path):
    cfg = tiny_config(sweep=Sweep("snr_db", [70.0]), methods=["mpso-b2"])
    report = run_optimize(cfg)
    write_optimize(tmp_path, cfg, report)
    phases_path = tmp_path / "tiny_phases.json"
    phases = load_phases(phases_path)
    np.testing.assert_array_equal(phases.levels, report.phases.levels)
    fixed = replace(cfg, methods=["fixed-phase"], phases_file=str(phases_path))
    (row,) = run_sweep(fixed)
    assert row["analytic_metric"] == pytest.approx(report.value, rel=1e-12, abs=1e-300)
    assert (tmp_path / "tiny_trace.csv").read_text().splitlines()[1] == "iteration,best_value"


def test_fixed_phase_wrong_length(tmp_path):
    cfg = tiny_config(sweep=Sweep("N", [4, 5]), methods=["mpso-b1"])
    report = run_optimize(cfg)
    write_optimize(tmp_path, cfg, report)
    fixed = replace(cfg, methods=["fixed-phase"], phases_file=str(tmp_path / "tiny_phases.json"))
    rows = run_sweep(fixed)
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("error") and np.isnan(rows[1]["mc_metric"])


def test_optimize_rayleigh_is_phase_independent():
    cfg = tiny_config()
    cfg.scenario.rice = {"sd": 0.0, "sr": 0.0, "rd": 0.0}
    report = run_optimize(cfg)
    assert report.phase_independent
    assert report.summary()["trace_flat"]


def test_optimize_matches_brute_force():
    cfg = tiny_config(methods=["mpso-b2"], optimizer=OptimizerSettings(seed=1))
    cfg.scenario.M = 4
    report = run_optimize(cfg)
    system = cfg.scenario.system()
    _, best = brute_force(build_op_objective(system, cfg.scenario.gamma_th), 4, 2)
    assert report.value == pytest.approx(best, rel=0.005)
    assert not report.phase_independent


def test_optimize_needs_optimizer_method():
    with pytest.raises(ConfigError):
        run_optimize(tiny_config(methods=["zero-phase"]))


def test_rate_metric_cell():
    cfg = tiny_config(metric="rate", methods=["pso", "zero-phase"], sweep=Sweep("M", [1, 2]))
    rows = run_sweep(cfg)
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        assert abs(r["analytic_metric"] - r["mc_metric"]) < 0.03


def test_analytic_metric_is_linear_scale():
    cfg = tiny_config()
    scen = cfg.cell(70.0)
    p = PhaseVector.zeros(4)
    assert analytic_metric("op", scen.system(), p, 1.0) == analytic_metric("op", scen.system(), p, scen.gamma_th)


# --- command line -------------------------------------------------------------


def write_cfg(tmp_path, cfg):
    path = tmp_path / "cfg.yaml"
    path.write_text(cfg.to_yaml())
    return str(path)


def test_cli_overhead(tmp_path, capsys):
    assert main(["overhead", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "10,98.44" in out and "50,99.69" in out
    assert (tmp_path / "overhead.csv").exists()


def test_cli_sweep_and_validate(tmp_path):
    cfg_path = write_cfg(tmp_path, tiny_config(methods=["zero-phase"]))
    assert main(["sweep", "--config", cfg_path, "--out", str(tmp_path), "--mc-samples", "2000"]) == EXIT_OK
    assert (tmp_path / "tiny_sweep.csv").exists()
    assert main(["validate", "--config", cfg_path, "--out", str(tmp_path), "--seed", "9"]) == EXIT_OK
    assert "seed=9" in (tmp_path / "tiny_cdf.csv").read_text().splitlines()[0]
    ks = json.loads((tmp_path / "tiny_ks.json").read_text())
    assert ks[0]["N"] == 4


def test_cli_optimize(tmp_path):
    cfg_path = write_cfg(tmp_path, tiny_config(methods=["pso"]))
    assert main(["optimize", "--config", cfg_path, "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "tiny_report.json").read_text())["method"] == "pso"


def test_cli_config_errors(tmp_path):
    assert main(["sweep", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["sweep", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("metric: snr\n")
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    cfg_path = write_cfg(tmp_path, tiny_config())
    assert main(["sweep", "--config", cfg_path, "--mc-samples", "0"]) == EXIT_CONFIG


def test_cli_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["overhead", "--out", str(blocker / "sub")]) == EXIT_IO


def test_cli_gate_failure(tmp_path):
    # two samples cannot pin the rate to 0.03 bits
    cfg = tiny_config(metric="rate", methods=["zero-phase"], sweep=Sweep("M", [1]))
    cfg_path = write_cfg(tmp_path, cfg)
    assert main(["sweep", "--config", cfg_path, "--out", str(tmp_path), "--mc-samples", "2"]) == EXIT_GATE


def test_cli_preset_dump(capsys):
    assert main(["preset", "fig2a"]) == EXIT_OK
    assert ExperimentConfig.from_yaml(capsys.readouterr().out) == preset("fig2a")
