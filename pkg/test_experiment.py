import json

import numpy as np
import pandas as pd
import pytest

import run_experiments
from kbgk.config import parse_config
from kbgk.errors import DivergenceError, SolverAbort
from kbgk.experiment import (
    DIAGNOSTIC_COLUMNS,
    compare_profiles,
    error_norms,
    euler_reference,
    initial_jumps,
    run_batch,
    run_experiment,
)
from kbgk.solver import SemiLagrangianSolver
from kbgk.utils import THREADS_ENV, format_summary, worker_count

TINY = {"n_x": 20, "n_v": 10, "t_final": 0.01, "lambda_left": 0.001, "lambda_right": 0.008}


@pytest.fixture
def tiny_config():
    return parse_config({**TINY, "emit_reference": True})


def test_run_experiment_writes_profiles_and_diagnostics(tiny_config, tmp_path):
    result = run_experiment(tiny_config, tmp_path)
    name = result.name
    assert name == "custom_mls_continuous_10"

    for suffix in (".csv", ".diag.csv", ".euler.csv", ".norms.csv"):
        assert (tmp_path / f"{name}{suffix}").exists()
    assert not (tmp_path / f"{name}.FAILED").exists()

    profiles = pd.read_csv(tmp_path / f"{name}.csv")
    assert list(profiles.columns) == ["x", "rho", "ux", "T", "p"]
    assert len(profiles) == 21
    np.testing.assert_allclose(profiles["p"], profiles["rho"] * tiny_config.gas_constant * profiles["T"], rtol=1e-10)

    diagnostics = pd.read_csv(tmp_path / f"{name}.diag.csv")
    assert list(diagnostics.columns) == DIAGNOSTIC_COLUMNS
    assert len(diagnostics) == result.stats["steps"] == 2
    assert diagnostics["t"].iloc[-1] == pytest.approx(0.01)

    assert result.stats["mass_drift"] < 1e-2
    assert set(result.stats["l1_rel"]) == {"rho", "ux", "T", "p"}
    assert result.stats["monitor"]["total_checked"] == 2


def test_run_without_reference_skips_norms(tmp_path):
    result = run_experiment(parse_config(TINY), tmp_path)
    assert result.reference is None and result.norms is None
    assert not (tmp_path / f"{result.name}.euler.csv").exists()
    assert "l1_rel" not in result.stats


def test_euler_reference_matches_initial_states_far_from_diaphragm(tiny_config):
    frame = euler_reference(tiny_config, np.array([0.0, 1.0]))
    left = tiny_config.solver_config().left
    assert frame["rho"].iloc[0] == pytest.approx(left.rho)
    assert frame["p"].iloc[0] == pytest.approx(left.p, rel=1e-12)
    assert frame["T"].iloc[0] == pytest.approx(left.T, rel=1e-12)
    assert frame["rho"].iloc[1] == pytest.approx(tiny_config.rho_right)


def _profile(x, rho):
    return pd.DataFrame({"x": x, "rho": rho, "ux": np.zeros_like(x), "T": np.ones_like(x), "p": rho})


def test_error_norms_of_identical_profiles_are_zero():
    x = np.linspace(0.0, 1.0, 11)
    profile = _profile(x, np.where(x <= 0.5, 1.0, 0.125))
    norms = error_norms(profile, profile)
    assert (norms[["L1", "Linf"]].to_numpy() == 0.0).all()


def test_error_norms_of_constant_offset():
    x = np.linspace(0.0, 1.0, 11)
    reference = _profile(x, np.where(x <= 0.5, 1.0, 0.125))
    shifted = reference.assign(rho=reference["rho"] + 0.01)
    norms = error_norms(shifted, reference)
    assert norms.loc["rho", "Linf"] == pytest.approx(0.01)
    assert norms.loc["rho", "L1"] == pytest.approx(0.01)
    assert norms.loc["rho", "Linf_rel"] == pytest.approx(0.01 / 0.875)
    # Flat reference fields have no jump to normalize by
    assert np.isnan(norms.loc["ux", "L1_rel"])


def test_relative_norms_use_the_jump_not_the_range():
    x = np.linspace(0.0, 1.0, 11)
    # Overshoot between the end states: range 1.375, jump 0.875
    rho = np.where(x <= 0.5, 1.0, 0.125)
    rho[4] = 1.5
    reference = _profile(x, rho)
    shifted = reference.assign(rho=reference["rho"] + 0.01)
    assert error_norms(shifted, reference).loc["rho", "Linf_rel"] == pytest.approx(0.01 / 0.875)

    norms = error_norms(shifted, reference, jumps={"rho": 0.5, "ux": 0.0, "T": 1.0, "p": 0.5})
    assert norms.loc["rho", "Linf_rel"] == pytest.approx(0.02)
    assert np.isnan(norms.loc["ux", "Linf_rel"])


def test_initial_jumps_of_sod_data(tiny_config):
    jumps = initial_jumps(tiny_config)
    left, right = tiny_config.solver_config().left, tiny_config.solver_config().right
    assert jumps["rho"] == pytest.approx(left.rho - right.rho)
    assert jumps["T"] == pytest.approx(left.T - right.T)
    assert jumps["ux"] == 0.0


def test_error_norms_reject_mismatched_coordinates():
    a = _profile(np.linspace(0.0, 1.0, 11), np.ones(11))
    b = _profile(np.linspace(0.0, 1.0, 12), np.ones(12))
    with pytest.raises(ValueError):
        error_norms(a, b)
    with pytest.raises(ValueError):
        error_norms(a, a.assign(x=a["x"] * 1.01))


def test_compare_profiles_from_files(tmp_path):
    x = np.linspace(0.0, 1.0, 11)
    _profile(x, np.ones(11)).to_csv(tmp_path / "a.csv", index=False)
    _profile(x, np.full(11, 1.5)).to_csv(tmp_path / "b.csv", index=False)
    norms = compare_profiles(tmp_path / "a.csv", tmp_path / "b.csv")
    assert norms.loc["rho", "Linf"] == pytest.approx(0.5)


def test_failed_run_leaves_marker_and_diagnostics(tiny_config, tmp_path, monkeypatch):
    def diverge(self, state):
        raise SolverAbort(DivergenceError("boom"), state.step_index + 1, 0.005)

    monkeypatch.setattr(SemiLagrangianSolver, "step", diverge)
    with pytest.raises(SolverAbort):
        run_experiment(tiny_config, tmp_path)

    name = tiny_config.run_name
    assert "DivergenceError" in (tmp_path / f"{name}.FAILED").read_text()
    assert list(pd.read_csv(tmp_path / f"{name}.diag.csv").columns) == DIAGNOSTIC_COLUMNS


def test_batch_runs_every_variant_and_writes_stats(tmp_path):
    config = parse_config({"preset": 1, **TINY})
    results, failures = run_batch(config, tmp_path)
    assert not failures
    assert [r.config.variant for r in results] == ["cfl1", "cfl2"]
    assert results[1].stats["steps"] == 1

    stats = json.loads((tmp_path / "stats.json").read_text())
    assert [run["name"] for run in stats["runs"]] == [r.name for r in results]
    assert stats["failures"] == {}


def test_batch_collects_failures(tmp_path, monkeypatch):
    def diverge(self, state):
        raise SolverAbort(DivergenceError("boom"), 1, 0.005)

    monkeypatch.setattr(SemiLagrangianSolver, "step", diverge)
    results, failures = run_batch(parse_config({"preset": 1, **TINY}), tmp_path)
    assert results == []
    assert set(failures) == {"test1_spline_continuous_10_cfl1", "test1_spline_continuous_10_cfl2"}
    assert json.loads((tmp_path / "stats.json").read_text())["failures"] == failures


def test_parallel_batch_matches_serial(tmp_path):
    config = parse_config({"preset": 1, **TINY})
    serial, _ = run_batch(config, tmp_path / "serial")
    parallel, _ = run_batch(config, tmp_path / "parallel", parallel=True, workers=2)
    for a, b in zip(serial, parallel):
        pd.testing.assert_frame_equal(a.profiles, b.profiles)


def test_worker_count_respects_env_cap(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert worker_count(8) == 2
    assert worker_count(8, n_tasks=1) == 1
    monkeypatch.setenv(THREADS_ENV, "lots")
    assert worker_count(3) == 3
    monkeypatch.delenv(THREADS_ENV)
    assert worker_count() >= 1


def test_format_summary_lists_failures():
    text = format_summary([], {"test1_x": "step 3 (t=0.1): DivergenceError: boom"})
    assert "test1_x: FAILED" in text


def test_cli_run_and_compare(tmp_path, capsys):
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(TINY))
    out = tmp_path / "out"

    assert run_experiments.main(["run", "--config", str(config_path), "--output", str(out)]) == 0
    profile = out / "custom_mls_continuous_10.csv"
    assert profile.exists()
    assert "RUN SUMMARY" in capsys.readouterr().out

    assert run_experiments.main(["compare", "--a", str(profile), "--b", str(profile)]) == 0
    assert "L1" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    config_path = tmp_path / "bad.json"
    config_path.write_text(json.dumps({"cfl": -1.0}))
    assert run_experiments.main(["run", "--config", str(config_path)]) == 2
    assert run_experiments.main(["run", "--list-presets"]) == 0
    assert run_experiments.main(["compare", "--a", str(tmp_path / "x.csv"), "--b", str(tmp_path / "y.csv")]) == 1
