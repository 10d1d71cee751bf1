"""Full-size shock-tube reproductions. Each takes minutes; run with --runslow."""

import numpy as np
import pytest

from kbgk.config import expand_runs, parse_config, with_overrides
from kbgk.experiment import run_experiment
from kbgk.riemann import euler_states_from_macro, wave_speeds
from kbgk.solver import SemiLagrangianSolver

pytestmark = pytest.mark.slow


def _runs(preset, **overrides):
    return {run.variant: run for run in expand_runs(parse_config({"preset": preset, **overrides}))}


def _linf(a, b, field):
    return float(np.max(np.abs(a.profiles[field].to_numpy() - b.profiles[field].to_numpy())))


def _jump(config, field):
    solver_config = config.solver_config()
    left, right = solver_config.left, solver_config.right
    return abs(getattr(left, field) - getattr(right, field))


def test_uniform_equilibrium_stays_put():
    config = parse_config({"rho_left": 1e-4, "rho_right": 1e-4, "e_left": 2.5, "e_right": 2.5,
                           "wall_left_e": 2.5, "wall_right_e": 2.5, "lambda_left": 0.001,
                           "lambda_right": 0.001, "t_final": 1.0})
    solver = SemiLagrangianSolver(config.solver_config())
    initial = solver.initial_state()
    final = solver.run(initial, max_steps=100)

    assert final.step_index == 100
    np.testing.assert_allclose(final.macro.rho, initial.macro.rho, rtol=1e-6)
    np.testing.assert_allclose(final.macro.T, initial.macro.T, rtol=1e-6)
    assert np.abs(final.macro.U).max() <= 1e-6 * np.sqrt(config.gas_constant * initial.macro.T[0])


def test_discrete_relaxation_conserves_over_full_run():
    run = with_overrides(_runs(1)["cfl1"], maxwellian_mode="discrete")
    result = run_experiment(run)
    assert result.stats["steps"] == len(result.diagnostics)
    assert result.diagnostics["relax_mismatch"].max() <= 1e-10
    assert result.stats["dmax_fallbacks"] == 0


def test_cfl_two_matches_cfl_one():
    runs = _runs(1)
    cfl1, cfl2 = run_experiment(runs["cfl1"]), run_experiment(runs["cfl2"])
    assert cfl2.stats["steps"] * 2 == cfl1.stats["steps"]
    assert _linf(cfl1, cfl2, "T") <= 0.02 * _jump(runs["cfl1"], "T")


def test_jittered_grid_matches_regular_grid():
    runs = _runs(3)
    regular, jittered = run_experiment(runs["regular"]), run_experiment(runs["irregular"])
    # Compare on the jittered nodes by linear interpolation of the regular profile
    x = jittered.profiles["x"].to_numpy()
    rho_regular = np.interp(x, regular.profiles["x"], regular.profiles["rho"])
    difference = np.max(np.abs(jittered.profiles["rho"].to_numpy() - rho_regular))
    assert difference <= 0.02 * _jump(runs["regular"], "rho")


def _shock_position(profile, rho_behind, rho_ahead, contact):
    """Right-most crossing of the mid density between shocked and undisturbed gas."""
    x = profile["x"].to_numpy()
    rho = profile["rho"].to_numpy()
    mid = 0.5 * (rho_behind + rho_ahead)
    above = np.nonzero((rho >= mid) & (x > contact))[0]
    i = above[-1]
    return x[i] + (mid - rho[i]) * (x[i + 1] - x[i]) / (rho[i + 1] - rho[i])


def test_fluid_limit_approaches_euler():
    runs = _runs(6)
    mls, spline = run_experiment(runs["mls"]), run_experiment(runs["spline"])
    config = runs["mls"]

    assert np.isfinite(mls.norms.to_numpy()).all()
    assert mls.stats["l1_rel"]["rho"] <= 0.05
    for field in ("rho", "ux"):
        assert mls.norms.loc[field, "L1"] <= spline.norms.loc[field, "L1"]

    solver_config = config.solver_config()
    left, right = euler_states_from_macro(solver_config.left, solver_config.right, config.gamma)
    waves = wave_speeds(left, right, config.gamma)
    t = config.t_final
    exact_shock = config.diaphragm + waves["right_head"] * t
    contact = config.diaphragm + waves["contact"] * t
    behind = mls.reference.loc[(mls.reference["x"] > contact) & (mls.reference["x"] < exact_shock), "rho"]
    shock = _shock_position(mls.profiles, float(behind.mean()), right.rho, contact)
    dx = (config.b - config.a) / config.n_x
    assert abs(shock - exact_shock) <= 2.0 * dx


def test_discrete_maxwellian_on_coarse_velocity_grid():
    runs = _runs(7)
    reference = run_experiment(runs["continuous_nv20"])
    continuous = run_experiment(runs["continuous_nv13"])
    discrete = run_experiment(runs["discrete_nv13"])

    bound = 0.02 * _jump(runs["continuous_nv20"], "rho")
    assert _linf(discrete, reference, "rho") <= bound
    assert _linf(continuous, reference, "rho") > bound
    assert discrete.wall_clock < reference.wall_clock


def test_variable_tau_matters_only_when_rarefied():
    runs = _runs(2)
    differences = {}
    for tag in ("lam1e-07", "lam0.02"):
        constant = run_experiment(runs[f"{tag}_constant"])
        variable = run_experiment(runs[f"{tag}_variable"])
        differences[tag] = _linf(constant, variable, "T")

    assert differences["lam1e-07"] <= 0.01 * _jump(runs["lam1e-07_constant"], "T")
    assert differences["lam0.02"] > differences["lam1e-07"]

