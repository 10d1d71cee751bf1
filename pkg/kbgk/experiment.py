"""
Experiment harness: runs presets or custom configs, compares against the exact
Euler solution, and writes profiles, diagnostics and run statistics.
"""

import concurrent.futures as cf
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import RunConfig, expand_runs
from .constants import PROFILE_COLUMNS
from .core import PhysicalGrid, dual_cell_widths
from .errors import SolverAbort
from .moments import MacroField
from .riemann import euler_states_from_macro, sample_solution
from .solver import SemiLagrangianSolver
from .utils import worker_count

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = [
    "t", "mass", "min_f", "max_f", "negative_values", "relax_mismatch",
    "dmax_mean_iterations", "dmax_max_iterations", "dmax_fallbacks", "wall_nonpositive_density",
]
NORM_FIELDS = ("rho", "ux", "T", "p")
CSV_FLOAT_FORMAT = "%.12e"

Profile = Union[pd.DataFrame, "ExperimentResult"]


@dataclass
class ExperimentResult:
    name: str
    config: RunConfig
    profiles: pd.DataFrame
    diagnostics: pd.DataFrame
    wall_clock: float
    stats: Dict[str, Any]
    reference: Optional[pd.DataFrame] = None
    norms: Optional[pd.DataFrame] = None


def profile_frame(points: np.ndarray, macro: MacroField, R: float) -> pd.DataFrame:
    frame = pd.DataFrame({
        "x": points,
        "rho": macro.rho,
        "ux": macro.U[:, 0],
        "T": macro.T,
        "p": macro.rho * R * macro.T,
    })
    return frame[PROFILE_COLUMNS]


def euler_reference(config: RunConfig, xs: np.ndarray) -> pd.DataFrame:
    """Exact Euler solution for the run's initial data, sampled at ``xs`` and t_final."""
    solver_config = config.solver_config()
    left, right = euler_states_from_macro(solver_config.left, solver_config.right, config.gamma)
    profile = sample_solution(left, right, config.gamma, config.diaphragm, config.t_final, xs)
    return profile.to_frame(config.gas_constant)[PROFILE_COLUMNS]


def _as_frame(profile: Profile) -> pd.DataFrame:
    return profile.profiles if isinstance(profile, ExperimentResult) else profile


def initial_jumps(config: RunConfig) -> Dict[str, float]:
    """|left - right| of every compared field in the run's Riemann initial data."""
    solver_config = config.solver_config()
    left, right = solver_config.left, solver_config.right
    return {
        "rho": abs(left.rho - right.rho),
        "ux": abs(float(left.U[0]) - float(right.U[0])),
        "T": abs(left.T - right.T),
        "p": abs(left.p - right.p),
    }


def error_norms(profile: Profile, reference: Profile, fields: Sequence[str] = NORM_FIELDS,
                jumps: Optional[Mapping[str, float]] = None) -> pd.DataFrame:
    """
    L1 and L-infinity differences per field, absolute and relative.

    L1 integrates |difference| with dual-cell widths; relative norms divide by
    the field's jump magnitude, taken from ``jumps`` or else as |first - last|
    of the reference field. They are NaN where the jump is zero.
    Both profiles must share their x coordinates.
    """
    a, b = _as_frame(profile), _as_frame(reference)
    x_a, x_b = a["x"].to_numpy(), b["x"].to_numpy()
    span = float(np.ptp(x_b)) if len(x_b) else 0.0
    if len(x_a) != len(x_b) or not np.allclose(x_a, x_b, rtol=0.0, atol=1e-12 * max(span, 1.0)):
        raise ValueError(f"profiles are sampled at different coordinates ({len(x_a)} vs {len(x_b)} points)")

    widths = dual_cell_widths(PhysicalGrid(a=float(x_b[0]), b=float(x_b[-1]), points=x_b, regular=False))
    rows = {}
    for name in fields:
        diff = np.abs(a[name].to_numpy() - b[name].to_numpy())
        column = b[name].to_numpy()
        scale = float(jumps[name]) if jumps is not None else abs(float(column[0] - column[-1]))
        l1, linf = float(np.sum(diff * widths)), float(diff.max())
        rows[name] = {
            "L1": l1,
            "Linf": linf,
            "L1_rel": l1 / scale if scale > 0 else np.nan,
            "Linf_rel": linf / scale if scale > 0 else np.nan,
        }
    frame = pd.DataFrame.from_dict(rows, orient="index")
    frame.index.name = "field"
    return frame


def compare_profiles(path_a: Union[str, Path], path_b: Union[str, Path]) -> pd.DataFrame:
    """Error norms between two profile CSV files, the second taken as reference."""
    return error_norms(pd.read_csv(path_a), pd.read_csv(path_b))


def run_experiment(config: RunConfig, output_dir: Optional[Union[str, Path]] = None) -> ExperimentResult:
    """
    Run one configuration to t_final.

    With ``output_dir`` the profiles and diagnostics are written there; a failed
    run still flushes its diagnostics and leaves a ``<name>.FAILED`` marker.
    """
    name = config.run_name
    solver = SemiLagrangianSolver(config.solver_config())
    R = config.gas_constant
    logger.info(f"Running {name}: N_x={config.n_x}, N_v={config.n_v}, dt={solver.dt:.4e}, "
                f"{solver.n_steps} steps, {config.reconstruction}/{config.maxwellian_mode}")

    start = time.perf_counter()
    initial = solver.initial_state()
    mass_initial = solver.total_mass(initial.macro)
    try:
        state = solver.run(initial)
    except SolverAbort as e:
        logger.error(f"{name} aborted: {e}")
        if output_dir is not None:
            write_failure(Path(output_dir), name, pd.DataFrame(solver.history, columns=DIAGNOSTIC_COLUMNS), e)
        raise
    wall_clock = time.perf_counter() - start

    profiles = profile_frame(solver.grid.points, state.macro, R)
    diagnostics = pd.DataFrame(solver.history, columns=DIAGNOSTIC_COLUMNS)
    reference = norms = None
    if config.emit_reference:
        reference = euler_reference(config, solver.grid.points)
        norms = error_norms(profiles, reference, jumps=initial_jumps(config))

    mass_final = solver.total_mass(state.macro)
    stats = {
        "name": name,
        "preset": config.preset,
        "variant": config.variant,
        "dt": solver.dt,
        "t_final": state.t,
        "wall_clock": wall_clock,
        "mass_initial": mass_initial,
        "mass_final": mass_final,
        "mass_drift": abs(mass_final - mass_initial) / mass_initial,
        "min_f": float(diagnostics["min_f"].min()) if len(diagnostics) else float(initial.f.min()),
        "max_relax_mismatch": float(diagnostics["relax_mismatch"].max()) if len(diagnostics) else 0.0,
        **{key: int(value) for key, value in solver.stats.items()},
        "monitor": {key: value for key, value in solver.monitor.validation_stats.items()},
        "reconstructor": {key: int(value) for key, value in solver.reconstructor.stats.items()},
    }
    if norms is not None:
        stats["l1_rel"] = {field: float(norms.loc[field, "L1_rel"]) for field in norms.index}

    result = ExperimentResult(name=name, config=config, profiles=profiles, diagnostics=diagnostics,
                              wall_clock=wall_clock, stats=stats, reference=reference, norms=norms)
    if output_dir is not None:
        write_result(result, Path(output_dir))
    logger.info(f"Finished {name} in {wall_clock:.1f} s (mass drift {stats['mass_drift']:.2e})")
    return result


def write_result(result: ExperimentResult, output_dir: Path) -> None:
    output_dir.mkdir(parents=True, exist_ok=True)
    name = result.name
    result.profiles.to_csv(output_dir / f"{name}.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    result.diagnostics.to_csv(output_dir / f"{name}.diag.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    if result.reference is not None:
        result.reference.to_csv(output_dir / f"{name}.euler.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    if result.norms is not None:
        result.norms.to_csv(output_dir / f"{name}.norms.csv", float_format=CSV_FLOAT_FORMAT)

    marker = output_dir / f"{name}.FAILED"
    if marker.exists():
        marker.unlink()
    logger.info(f"Wrote {output_dir / name}.csv")


def write_failure(output_dir: Path, name: str, diagnostics: pd.DataFrame, error: Exception) -> None:
    """Flush the diagnostics gathered before a failure and mark the run as failed."""
    output_dir.mkdir(parents=True, exist_ok=True)
    diagnostics.to_csv(output_dir / f"{name}.diag.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    (output_dir / f"{name}.FAILED").write_text(f"{type(error).__name__}: {error}\n")


def write_stats(results: List[ExperimentResult], failures: Dict[str, str], output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "stats.json"
    with open(path, "w") as f:
        json.dump({"runs": [r.stats for r in results], "failures": failures}, f, indent=2, default=str)
    return path


def run_batch(config: RunConfig, output_dir: Optional[Union[str, Path]] = None, parallel: bool = False,
              workers: Optional[int] = None) -> Tuple[List[ExperimentResult], Dict[str, str]]:
    """
    Run every variant of ``config`` and write ``stats.json``.

    Solver aborts are collected per run instead of stopping the batch; with
    ``parallel`` the runs go to a process pool capped by KBGK_THREADS.
    """
    runs = expand_runs(config)
    out = Path(output_dir if output_dir is not None else config.output_dir)
    results: Dict[str, ExperimentResult] = {}
    failures: Dict[str, str] = {}

    if parallel and len(runs) > 1:
        procs = worker_count(workers, len(runs))
        logger.info(f"Running {len(runs)} runs on {procs} processes")
        with cf.ProcessPoolExecutor(max_workers=procs) as ex:
            futures = {ex.submit(run_experiment, run, out): run for run in runs}
            for future in cf.as_completed(futures):
                run = futures[future]
                try:
                    results[run.run_name] = future.result()
                except SolverAbort as e:
                    failures[run.run_name] = str(e)
    else:
        for run in runs:
            try:
                results[run.run_name] = run_experiment(run, out)
            except SolverAbort as e:
                failures[run.run_name] = str(e)

    ordered = [results[run.run_name] for run in runs if run.run_name in results]
    stats_file = write_stats(ordered, failures, out)
    logger.info(f"Saved statistics to {stats_file}")
    return ordered, failures
