"""
Semi-Lagrangian BGK time stepper.

One step traces characteristics back from every grid point, reconstructs the
distribution at the foot points, relaxes towards the Maxwellian sharing the
reconstructed moments, and closes both walls with diffuse reflection.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse
from tqdm import tqdm

from .boundary import DiffuseWalls
from .core import (
    PhysicalGrid,
    SolverConfig,
    VelocityGrid,
    build_regular_grid,
    build_velocity_grid,
    dual_cell_widths,
    jitter_grid,
    knudsen_number,
    left_fractions,
    mean_free_path,
    relaxation_time,
)
from .diagnostics import FieldMonitor
from .dmaxwell import eval_discrete_maxwellian_batch, solve_discrete_maxwellian_batch
from .errors import DivergenceError, KBGKError, SolverAbort
from .interp import BaseReconstructor, MlsConfig, get_registry
from .moments import (
    MacroField,
    MacroState,
    init_maxwellian_field,
    macro_field_from_moments,
    maxwellian_cubes,
    moment_scale,
    moment_vector,
)

logger = logging.getLogger(__name__)


@dataclass
class StepState:
    f: np.ndarray
    t: float
    tau: np.ndarray
    macro: MacroField
    step_index: int = 0

    def __post_init__(self):
        if np.any(self.tau <= 0):
            raise ValueError("relaxation times must be positive everywhere")


@dataclass
class TargetMaxwellian:
    """Equilibrium cubes of every point plus solver bookkeeping."""

    cubes: np.ndarray
    macro: MacroField
    iterations: Optional[np.ndarray] = None
    fallbacks: Optional[np.ndarray] = None


def timestep_from_cfl(cfl: float, dx_avg: float, v_max: float) -> float:
    """dt = cfl * dx_avg / v_max."""
    if not (cfl > 0 and dx_avg > 0 and v_max > 0):
        raise ValueError(f"CFL time step needs positive inputs, got cfl={cfl}, dx={dx_avg}, v_max={v_max}")
    return cfl * dx_avg / v_max


def foot_point(x, v, dt: float):
    """Departure point x - v dt of the characteristic arriving at x."""
    return np.asarray(x, dtype=float) - np.asarray(v, dtype=float) * dt


def build_advection_operators(reconstructor: BaseReconstructor, vgrid: VelocityGrid,
                              dt: float) -> List[scipy.sparse.csr_matrix]:
    """One sparse reconstruction operator per x-velocity node."""
    points = reconstructor.grid.points
    operators = []
    for v in vgrid.nodes:
        operators.append(reconstructor.advection_operator(foot_point(points, v, dt), upwind_sign=int(np.sign(v))))
    return operators


def advect(f: np.ndarray, dt: float, reconstructor: BaseReconstructor, vgrid: VelocityGrid,
           operators: Optional[List[scipy.sparse.csr_matrix]] = None) -> np.ndarray:
    """
    Reconstruct f at the foot points of every (point, velocity) pair.

    Field layout is (point, v_x, v_y, v_z); all (v_y, v_z) columns of one v_x
    node share a single operator.
    """
    if dt == 0:
        return f.copy()
    if operators is None:
        operators = build_advection_operators(reconstructor, vgrid, dt)

    n = f.shape[0]
    f_tilde = np.empty_like(f)
    for j, operator in enumerate(operators):
        slab = f[:, j]
        f_tilde[:, j] = (operator @ slab.reshape(n, -1)).reshape(slab.shape)
    return f_tilde


def build_target_maxwellian(f_tilde: np.ndarray, vgrid: VelocityGrid, R: float, mode: str = "continuous",
                            rtol: float = 1e-10, max_iter: int = 100) -> TargetMaxwellian:
    """
    Maxwellians sharing the conserved moments of ``f_tilde`` (one cube or a field).

    Discrete mode solves for the discrete Maxwellian at every point; points
    where that solve fails use the continuous Maxwellian instead.
    """
    single = f_tilde.ndim == 3
    field = f_tilde[None] if single else f_tilde
    moments = moment_vector(field, vgrid)
    macro = macro_field_from_moments(moments, R)

    iterations = fallbacks = None
    if mode == "continuous":
        cubes = maxwellian_cubes(macro.rho, macro.U, macro.T, vgrid, R)
    elif mode == "discrete":
        solution = solve_discrete_maxwellian_batch(moments, vgrid, R, rtol=rtol, max_iter=max_iter)
        cubes = np.empty((len(moments), vgrid.n_cube))
        ok = solution.converged
        cubes[ok] = eval_discrete_maxwellian_batch(solution.alpha[ok], vgrid)
        fallbacks = np.flatnonzero(~ok)
        if fallbacks.size:
            cubes[fallbacks] = maxwellian_cubes(macro.rho[fallbacks], macro.U[fallbacks],
                                                macro.T[fallbacks], vgrid, R)
            logger.warning(f"Discrete Maxwellian failed at {fallbacks.size} point(s) "
                           f"(first {int(fallbacks[0])}); using continuous Maxwellian there")
        iterations = solution.iterations
    else:
        raise ValueError(f"unknown Maxwellian mode '{mode}'")

    cubes = cubes.reshape(field.shape)
    return TargetMaxwellian(cubes=cubes[0] if single else cubes, macro=macro,
                            iterations=iterations, fallbacks=fallbacks)


def relax(f_tilde: np.ndarray, M_new: np.ndarray, tau, dt: float) -> np.ndarray:
    """Implicit BGK relaxation (tau f~ + dt M) / (tau + dt); ``tau`` is scalar or per point."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("relaxation time must be positive")
    if tau.ndim == 1:
        tau = tau.reshape((-1,) + (1,) * (f_tilde.ndim - 1))
    return (tau * f_tilde + dt * M_new) / (tau + dt)


def relax_mismatch(f_new: np.ndarray, f_tilde: np.ndarray, vgrid: VelocityGrid) -> float:
    """Largest relative change of any conserved moment caused by relaxation."""
    before = moment_vector(f_tilde, vgrid)
    after = moment_vector(f_new, vgrid)
    return float(np.max(np.abs(after - before) / moment_scale(before))) if len(before) else 0.0


class SemiLagrangianSolver:
    """Owns the grids, reconstructor and walls of one run and advances StepStates."""

    def __init__(self, config: SolverConfig):
        self.config = config.validate()
        self.R = config.gas.R
        self.vgrid = build_velocity_grid(config.v_max, config.n_v)

        grid = build_regular_grid(config.a, config.b, config.n_x)
        if config.irregular_grid:
            grid = jitter_grid(grid, config.rng_seed)
        self.grid: PhysicalGrid = grid
        self.widths = dual_cell_widths(grid)

        self.dt = timestep_from_cfl(config.cfl, grid.dx_avg, config.v_max)
        self.n_steps = max(1, math.ceil(config.t_final / self.dt - 1e-9))

        self.mls = MlsConfig(alpha=config.mls_alpha, radius_factor=config.mls_radius_factor,
                             upwind=config.upwind_stencil)
        self.reconstructor = get_registry().get_reconstructor(config.reconstruction, grid, {
            "alpha": config.mls_alpha,
            "radius_factor": config.mls_radius_factor,
            "upwind": config.upwind_stencil,
            "reach": config.v_max * self.dt,
        })
        self.walls = DiffuseWalls(grid, config.walls, self.vgrid, self.R, self.mls)
        self.monitor = FieldMonitor()

        self.history: List[Dict[str, float]] = []
        self.stats = {"steps": 0, "dmax_solves": 0, "dmax_fallbacks": 0, "dmax_max_iterations": 0,
                      "wall_nonpositive_density": 0}
        self._operators: Dict[float, List[scipy.sparse.csr_matrix]] = {}

    def _operators_for(self, dt: float) -> List[scipy.sparse.csr_matrix]:
        if dt not in self._operators:
            self._operators[dt] = build_advection_operators(self.reconstructor, self.vgrid, dt)
            logger.debug(f"Built {len(self._operators[dt])} advection operators for dt={dt:.6g}")
        return self._operators[dt]

    def initial_tau(self) -> np.ndarray:
        """Piecewise-constant relaxation times: left value for x <= diaphragm, right value beyond."""
        cfg = self.config
        lam_left = cfg.lambda_left if cfg.lambda_left is not None else mean_free_path(cfg.left.rho, cfg.gas)
        lam_right = cfg.lambda_right if cfg.lambda_right is not None else mean_free_path(cfg.right.rho, cfg.gas)
        tau_left = relaxation_time(lam_left, cfg.left.T, self.R)
        tau_right = relaxation_time(lam_right, cfg.right.T, self.R)

        logger.info(f"Initial tau: left {tau_left:.4e} s, right {tau_right:.4e} s "
                    f"(Kn left {knudsen_number(lam_left, cfg.b - cfg.a):.2e}, "
                    f"right {knudsen_number(lam_right, cfg.b - cfg.a):.2e})")
        return np.where(self.grid.points <= cfg.diaphragm, tau_left, tau_right)

    def initial_macro(self) -> MacroField:
        """
        Riemann initial data as dual-cell averages.

        Cells wholly on one side of the diaphragm take that side's state; the
        cell containing the diaphragm takes the conserved average of both, so
        every grid holds the same mass on each side.
        """
        cfg = self.config
        shares = left_fractions(self.grid, cfg.diaphragm)
        states = []
        for share in shares:
            if share == 1.0:
                states.append(cfg.left)
            elif share == 0.0:
                states.append(cfg.right)
            else:
                states.append(MacroState.blend(cfg.left, cfg.right, float(share), self.R))
        return MacroField.from_states(states)

    def initial_state(self) -> StepState:
        """Maxwellians of the cell-averaged Riemann data."""
        f = init_maxwellian_field(self.initial_macro(), self.vgrid, self.R)
        macro = macro_field_from_moments(moment_vector(f, self.vgrid), self.R)
        return StepState(f=f, t=0.0, tau=self.initial_tau(), macro=macro, step_index=0)

    def total_mass(self, macro: MacroField) -> float:
        return float(np.sum(macro.rho * self.widths))

    def step(self, state: StepState) -> StepState:
        """Advance one time step; the last step is shortened to land on t_final."""
        cfg = self.config
        n = state.step_index + 1
        full = n * self.dt
        if full <= cfg.t_final * (1.0 + 1e-12):
            # Full steps reuse the cached operators for self.dt exactly
            t_new, dt = min(full, cfg.t_final), self.dt
        else:
            t_new = cfg.t_final
            dt = max(t_new - state.t, 0.0)

        try:
            operators = self._operators_for(dt) if dt > 0 else None
            f_tilde = advect(state.f, dt, self.reconstructor, self.vgrid, operators)
            target = build_target_maxwellian(f_tilde, self.vgrid, self.R, cfg.maxwellian_mode,
                                             rtol=cfg.dmax_rtol, max_iter=cfg.dmax_max_iter)
            f_new = relax(f_tilde, target.cubes, state.tau, dt)
            interior = self.grid.interior
            mismatch = relax_mismatch(f_new[interior], f_tilde[interior], self.vgrid)
            f_new = self.walls.apply(f_new)
            macro = macro_field_from_moments(moment_vector(f_new, self.vgrid), self.R)
        except KBGKError as e:
            raise SolverAbort(e, n, t_new, getattr(e, "point_index", None)) from e

        usable, issues = self.monitor.check(f_new, n, t_new)
        if not usable:
            raise SolverAbort(DivergenceError(issues[0]), n, t_new)

        if cfg.tau_mode == "variable":
            try:
                tau = relaxation_time(mean_free_path(macro.rho, cfg.gas), macro.T, self.R)
            except ValueError as e:
                raise SolverAbort(DivergenceError(str(e)), n, t_new) from e
        else:
            tau = state.tau

        self._record(n, t_new, f_new, macro, mismatch, target)
        return StepState(f=f_new, t=t_new, tau=tau, macro=macro, step_index=n)

    def _record(self, n: int, t: float, f: np.ndarray, macro: MacroField, mismatch: float,
                target: TargetMaxwellian) -> None:
        row = {
            "t": t,
            "mass": self.total_mass(macro),
            "min_f": float(f.min()),
            "max_f": float(f.max()),
            "negative_values": int(np.count_nonzero(f < 0)),
            "relax_mismatch": mismatch,
            "dmax_mean_iterations": 0.0,
            "dmax_max_iterations": 0,
            "dmax_fallbacks": 0,
        }
        if target.iterations is not None:
            row["dmax_mean_iterations"] = float(target.iterations.mean())
            row["dmax_max_iterations"] = int(target.iterations.max())
            row["dmax_fallbacks"] = int(target.fallbacks.size)
            self.stats["dmax_solves"] += len(target.iterations)
            self.stats["dmax_fallbacks"] += row["dmax_fallbacks"]
            self.stats["dmax_max_iterations"] = max(self.stats["dmax_max_iterations"], row["dmax_max_iterations"])
        nonpositive = sum(self.walls.nonpositive_density.values())
        row["wall_nonpositive_density"] = nonpositive - self.stats["wall_nonpositive_density"]
        self.stats["wall_nonpositive_density"] = nonpositive
        self.stats["steps"] = n
        self.history.append(row)

    def run(self, state: Optional[StepState] = None, max_steps: Optional[int] = None,
            progress: Optional[bool] = None) -> StepState:
        """
        Step from ``state`` (default: the initial state) to t_final, or for ``max_steps`` steps.

        With ``max_steps`` the loop ignores n_steps; steps past t_final have
        zero length and leave the field unchanged.
        """
        state = state or self.initial_state()
        progress = self.config.progress if progress is None else progress
        total = max_steps if max_steps is not None else self.n_steps - state.step_index

        with tqdm(total=total, desc=f"BGK {self.config.reconstruction}/{self.config.maxwellian_mode}",
                  unit="step", disable=not progress) as bar:
            for _ in range(total):
                if max_steps is None and state.step_index >= self.n_steps:
                    break
                state = self.step(state)
                bar.update(1)

        logger.info(f"Finished {state.step_index} steps at t={state.t:.6g}\n{self.monitor.get_report()}")
        return state
