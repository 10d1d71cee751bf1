"""
Discrete Maxwellian: exponential-family distribution on the velocity grid whose
discrete moments match a target exactly.

The distribution at node v is exp(alpha_0 + alpha_1 v_x + alpha_2 v_y + alpha_3 v_z
+ alpha_4 |v|^2). Parameters are found by Newton's method on the moment residual,
globalized with Armijo backtracking. Newton systems are written in the
moment-conjugate coordinates beta = (alpha_0, alpha_1, alpha_2, alpha_3, 2 alpha_4),
where the Jacobian is the symmetric positive definite matrix
sum(phi_a phi_b M) dv^3 with phi = (1, v_x, v_y, v_z, |v|^2 / 2).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from .constants import (
    ARMIJO_C,
    DMAX_ATOL,
    DMAX_MAX_ITER,
    DMAX_RTOL,
    EXPONENT_LIMIT,
    MIN_STEP_EXPONENT,
)
from .core import VelocityGrid
from .errors import DiscreteMaxwellianError, DivergenceError, LineSearchError
from .moments import MacroState, macro_field_from_moments, moment_scale

logger = logging.getLogger(__name__)

# Upper triangle of the 5x5 Jacobian, row-major
_PAIRS = [(a, b) for a in range(5) for b in range(a, 5)]


@dataclass(frozen=True, eq=False)
class DMaxParams:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(5)
        object.__setattr__(self, "alpha", alpha)
        if not alpha[4] < 0:
            raise ValueError(f"alpha_4 must be negative for a summable distribution, got {alpha[4]}")


@dataclass(frozen=True, eq=False)
class MomentTarget:
    rho: float
    rhoU: np.ndarray
    E: float

    def __post_init__(self):
        object.__setattr__(self, "rhoU", np.asarray(self.rhoU, dtype=float).reshape(3))
        if not self.rho > 0:
            raise ValueError(f"target density must be positive, got {self.rho}")
        if not self.E - 0.5 * float(self.rhoU @ self.rhoU) / self.rho > 0:
            raise ValueError("target internal energy must be positive")

    @classmethod
    def from_vector(cls, moments: np.ndarray) -> "MomentTarget":
        return cls(rho=float(moments[0]), rhoU=moments[1:4], E=float(moments[4]))

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.rho], self.rhoU, [self.E]])


@dataclass
class DMaxSolution:
    """Result of a batched solve: one row per target."""

    alpha: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual_norm: np.ndarray


@dataclass(frozen=True, eq=False)
class _Basis:
    exponent: np.ndarray   # (5, n_cube): 1, v_x, v_y, v_z, |v|^2
    moments: np.ndarray    # (5, n_cube): 1, v_x, v_y, v_z, |v|^2 / 2
    products: np.ndarray   # (15, n_cube): phi_a phi_b for a <= b
    cell_volume: float


@lru_cache(maxsize=8)
def _basis(vgrid: VelocityGrid) -> _Basis:
    phi = vgrid.invariants
    exponent = phi.copy()
    exponent[4] = vgrid.speed_squared
    products = np.stack([phi[a] * phi[b] for a, b in _PAIRS])
    return _Basis(exponent=exponent, moments=phi, products=products, cell_volume=vgrid.cell_volume)


def continuous_parameter_array(rho: np.ndarray, U: np.ndarray, T: np.ndarray, R: float) -> np.ndarray:
    """Parameters reproducing continuous Maxwellians of N states, shape (N, 5)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    U = np.asarray(U, dtype=float).reshape(-1, 3)
    RT = R * np.atleast_1d(np.asarray(T, dtype=float))
    alpha = np.empty((len(rho), 5))
    alpha[:, 0] = np.log(rho / (2.0 * math.pi * RT) ** 1.5) - np.einsum("na,na->n", U, U) / (2.0 * RT)
    alpha[:, 1:4] = U / RT[:, None]
    alpha[:, 4] = -1.0 / (2.0 * RT)
    return alpha


def continuous_parameters(state: MacroState, R: float) -> DMaxParams:
    return DMaxParams(continuous_parameter_array(state.rho, state.U, state.T, R)[0])


def _exponents(alpha: np.ndarray, basis: _Basis) -> np.ndarray:
    return alpha @ basis.exponent


def eval_discrete_maxwellian(params: DMaxParams, vgrid: VelocityGrid) -> np.ndarray:
    """Sample exp(alpha . psi(v)) on the velocity cube."""
    expo = _exponents(params.alpha[None, :], _basis(vgrid))[0]
    peak = float(expo.max())
    if peak > EXPONENT_LIMIT:
        raise DivergenceError(f"discrete Maxwellian exponent {peak:.1f} exceeds {EXPONENT_LIMIT}")
    return np.exp(expo).reshape(vgrid.cube_shape)


def eval_discrete_maxwellian_batch(alpha: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Distributions of N parameter rows, shape (N, n_cube)."""
    expo = _exponents(np.atleast_2d(alpha), _basis(vgrid))
    if expo.size and expo.max() > EXPONENT_LIMIT:
        raise DivergenceError(f"discrete Maxwellian exponent {expo.max():.1f} exceeds {EXPONENT_LIMIT}")
    return np.exp(expo)


def _moments_batch(M: np.ndarray, basis: _Basis) -> np.ndarray:
    return (M @ basis.moments.T) * basis.cell_volume


def _jacobian_batch(M: np.ndarray, basis: _Basis) -> np.ndarray:
    upper = (M @ basis.products.T) * basis.cell_volume
    J = np.empty((len(M), 5, 5))
    for n, (a, b) in enumerate(_PAIRS):
        J[:, a, b] = upper[:, n]
        J[:, b, a] = upper[:, n]
    return J


def residual_and_jacobian(params: DMaxParams, target: MomentTarget,
                          vgrid: VelocityGrid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Moment residual and its Jacobian, computed from one evaluation of the distribution.

    The residual is ordered (rho, rhoU_x, rhoU_y, rhoU_z, E). The Jacobian is
    taken with respect to the conjugate coordinates (alpha_0..alpha_3, 2 alpha_4),
    which makes it symmetric positive definite.
    """
    basis = _basis(vgrid)
    M = eval_discrete_maxwellian(params, vgrid).reshape(1, -1)
    residual = _moments_batch(M, basis)[0] - target.vector()
    return residual, _jacobian_batch(M, basis)[0]


def _ldl_solve(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with symmetric-pivoting LDL^T; D blocks are solved in the least-squares sense."""
    lu, d, perm = scipy.linalg.ldl(J, lower=True)
    L = lu[perm]
    y = scipy.linalg.solve_triangular(L, rhs[perm], lower=True, unit_diagonal=True)
    z = np.linalg.lstsq(d, y, rcond=None)[0]
    w = scipy.linalg.solve_triangular(L.T, z, lower=False, unit_diagonal=True)
    x = np.empty_like(w)
    x[perm] = w
    return x


def newton_direction(J: np.ndarray, residual: np.ndarray, singular_ratio: float = 1e-14) -> np.ndarray:
    """
    Newton step in alpha coordinates from the conjugate-coordinate Jacobian.

    The system is equilibrated with its diagonal, then Cholesky-factored; when
    the factorization fails or its pivots reveal near-singularity, LDL^T with
    symmetric pivoting takes over.
    """
    scale = 1.0 / np.sqrt(np.abs(np.diag(J)))
    A = J * scale[:, None] * scale[None, :]
    b = -residual * scale
    try:
        c, lower = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        pivots = np.diag(c) ** 2
        if pivots.min() < singular_ratio * pivots.max():
            raise np.linalg.LinAlgError("near-singular Cholesky pivots")
        y = scipy.linalg.cho_solve((c, lower), b)
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("Cholesky rejected, using LDL^T with symmetric pivoting")
        y = _ldl_solve(A, b)
    direction = y * scale
    direction[4] *= 0.5
    return direction


def armijo_backtracking(merit: Callable[[np.ndarray], float], x: np.ndarray, direction: np.ndarray,
                        admissible: Callable[[np.ndarray], bool] = lambda _: True,
                        c: float = ARMIJO_C, min_exponent: int = MIN_STEP_EXPONENT) -> float:
    """
    Largest t in {1, 1/2, ..., 2**-min_exponent} with merit(x + t d) <= (1 - c t) merit(x).

    ``merit`` returns a squared residual norm; trial points rejected by
    ``admissible`` or whose merit evaluation diverges are skipped.
    """
    f0 = merit(x)
    t = 1.0
    for _ in range(min_exponent + 1):
        trial = x + t * direction
        if admissible(trial):
            try:
                if merit(trial) <= (1.0 - c * t) * f0:
                    return t
            except DivergenceError:
                pass
        t *= 0.5
    raise LineSearchError(f"no admissible step down to 2**-{min_exponent} (merit={f0:.3e})")


def backtracking_search(params: DMaxParams, direction: np.ndarray, target: MomentTarget,
                        vgrid: VelocityGrid) -> float:
    """Step length along ``direction`` (alpha coordinates) with Armijo decrease and alpha_4 < 0."""
    basis = _basis(vgrid)
    goal = target.vector()

    def merit(alpha: np.ndarray) -> float:
        expo = _exponents(alpha[None, :], basis)
        if expo.max() > EXPONENT_LIMIT:
            raise DivergenceError("trial exponent overflow")
        r = _moments_batch(np.exp(expo), basis)[0] - goal
        return float(r @ r)

    return armijo_backtracking(merit, params.alpha, np.asarray(direction, dtype=float),
                               admissible=lambda alpha: alpha[4] < 0)


def _tolerance(targets: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    """Per-component tolerances relative to the natural moment scale, with an absolute floor."""
    return np.maximum(rtol * moment_scale(targets), atol)


def solve_discrete_maxwellian(target: MomentTarget, vgrid: VelocityGrid, R: float,
                              guess: Optional[MacroState] = None, rtol: float = DMAX_RTOL,
                              atol: float = DMAX_ATOL, max_iter: int = DMAX_MAX_ITER) -> DMaxParams:
    """
    Newton iteration with backtracking for one target.

    Starts from the continuous-Maxwellian parameters of ``guess`` (default: the
    target's own macro state). Raises DiscreteMaxwellianError on non-convergence
    or line-search failure.
    """
    goal = target.vector()
    if guess is None:
        guess = macro_field_from_moments(goal[None, :], R).at(0)
    params = continuous_parameters(guess, R)
    tol = _tolerance(goal[None, :], rtol, atol)[0]

    residual = np.full(5, np.inf)
    for iteration in range(max_iter + 1):
        residual, J = residual_and_jacobian(params, target, vgrid)
        if np.all(np.abs(residual) <= tol):
            logger.debug(f"Discrete Maxwellian converged in {iteration} iterations")
            return params
        if iteration == max_iter:
            break
        direction = newton_direction(J, residual)
        try:
            t = backtracking_search(params, direction, target, vgrid)
        except LineSearchError as e:
            raise DiscreteMaxwellianError(f"line search failed: {e}", float(np.linalg.norm(residual)),
                                          iteration) from e
        params = DMaxParams(params.alpha + t * direction)

    raise DiscreteMaxwellianError("Newton iteration did not converge", float(np.linalg.norm(residual)),
                                  max_iter)


def _evaluate_batch(alpha: np.ndarray, basis: _Basis) -> Tuple[np.ndarray, np.ndarray]:
    """Distribution values and an overflow-free mask for a batch of parameter rows."""
    expo = _exponents(alpha, basis)
    ok = expo.max(axis=1) <= EXPONENT_LIMIT
    expo[~ok] = -np.inf
    return np.exp(expo), ok


def _batch_directions(J: np.ndarray, residual: np.ndarray) -> np.ndarray:
    scale = 1.0 / np.sqrt(np.abs(np.einsum("nii->ni", J)))
    A = J * scale[:, :, None] * scale[:, None, :]
    try:
        L = np.linalg.cholesky(A)
        pivots = np.einsum("nii->ni", L) ** 2
        if np.any(pivots.min(axis=1) < 1e-14 * pivots.max(axis=1)):
            raise np.linalg.LinAlgError("near-singular pivots in batch")
        b = -residual * scale
        y = np.linalg.solve(L, b[:, :, None])
        y = np.linalg.solve(np.swapaxes(L, 1, 2), y)[:, :, 0]
        direction = y * scale
        direction[:, 4] *= 0.5
        return direction
    except np.linalg.LinAlgError:
        return np.stack([newton_direction(J[n], residual[n]) for n in range(len(J))])


def solve_discrete_maxwellian_batch(targets: np.ndarray, vgrid: VelocityGrid, R: float,
                                    guess_alpha: Optional[np.ndarray] = None, rtol: float = DMAX_RTOL,
                                    atol: float = DMAX_ATOL, max_iter: int = DMAX_MAX_ITER) -> DMaxSolution:
    """
    Solve many independent targets (rows of an (N, 5) array) at once.

    Same iteration as solve_discrete_maxwellian, vectorized over points; each
    point keeps its own step length. Points that fail are reported through
    ``converged`` rather than raised, so the caller can fall back per point.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = len(targets)
    basis = _basis(vgrid)
    if guess_alpha is None:
        macro = macro_field_from_moments(targets, R)
        guess_alpha = continuous_parameter_array(macro.rho, macro.U, macro.T, R)
    alpha = np.array(guess_alpha, dtype=float, copy=True)
    tol = _tolerance(targets, rtol, atol)

    converged = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)
    residual_norm = np.full(n, np.inf)

    for iteration in range(max_iter + 1):
        active = np.flatnonzero(~converged & ~failed)
        if active.size == 0:
            break

        M, ok = _evaluate_batch(alpha[active], basis)
        failed[active[~ok]] = True
        active, M = active[ok], M[ok]

        residual = _moments_batch(M, basis) - targets[active]
        residual_norm[active] = np.linalg.norm(residual, axis=1)
        done = np.all(np.abs(residual) <= tol[active], axis=1)
        converged[active[done]] = True
        iterations[active] = iteration
        if iteration == max_iter:
            break

        active, M, residual = active[~done], M[~done], residual[~done]
        if active.size == 0:
            break

        direction = _batch_directions(_jacobian_batch(M, basis), residual)
        steps, accepted = _batch_backtracking(alpha[active], direction, targets[active],
                                              np.einsum("na,na->n", residual, residual), basis)
        failed[active[~accepted]] = True
        alpha[active] += steps[:, None] * direction

    if np.any(~converged):
        logger.debug(f"Discrete Maxwellian: {int((~converged).sum())} of {n} points did not converge")
    return DMaxSolution(alpha=alpha, converged=converged, iterations=iterations, residual_norm=residual_norm)


def _batch_backtracking(alpha: np.ndarray, direction: np.ndarray, targets: np.ndarray,
                        merit0: np.ndarray, basis: _Basis) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row Armijo backtracking; returns step lengths (0 where rejected) and the accepted mask."""
    n = len(alpha)
    t = np.ones(n)
    accepted = np.zeros(n, dtype=bool)
    for _ in range(MIN_STEP_EXPONENT + 1):
        pending = np.flatnonzero(~accepted)
        if pending.size == 0:
            break
        trial = alpha[pending] + t[pending, None] * direction[pending]
        admissible = trial[:, 4] < 0
        M, ok = _evaluate_batch(trial, basis)
        r = _moments_batch(M, basis) - targets[pending]
        with np.errstate(invalid="ignore"):
            merit = np.einsum("na,na->n", r, r)
            good = admissible & ok & (merit <= (1.0 - ARMIJO_C * t[pending]) * merit0[pending])
        accepted[pending[good]] = True
        t[pending[~good]] *= 0.5
    t[~accepted] = 0.0
    return t, accepted
