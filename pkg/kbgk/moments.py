"""Macroscopic moments, the continuous Maxwellian and Maxwellian field initialization."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .core import VelocityGrid
from .errors import NegativeInternalEnergyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MacroState:
    """Macroscopic state at one spatial point."""

    rho: float
    U: np.ndarray
    T: float
    e: float
    E: float
    p: float

    def __post_init__(self):
        if not self.rho > 0:
            raise NegativeInternalEnergyError(f"density must be positive, got {self.rho}")
        if not self.T > 0:
            raise NegativeInternalEnergyError(f"temperature must be positive, got {self.T}")

    @classmethod
    def from_temperature(cls, rho: float, U: Sequence[float], T: float, R: float) -> "MacroState":
        U = np.asarray(U, dtype=float).reshape(3)
        e = 1.5 * R * T
        E = rho * e + 0.5 * rho * float(U @ U)
        return cls(rho=float(rho), U=U, T=float(T), e=e, E=E, p=rho * R * T)

    @classmethod
    def from_internal_energy(cls, rho: float, U: Sequence[float], e: float, R: float) -> "MacroState":
        return cls.from_temperature(rho, U, e / (1.5 * R), R)

    @classmethod
    def blend(cls, first: "MacroState", second: "MacroState", weight: float, R: float) -> "MacroState":
        """
        State carrying ``weight`` of the conserved moments of ``first`` and the rest of ``second``.

        Mass, momentum and total energy mix linearly, so a cell split by a
        discontinuity holds exactly its share of each side.
        """
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"blend weight must lie in [0, 1], got {weight}")
        q = weight * first.conserved() + (1.0 - weight) * second.conserved()
        rho = float(q[0])
        U = q[1:4] / rho
        e = float(q[4]) / rho - 0.5 * float(U @ U)
        return cls.from_internal_energy(rho, U, e, R)

    def conserved(self) -> np.ndarray:
        """(rho, rho U_x, rho U_y, rho U_z, E)."""
        return np.concatenate([[self.rho], self.rho * self.U, [self.E]])


@dataclass(frozen=True, eq=False)
class MacroField:
    """Macroscopic states at every spatial point, stored column-wise."""

    rho: np.ndarray
    U: np.ndarray
    T: np.ndarray
    e: np.ndarray
    E: np.ndarray
    p: np.ndarray

    def __len__(self) -> int:
        return len(self.rho)

    def at(self, i: int) -> MacroState:
        return MacroState(rho=float(self.rho[i]), U=self.U[i].copy(), T=float(self.T[i]),
                          e=float(self.e[i]), E=float(self.E[i]), p=float(self.p[i]))

    @classmethod
    def from_states(cls, states: Sequence[MacroState]) -> "MacroField":
        return cls(
            rho=np.array([s.rho for s in states]),
            U=np.array([s.U for s in states]).reshape(-1, 3),
            T=np.array([s.T for s in states]),
            e=np.array([s.e for s in states]),
            E=np.array([s.E for s in states]),
            p=np.array([s.p for s in states]),
        )


def _check_cube(f: np.ndarray, vgrid: VelocityGrid) -> None:
    if f.ndim < 3 or f.shape[-3:] != vgrid.cube_shape:
        raise ValueError(f"velocity cube must end in shape {vgrid.cube_shape}, got {f.shape}")


def moment_vector(f: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """
    Discrete conserved moments (rho, rho U_x, rho U_y, rho U_z, E) of one or many cubes.

    Plain node sums times dv^3 over all N_v + 1 nodes per axis. Leading
    dimensions of ``f`` are kept; the result has shape ``f.shape[:-3] + (5,)``.
    """
    f = np.asarray(f, dtype=float)
    _check_cube(f, vgrid)
    flat = f.reshape(f.shape[:-3] + (vgrid.n_cube,))
    return (flat @ vgrid.invariants.T) * vgrid.cell_volume


def compute_moments(f_point: np.ndarray, vgrid: VelocityGrid) -> Tuple[float, np.ndarray, float]:
    """Return (rho, rhoU, E) of a single velocity cube."""
    f_point = np.asarray(f_point, dtype=float)
    if f_point.shape != vgrid.cube_shape:
        raise ValueError(f"expected a cube of shape {vgrid.cube_shape}, got {f_point.shape}")
    m = moment_vector(f_point, vgrid)
    return float(m[0]), m[1:4].copy(), float(m[4])


def moment_scale(moments: np.ndarray) -> np.ndarray:
    """
    Natural magnitude of each conserved component, shape (N, 5).

    Momentum components are measured against rho * sqrt(2E / rho) so that a gas
    at rest still has a meaningful reference.
    """
    moments = np.atleast_2d(np.asarray(moments, dtype=float))
    rho = np.abs(moments[:, 0])
    speed = np.sqrt(2.0 * np.abs(moments[:, 4]) / np.maximum(rho, np.finfo(float).tiny))
    scale = np.abs(moments).copy()
    scale[:, 1:4] = np.maximum(scale[:, 1:4], (rho * speed)[:, None])
    return scale


def macro_field_from_moments(moments: np.ndarray, R: float) -> MacroField:
    """
    Primitive variables from conserved moments of shape (N, 5).

    Raises NegativeInternalEnergyError naming the first point whose density or
    temperature is not positive; values are never clamped.
    """
    moments = np.atleast_2d(np.asarray(moments, dtype=float))
    rho = moments[:, 0]
    bad = np.flatnonzero(~(rho > 0))
    if bad.size:
        i = int(bad[0])
        raise NegativeInternalEnergyError(f"nonpositive density {rho[i]:.6e} at point {i}", point_index=i)

    U = moments[:, 1:4] / rho[:, None]
    E = moments[:, 4]
    e = E / rho - 0.5 * np.einsum("na,na->n", U, U)
    T = e / (1.5 * R)
    bad = np.flatnonzero(~(T > 0))
    if bad.size:
        i = int(bad[0])
        raise NegativeInternalEnergyError(
            f"negative internal energy at point {i}: rho={rho[i]:.6e}, rhoU={moments[i, 1:4]}, E={E[i]:.6e}",
            point_index=i,
        )
    return MacroField(rho=rho.copy(), U=U, T=T, e=e, E=E.copy(), p=rho * R * T)


def macro_from_moments(rho: float, rhoU: Sequence[float], E: float, R: float) -> MacroState:
    moments = np.concatenate([[rho], np.asarray(rhoU, dtype=float).reshape(3), [E]])
    return macro_field_from_moments(moments[None, :], R).at(0)


def eval_maxwellian(state: MacroState, v: np.ndarray, R: float) -> Union[float, np.ndarray]:
    """M(v) = rho / (2 pi R T)^{3/2} exp(-|v - U|^2 / (2 R T)); ``v`` has trailing dimension 3."""
    v = np.asarray(v, dtype=float)
    RT = R * state.T
    w = v - state.U
    value = state.rho / (2.0 * math.pi * RT) ** 1.5 * np.exp(-np.sum(w * w, axis=-1) / (2.0 * RT))
    return float(value) if np.ndim(value) == 0 else value


def maxwellian_cubes(rho: np.ndarray, U: np.ndarray, T: np.ndarray,
                     vgrid: VelocityGrid, R: float) -> np.ndarray:
    """Continuous Maxwellians of N macro states sampled on the grid, shape (N, n_cube)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    U = np.asarray(U, dtype=float).reshape(-1, 3)
    RT = R * np.atleast_1d(np.asarray(T, dtype=float))

    # |v - U|^2 expanded so no (N, n_cube, 3) temporary is built
    dist2 = (vgrid.speed_squared[None, :]
             - 2.0 * (U @ vgrid.velocities.T)
             + np.einsum("na,na->n", U, U)[:, None])
    prefactor = rho / (2.0 * math.pi * RT) ** 1.5
    return prefactor[:, None] * np.exp(-dist2 / (2.0 * RT[:, None]))


def init_maxwellian_field(macro: Union[MacroField, Sequence[MacroState]], vgrid: VelocityGrid,
                          R: float) -> np.ndarray:
    """Distribution field of shape (N, S, S, S) whose cube i is the Maxwellian of ``macro[i]``."""
    if not isinstance(macro, MacroField):
        macro = MacroField.from_states(list(macro))
    cubes = maxwellian_cubes(macro.rho, macro.U, macro.T, vgrid, R)
    return cubes.reshape((len(macro),) + vgrid.cube_shape)
