"""
Diffuse-reflection (Maxwell) walls.

At a wall with inward normal nu, velocity nodes with (v - U_w) . nu <= 0 carry
gas towards the wall and are extrapolated from the interior with MLS. Nodes
with (v - U_w) . nu > 0 are emitted by the wall as rho_w times the unit-density
wall Maxwellian, rho_w chosen so that the net mass flux through the wall is zero.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .core import PhysicalGrid, VelocityGrid
from .errors import ConfigError
from .interp.mls import MlsConfig, mls_coefficients, robust_neighbors

logger = logging.getLogger(__name__)

WALL_POSITIONS = ("left", "right")


@dataclass(frozen=True, eq=False)
class WallSpec:
    position: str
    U_w: np.ndarray
    T_w: float
    normal: float

    def __post_init__(self):
        object.__setattr__(self, "U_w", np.asarray(self.U_w, dtype=float).reshape(3))
        if self.position not in WALL_POSITIONS:
            raise ConfigError(f"expected one of {WALL_POSITIONS}, got '{self.position}'", key="position")
        if not self.T_w > 0:
            raise ConfigError(f"wall temperature must be > 0, got {self.T_w}", key=f"wall_{self.position}_e")
        if abs(self.normal) != 1.0:
            raise ConfigError(f"wall normal must be +1 or -1, got {self.normal}", key="normal")

    @classmethod
    def at(cls, position: str, T_w: float, U_w: Sequence[float] = (0.0, 0.0, 0.0)) -> "WallSpec":
        """Wall whose normal points into the domain: +1 on the left, -1 on the right."""
        normal = 1.0 if position == "left" else -1.0
        return cls(position=position, U_w=np.asarray(U_w, dtype=float), T_w=float(T_w), normal=normal)

    @classmethod
    def from_internal_energy(cls, position: str, e_w: float, R: float,
                             U_w: Sequence[float] = (0.0, 0.0, 0.0)) -> "WallSpec":
        return cls.at(position, e_w / (1.5 * R), U_w)

    def normal_speed(self, vgrid: VelocityGrid) -> np.ndarray:
        """(v - U_w) . nu at every cube node, flattened."""
        return (vgrid.velocities[:, 0] - self.U_w[0]) * self.normal

    def unit_maxwellian(self, vgrid: VelocityGrid, R: float) -> np.ndarray:
        """Wall Maxwellian with density one, flattened."""
        RT = R * self.T_w
        w = vgrid.velocities - self.U_w
        return (2.0 * math.pi * RT) ** -1.5 * np.exp(-np.einsum("ca,ca->c", w, w) / (2.0 * RT))


def wall_density(f_gamma: np.ndarray, wall: WallSpec, vgrid: VelocityGrid, R: float) -> float:
    """
    Density of the emitted half-Maxwellian balancing the flux arriving at the wall.

    Only nodes with (v - U_w) . nu < 0 of ``f_gamma`` are read.
    """
    cn = wall.normal_speed(vgrid)
    f = np.asarray(f_gamma, dtype=float).reshape(-1)
    arriving = cn < 0
    emitted = cn > 0

    denominator = float(np.sum(cn[emitted] * wall.unit_maxwellian(vgrid, R)[emitted])) * vgrid.cell_volume
    if not denominator > 0:
        raise ConfigError(f"{wall.position} wall emits through no velocity node", key="n_v")
    numerator = -float(np.sum(cn[arriving] * f[arriving])) * vgrid.cell_volume
    return numerator / denominator


def wall_extrapolation_stencil(grid: PhysicalGrid, wall_index: int,
                               cfg: MlsConfig = MlsConfig()) -> Tuple[np.ndarray, np.ndarray]:
    """MLS indices and coefficients producing the wall value from interior points."""
    x_wall = float(grid.points[wall_index])
    h = cfg.radius_factor * grid.dx_avg
    neighbors = robust_neighbors(grid, x_wall, h, candidates=grid.interior)
    return neighbors.indices, mls_coefficients(neighbors, x_wall, cfg.alpha)


class DiffuseWalls:
    """Both walls of a run with their extrapolation stencils precomputed."""

    def __init__(self, grid: PhysicalGrid, walls: Sequence[WallSpec], vgrid: VelocityGrid, R: float,
                 cfg: MlsConfig = MlsConfig()):
        self.grid = grid
        self.vgrid = vgrid
        self.R = R
        self.walls = {wall.position: wall for wall in walls}
        if set(self.walls) != set(WALL_POSITIONS):
            raise ConfigError("need exactly one left and one right wall", key="walls")

        self._index = {"left": 0, "right": grid.n_points - 1}
        self._stencils = {pos: wall_extrapolation_stencil(grid, idx, cfg) for pos, idx in self._index.items()}
        self._normal = {pos: wall.normal_speed(vgrid) for pos, wall in self.walls.items()}
        self._emission = {pos: wall.unit_maxwellian(vgrid, R) for pos, wall in self.walls.items()}
        self.last_density: Dict[str, float] = {}
        self.nonpositive_density: Dict[str, int] = {position: 0 for position in WALL_POSITIONS}

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Return a copy of ``f`` with both wall cubes replaced by the diffuse closure."""
        out = f.copy()
        for position, wall in self.walls.items():
            indices, coefficients = self._stencils[position]
            extrapolated = np.tensordot(coefficients, f[indices], axes=1).reshape(-1)

            cn = self._normal[position]
            rho_w = wall_density(extrapolated, wall, self.vgrid, self.R)
            if rho_w < 0 or (rho_w == 0 and np.any(extrapolated[cn < 0] != 0)):
                # Extrapolated arrivals carry net outflow; emitted unclamped so the flux still balances
                self.nonpositive_density[position] += 1
                logger.warning(f"{position} wall density {rho_w:.3e} is not positive "
                               f"(occurrence {self.nonpositive_density[position]})")
            cube = np.where(cn > 0, rho_w * self._emission[position], extrapolated)
            out[self._index[position]] = cube.reshape(self.vgrid.cube_shape)
            self.last_density[position] = rho_w
        return out


def apply_diffuse_boundary(f_new: np.ndarray, walls: Sequence[WallSpec], vgrid: VelocityGrid, R: float,
                           grid: PhysicalGrid, cfg: Optional[MlsConfig] = None) -> np.ndarray:
    """One-shot diffuse closure at both walls of ``f_new`` (interior points already updated)."""
    return DiffuseWalls(grid, walls, vgrid, R, cfg or MlsConfig()).apply(f_new)
