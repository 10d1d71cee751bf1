"""Grids, gas constants, gas-closure formulas and solver configuration."""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from sklearn.neighbors import KDTree

from .constants import (
    BOLTZMANN_CONSTANT,
    GAS_CONSTANT_ARGON,
    JITTER_FRACTION,
    JITTER_SWEEPS,
    MOLECULE_DIAMETER_ARGON,
)
from .errors import ConfigError, GridOrderingError

if TYPE_CHECKING:
    from .boundary import WallSpec
    from .moments import MacroState

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TAU_MODES = ("constant", "variable")
MAXWELLIAN_MODES = ("continuous", "discrete")


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Uniform tensor-product velocity grid; the same nodes serve all three axes."""

    v_max: float
    n_v: int
    nodes: np.ndarray
    dv: float

    @property
    def size(self) -> int:
        """Nodes per axis (N_v + 1)."""
        return self.n_v + 1

    @property
    def cube_shape(self) -> Tuple[int, int, int]:
        return (self.size, self.size, self.size)

    @property
    def n_cube(self) -> int:
        return self.size ** 3

    @property
    def cell_volume(self) -> float:
        return self.dv ** 3

    @cached_property
    def velocities(self) -> np.ndarray:
        """All cube nodes as an (n_cube, 3) array in (v_x, v_y, v_z) C order."""
        vx, vy, vz = np.meshgrid(self.nodes, self.nodes, self.nodes, indexing="ij")
        return np.stack([vx.ravel(), vy.ravel(), vz.ravel()], axis=1)

    @cached_property
    def speed_squared(self) -> np.ndarray:
        v = self.velocities
        return np.einsum("ca,ca->c", v, v)

    @cached_property
    def invariants(self) -> np.ndarray:
        """Collision invariants (1, v_x, v_y, v_z, |v|^2/2) sampled on the cube, shape (5, n_cube)."""
        v = self.velocities
        return np.vstack([np.ones(self.n_cube), v.T, 0.5 * self.speed_squared])


@dataclass(frozen=True, eq=False)
class PhysicalGrid:
    """Sorted 1D point set on [a, b]; endpoints are the wall nodes."""

    a: float
    b: float
    points: np.ndarray
    regular: bool = True

    @property
    def n_x(self) -> int:
        """Number of intervals (points minus one)."""
        return len(self.points) - 1

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def dx_avg(self) -> float:
        return (self.b - self.a) / self.n_x

    @cached_property
    def tree(self) -> KDTree:
        """KD-tree over the coordinates, used for MLS radius queries."""
        return KDTree(self.points.reshape(-1, 1))

    @cached_property
    def interior(self) -> np.ndarray:
        return np.arange(1, self.n_points - 1)


@dataclass(frozen=True)
class GasConstants:
    R: float = GAS_CONSTANT_ARGON
    d: float = MOLECULE_DIAMETER_ARGON
    k_B: float = BOLTZMANN_CONSTANT

    def __post_init__(self):
        for name in ("R", "d", "k_B"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"must be strictly positive, got {getattr(self, name)}", key=name)


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Numerical and physical parameters of one kinetic run."""

    left: "MacroState"
    right: "MacroState"
    walls: Tuple["WallSpec", "WallSpec"]
    gas: GasConstants = field(default_factory=GasConstants)
    cfl: float = 1.0
    t_final: float = 0.17
    n_x: int = 200
    n_v: int = 20
    v_max: float = 10.0
    a: float = 0.0
    b: float = 1.0
    diaphragm: float = 0.5
    lambda_left: Optional[float] = None
    lambda_right: Optional[float] = None
    tau_mode: str = "constant"
    reconstruction: str = "mls"
    maxwellian_mode: str = "continuous"
    mls_alpha: float = 6.0
    mls_radius_factor: float = 2.5
    upwind_stencil: bool = False
    irregular_grid: bool = False
    rng_seed: int = 0
    dmax_rtol: float = 1e-10
    dmax_max_iter: int = 100
    progress: bool = False

    def validate(self) -> "SolverConfig":
        if not self.cfl > 0:
            raise ConfigError(f"must be > 0, got {self.cfl}", key="cfl")
        if not self.t_final > 0:
            raise ConfigError(f"must be > 0, got {self.t_final}", key="t_final")
        if self.n_v < 2:
            raise ConfigError(f"must be >= 2 to bracket zero velocity, got {self.n_v}", key="n_v")
        if self.n_x < 2:
            raise ConfigError(f"must be >= 2, got {self.n_x}", key="n_x")
        if not self.v_max > 0:
            raise ConfigError(f"must be > 0, got {self.v_max}", key="v_max")
        if not self.a < self.b:
            raise ConfigError(f"domain [{self.a}, {self.b}] is empty", key="b")
        if not self.a < self.diaphragm < self.b:
            raise ConfigError(f"must lie inside ({self.a}, {self.b})", key="diaphragm")
        if self.tau_mode not in TAU_MODES:
            raise ConfigError(f"expected one of {TAU_MODES}, got '{self.tau_mode}'", key="tau_mode")
        if self.maxwellian_mode not in MAXWELLIAN_MODES:
            raise ConfigError(
                f"expected one of {MAXWELLIAN_MODES}, got '{self.maxwellian_mode}'", key="maxwellian_mode"
            )
        if not self.mls_alpha > 0:
            raise ConfigError(f"must be > 0, got {self.mls_alpha}", key="mls_alpha")
        # h >= dx_avg keeps at least two points inside every search disc on a regular grid
        if self.mls_radius_factor < 1:
            raise ConfigError(f"must be >= 1, got {self.mls_radius_factor}", key="mls_radius_factor")
        for key in ("lambda_left", "lambda_right"):
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(f"must be > 0, got {value}", key=key)
        if not 0 < self.dmax_rtol < 1:
            raise ConfigError(f"must be in (0, 1), got {self.dmax_rtol}", key="dmax_rtol")
        if self.dmax_max_iter < 1:
            raise ConfigError(f"must be >= 1, got {self.dmax_max_iter}", key="dmax_max_iter")
        return self

    @property
    def dx_avg(self) -> float:
        return (self.b - self.a) / self.n_x


def build_velocity_grid(v_max: float, n_v: int) -> VelocityGrid:
    """Build the uniform grid -v_max, -v_max + dv, ..., +v_max with dv = 2 v_max / n_v."""
    if n_v < 2:
        raise ConfigError(f"must be >= 2 to bracket zero velocity, got {n_v}", key="n_v")
    if not v_max > 0:
        raise ConfigError(f"must be > 0, got {v_max}", key="v_max")

    # Integers -n_v, -n_v + 2, ..., n_v scaled by one factor keep the grid exactly symmetric
    nodes = np.arange(-n_v, n_v + 1, 2, dtype=float) * v_max / n_v
    nodes[0], nodes[-1] = -v_max, v_max
    return VelocityGrid(v_max=float(v_max), n_v=int(n_v), nodes=nodes, dv=2.0 * v_max / n_v)


def build_regular_grid(a: float, b: float, n_x: int) -> PhysicalGrid:
    if not a < b:
        raise ConfigError(f"domain [{a}, {b}] is empty", key="b")
    if n_x < 2:
        raise ConfigError(f"must be >= 2, got {n_x}", key="n_x")

    points = a + np.arange(n_x + 1) * ((b - a) / n_x)
    points[-1] = b
    return PhysicalGrid(a=float(a), b=float(b), points=points, regular=True)


def jitter_grid(grid: PhysicalGrid, seed: int,
                sweeps: int = JITTER_SWEEPS, fraction: float = JITTER_FRACTION) -> PhysicalGrid:
    """
    Randomly displace the interior points of a regular grid.

    Each sweep moves every interior point towards larger x by ``fraction * dx * u``
    with ``u`` uniform on [0, 1]; the walls stay fixed. The RNG is seeded, so equal
    seeds give identical grids.
    """
    if not grid.regular:
        raise ConfigError("can only jitter a regular grid", key="irregular_grid")

    rng = np.random.default_rng(seed)
    points = grid.points.copy()
    step = fraction * grid.dx_avg
    for _ in range(sweeps):
        points[1:-1] += step * rng.uniform(0.0, 1.0, size=grid.n_points - 2)

    gaps = np.diff(points)
    if np.any(gaps <= 0):
        bad = int(np.argmin(gaps))
        raise GridOrderingError(f"jittered grid lost monotonicity between points {bad} and {bad + 1}")

    logger.debug(f"Jittered grid (seed={seed}): min spacing {gaps.min():.3e}, max {gaps.max():.3e}")
    return PhysicalGrid(a=grid.a, b=grid.b, points=points, regular=False)


def dual_cell_widths(grid: PhysicalGrid) -> np.ndarray:
    """Quadrature widths of the points: half-distance to each neighbor, half-cells at the walls."""
    gaps = np.diff(grid.points)
    widths = np.empty(grid.n_points)
    widths[0] = 0.5 * gaps[0]
    widths[-1] = 0.5 * gaps[-1]
    widths[1:-1] = 0.5 * (gaps[:-1] + gaps[1:])
    return widths


def left_fractions(grid: PhysicalGrid, x_split: float) -> np.ndarray:
    """Share of every dual cell lying left of ``x_split``: 1 wholly left, 0 wholly right."""
    midpoints = 0.5 * (grid.points[:-1] + grid.points[1:])
    lower = np.concatenate([[grid.points[0]], midpoints])
    upper = np.concatenate([midpoints, [grid.points[-1]]])
    return np.clip((x_split - lower) / (upper - lower), 0.0, 1.0)


def mean_free_path(rho: ArrayLike, gas: GasConstants) -> ArrayLike:
    """lambda = k_B / (sqrt(2) pi rho R d^2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("mean free path needs a positive density")
    lam = gas.k_B / (math.sqrt(2.0) * math.pi * rho * gas.R * gas.d ** 2)
    return float(lam) if lam.ndim == 0 else lam


def relaxation_time(lam: ArrayLike, T: ArrayLike, R: float) -> ArrayLike:
    """tau = 4 lambda / (pi C), C = sqrt(8 R T / pi) the mean thermal speed."""
    lam = np.asarray(lam, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(lam <= 0) or np.any(T <= 0):
        raise ValueError("relaxation time needs positive mean free path and temperature")
    mean_speed = np.sqrt(8.0 * R * T / math.pi)
    tau = 4.0 * lam / (math.pi * mean_speed)
    return float(tau) if tau.ndim == 0 else tau


def knudsen_number(lam: float, length: float) -> float:
    return lam / length
