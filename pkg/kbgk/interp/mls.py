"""
Constrained moving least squares.

The fit is linear around the nearest neighbor x_1 (the anchor) and exact there;
the slope minimizes the Gaussian-weighted squared error over the remaining
neighbors:

    df/dx = sum_j w_j (x_j - x_1)(f_j - f_1) / sum_j w_j (x_j - x_1)^2,   j >= 2
    f(x)  = f_1 + (x - x_1) df/dx

with w_j = exp(-alpha d_j^2 / h^2), d_j = |x_j - x|, and w_j = 0 for d_j > h.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..constants import MLS_ALPHA, MLS_RADIUS_FACTOR
from ..core import PhysicalGrid
from ..errors import ConfigError, DegenerateStencilError, StencilStarvationError
from .base import BaseReconstructor
from .registry import register_reconstructor

logger = logging.getLogger(__name__)

# Search radius growth applied once when a stencil starves
RADIUS_WIDENING = 1.5


@dataclass(frozen=True)
class MlsConfig:
    alpha: float = MLS_ALPHA
    radius_factor: float = MLS_RADIUS_FACTOR
    upwind: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"must be > 0, got {self.alpha}", key="mls_alpha")
        if self.radius_factor < 1:
            raise ConfigError(f"must be >= 1, got {self.radius_factor}", key="mls_radius_factor")


@dataclass(frozen=True, eq=False)
class NeighborSet:
    """Neighbors of a query point, nearest first."""

    indices: np.ndarray
    coords: np.ndarray
    query: float
    radius: float

    @property
    def distances(self) -> np.ndarray:
        return np.abs(self.coords - self.query)

    def __len__(self) -> int:
        return len(self.indices)


def find_neighbors(grid: PhysicalGrid, x_query: float, h: float, upwind_sign: int = 0,
                   candidates: Optional[np.ndarray] = None) -> NeighborSet:
    """
    All points within ``h`` of ``x_query`` sorted by distance (ties by index).

    ``upwind_sign`` +1 keeps points with x <= x_query, -1 keeps x >= x_query;
    the nearest point stays regardless. ``candidates`` restricts the search to
    the given point indices.
    """
    if not h > 0:
        raise ValueError(f"search radius must be positive, got {h}")

    indices, distances = grid.tree.query_radius(np.array([[x_query]]), r=h, return_distance=True)
    indices, distances = indices[0], distances[0]
    if candidates is not None:
        keep = np.isin(indices, candidates)
        indices, distances = indices[keep], distances[keep]

    order = np.lexsort((indices, distances))
    indices = indices[order]
    coords = grid.points[indices]

    if upwind_sign and len(indices):
        side = coords <= x_query if upwind_sign > 0 else coords >= x_query
        side[0] = True
        indices, coords = indices[side], coords[side]

    if len(indices) < 2:
        raise StencilStarvationError(
            f"{len(indices)} admissible neighbor(s) within h={h:.3e} of x={x_query:.6g} (upwind={upwind_sign})"
        )
    return NeighborSet(indices=indices, coords=coords, query=float(x_query), radius=float(h))


def mls_weight(x_j, x_query: float, h: float, alpha: float = MLS_ALPHA):
    """Gaussian weight exp(-alpha d^2 / h^2), cut to zero beyond distance h."""
    d = np.abs(np.asarray(x_j, dtype=float) - x_query)
    w = np.where(d <= h, np.exp(-alpha * d ** 2 / h ** 2), 0.0)
    return float(w) if w.ndim == 0 else w


def mls_coefficients(neighbors: NeighborSet, x_query: float, alpha: float = MLS_ALPHA) -> np.ndarray:
    """Weights c with f(x_query) = sum_j c_j f_j over the neighbor set; they sum to one."""
    offsets = neighbors.coords[1:] - neighbors.coords[0]
    w = mls_weight(neighbors.coords[1:], x_query, neighbors.radius, alpha)
    denominator = float(np.sum(w * offsets ** 2))
    if denominator == 0.0:
        raise DegenerateStencilError(
            f"no weighted spread around anchor x={neighbors.coords[0]:.6g} (query {x_query:.6g})"
        )

    coefficients = np.empty(len(neighbors))
    coefficients[1:] = (x_query - neighbors.coords[0]) * w * offsets / denominator
    coefficients[0] = 1.0 - coefficients[1:].sum()
    return coefficients


def mls_interpolate(neighbors: NeighborSet, values: np.ndarray, x_query: float,
                    cfg: MlsConfig = MlsConfig()) -> float:
    """Constrained MLS value at ``x_query``; ``values`` is indexed by grid point."""
    coefficients = mls_coefficients(neighbors, x_query, cfg.alpha)
    return float(coefficients @ np.asarray(values, dtype=float)[neighbors.indices])


def mls_extrapolate_boundary(neighbors: NeighborSet, values: np.ndarray, x_boundary: float,
                             cfg: MlsConfig = MlsConfig()) -> float:
    """Wall value extrapolated from a neighbor set drawn from interior points."""
    return mls_interpolate(neighbors, values, x_boundary, cfg)


def robust_neighbors(grid: PhysicalGrid, x_query: float, h: float, upwind_sign: int = 0,
                     candidates: Optional[np.ndarray] = None, stats: Optional[dict] = None) -> NeighborSet:
    """
    find_neighbors with the starvation fallback: drop the upwind filter, then
    widen the radius once by RADIUS_WIDENING, then give up.
    """
    stats = stats if stats is not None else {}
    try:
        return find_neighbors(grid, x_query, h, upwind_sign, candidates)
    except StencilStarvationError:
        if upwind_sign:
            try:
                neighbors = find_neighbors(grid, x_query, h, 0, candidates)
                stats["unfiltered_fallbacks"] = stats.get("unfiltered_fallbacks", 0) + 1
                return neighbors
            except StencilStarvationError:
                pass

    neighbors = find_neighbors(grid, x_query, RADIUS_WIDENING * h, 0, candidates)
    stats["widened_radius"] = stats.get("widened_radius", 0) + 1
    logger.debug(f"Widened MLS radius to {RADIUS_WIDENING * h:.3e} at x={x_query:.6g}")
    return neighbors


@register_reconstructor
class MlsReconstructor(BaseReconstructor):
    """
    Constrained MLS on the grid points, walls included as ordinary data.

    Foot points outside [a, b] are moved onto the nearer wall, where the wall
    node is the anchor and reproduces the wall value.
    Config:
        alpha: Gaussian sharpness (default 6)
        radius_factor: search radius in units of the average spacing (default 2.5)
        upwind: keep only upwind neighbors of each foot point
    """

    method_id = "mls"
    method_name = "Constrained moving least squares"

    def _validate_config(self) -> None:
        self.mls = MlsConfig(
            alpha=float(self.config.get("alpha", MLS_ALPHA)),
            radius_factor=float(self.config.get("radius_factor", MLS_RADIUS_FACTOR)),
            upwind=bool(self.config.get("upwind", False)),
        )
        self.radius = self.mls.radius_factor * self.grid.dx_avg

    def stencil(self, x_query: float, upwind_sign: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        x = min(max(float(x_query), self.grid.a), self.grid.b)
        sign = int(np.sign(upwind_sign)) if self.mls.upwind else 0
        neighbors = robust_neighbors(self.grid, x, self.radius, sign, stats=self.stats)
        self.stats["stencils_built"] += 1
        return neighbors.indices, mls_coefficients(neighbors, x, self.mls.alpha)
