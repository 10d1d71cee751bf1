"""Piecewise-linear spline reconstruction with mirrored ghost points beyond the walls."""

import logging
import math
from typing import Tuple, Union

import numpy as np
import scipy.sparse

from ..core import PhysicalGrid
from ..errors import ConfigError, OutOfDomainError
from .base import BaseReconstructor
from .registry import register_reconstructor

logger = logging.getLogger(__name__)


def _linear_weights(points: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bracketing interval index k and the weights of points k and k + 1 for each query."""
    outside = (x < points[0]) | (x > points[-1])
    if np.any(outside):
        bad = float(np.asarray(x)[outside].flat[0])
        raise OutOfDomainError(f"query {bad:.6g} outside [{points[0]:.6g}, {points[-1]:.6g}]")

    # x == points[-1] falls into the last interval with weights (0, 1)
    k = np.clip(np.searchsorted(points, x, side="right") - 1, 0, len(points) - 2)
    left, right = points[k], points[k + 1]
    width = right - left
    return k, (right - x) / width, (x - left) / width


def spline_interpolate(grid: Union[PhysicalGrid, np.ndarray], values: np.ndarray, x_query: float) -> float:
    """
    Linear interpolation between the two points bracketing ``x_query``.

    ``grid`` is a PhysicalGrid or any strictly increasing coordinate array
    (ghost-extended grids included); ``values`` holds one value per coordinate.
    """
    points = grid.points if isinstance(grid, PhysicalGrid) else np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    k, w_left, w_right = _linear_weights(points, np.asarray(x_query, dtype=float))
    return float(w_left * values[k] + w_right * values[k + 1])


@register_reconstructor
class SplineReconstructor(BaseReconstructor):
    """
    Linear spline on the grid extended by ghost points.

    Ghost coordinates mirror the interior points across each wall; ghost values
    are the wall values, so the weight of a ghost is folded onto its wall index.
    Config:
        reach: largest foot-point displacement v_max * dt the operator must serve.
    """

    method_id = "spline"
    method_name = "Piecewise-linear spline"

    def _validate_config(self) -> None:
        reach = float(self.config.get("reach", self.grid.dx_avg))
        if reach < 0:
            raise ConfigError(f"must be >= 0, got {reach}", key="reach")
        self.reach = reach
        self._build_extension()

    def _build_extension(self) -> None:
        grid = self.grid
        n_ghost = math.ceil(self.reach / grid.dx_avg) + 1
        mirrored = min(n_ghost, grid.n_points - 1)

        left = 2.0 * grid.a - grid.points[1:mirrored + 1]
        right = 2.0 * grid.b - grid.points[-2:-mirrored - 2:-1]
        # Short grids run out of points to mirror; pad with one equispaced ghost beyond the reach
        if grid.a - left[-1] < self.reach:
            left = np.append(left, grid.a - self.reach - grid.dx_avg)
        if right[-1] - grid.b < self.reach:
            right = np.append(right, grid.b + self.reach + grid.dx_avg)

        self.extended_points = np.concatenate([left[::-1], grid.points, right])
        self.index_map = np.concatenate([
            np.zeros(len(left), dtype=int),
            np.arange(grid.n_points),
            np.full(len(right), grid.n_points - 1),
        ])
        logger.debug(f"Spline extension: {len(left)} ghost points left, {len(right)} right")

    def stencil(self, x_query: float, upwind_sign: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        k, w_left, w_right = _linear_weights(self.extended_points, np.asarray(x_query, dtype=float))
        self.stats["stencils_built"] += 1
        return self.index_map[[k, k + 1]], np.array([w_left, w_right], dtype=float)

    def advection_operator(self, foot_points: np.ndarray, upwind_sign: int = 0) -> scipy.sparse.csr_matrix:
        foot_points = np.asarray(foot_points, dtype=float)
        k, w_left, w_right = _linear_weights(self.extended_points, foot_points)
        rows = np.arange(len(foot_points))

        self.stats["stencils_built"] += len(foot_points)
        self.stats["operators_built"] += 1
        return scipy.sparse.coo_matrix(
            (np.concatenate([w_left, w_right]),
             (np.concatenate([rows, rows]), np.concatenate([self.index_map[k], self.index_map[k + 1]]))),
            shape=(len(foot_points), self.grid.n_points),
        ).tocsr()
