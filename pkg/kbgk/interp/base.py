"""Base reconstructor interface for all interpolation back-ends."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple
import logging

import numpy as np
import scipy.sparse

from ..core import PhysicalGrid

logger = logging.getLogger(__name__)


class BaseReconstructor(ABC):
    """Abstract base class for all spatial reconstructors."""

    # Method identifier (must be unique)
    method_id: str = None

    # Human-readable name
    method_name: str = None

    def __init__(self, grid: PhysicalGrid, config: Optional[Dict[str, Any]] = None):
        """Initialize reconstructor on a physical grid with optional configuration."""
        self.grid = grid
        self.config = config or {}
        self._validate_config()

        # Track reconstruction statistics
        self.stats = {
            "stencils_built": 0,
            "operators_built": 0,
        }

    @abstractmethod
    def _validate_config(self) -> None:
        """Validate configuration for this reconstructor."""
        pass

    @abstractmethod
    def stencil(self, x_query: float, upwind_sign: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """
        Reconstruction stencil at one query point.

        Returns:
            (indices, coefficients): grid-point indices and the weights that
            combine the values stored there into the reconstructed value.
            Indices may repeat; repeated weights add.
        """
        pass

    def interpolate(self, values: np.ndarray, x_query: float, upwind_sign: int = 0) -> float:
        """Reconstruct one value at ``x_query`` from per-point ``values``."""
        indices, coefficients = self.stencil(x_query, upwind_sign)
        return float(coefficients @ np.asarray(values, dtype=float)[indices])

    def advection_operator(self, foot_points: np.ndarray, upwind_sign: int = 0) -> scipy.sparse.csr_matrix:
        """
        Sparse matrix A with (A @ f)[i] the reconstruction of f at ``foot_points[i]``.

        One neighbor search per foot point; the matrix is reused for every
        velocity cube column sharing the same x-velocity.
        """
        rows, cols, data = [], [], []
        for i, x in enumerate(np.asarray(foot_points, dtype=float)):
            indices, coefficients = self.stencil(float(x), upwind_sign)
            rows.append(np.full(len(indices), i))
            cols.append(indices)
            data.append(coefficients)

        self.stats["operators_built"] += 1
        n = self.grid.n_points
        # COO -> CSR sums repeated (row, col) entries
        return scipy.sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(foot_points), n),
        ).tocsr()
