"""Spatial reconstruction back-ends for the semi-Lagrangian advection step."""

from .base import BaseReconstructor
from .registry import get_registry, register_reconstructor
from .mls import (
    MlsConfig,
    MlsReconstructor,
    NeighborSet,
    find_neighbors,
    mls_coefficients,
    mls_extrapolate_boundary,
    mls_interpolate,
    mls_weight,
    robust_neighbors,
)
from .spline import SplineReconstructor, spline_interpolate

__all__ = [
    "BaseReconstructor",
    "MlsConfig",
    "MlsReconstructor",
    "NeighborSet",
    "SplineReconstructor",
    "find_neighbors",
    "get_registry",
    "mls_coefficients",
    "mls_extrapolate_boundary",
    "mls_interpolate",
    "mls_weight",
    "register_reconstructor",
    "robust_neighbors",
    "spline_interpolate",
]
