"""
Shock-tube test presets.

Each preset is a base config plus named variants; every variant is one run.
Right-hand densities are one eighth of the left-hand ones throughout.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

from .errors import ConfigError

logger = logging.getLogger(__name__)

Overrides = Dict[str, Any]


@dataclass(frozen=True)
class Preset:
    number: int
    description: str
    base: Overrides
    variants: Dict[str, Overrides]


_PRESETS: Dict[int, Preset] = {}


def register_preset(number: int, description: str) -> Callable:
    """Decorator registering a function that returns (base, variants)."""
    def decorator(builder: Callable[[], Tuple[Overrides, Dict[str, Overrides]]]):
        if number in _PRESETS:
            logger.warning(f"Overwriting preset {number}")
        base, variants = builder()
        _PRESETS[number] = Preset(number=number, description=description, base=base, variants=variants)
        return builder
    return decorator


def get_preset(number: int) -> Preset:
    if number not in _PRESETS:
        raise ConfigError(f"no preset {number} (known: {sorted(_PRESETS)})", key="preset")
    return _PRESETS[number]


def list_presets() -> List[Preset]:
    return [_PRESETS[number] for number in sorted(_PRESETS)]


def _sod(rho_left: float, lambda_left: float, lambda_right: float, **extra) -> Overrides:
    return {"rho_left": rho_left, "rho_right": rho_left / 8.0,
            "lambda_left": lambda_left, "lambda_right": lambda_right, **extra}


@register_preset(1, "CFL 1 vs CFL 2, rho_l = 1e-4, lambda = 0.001 / 0.008, spline")
def _cfl_comparison():
    # Spline diffusion |v| dx / 2 - v^2 dt / 2 cancels the dt / 2 the implicit relaxation adds to tau
    base = _sod(1e-4, 0.001, 0.008, n_x=200, reconstruction="spline")
    return base, {"cfl1": {"cfl": 1.0}, "cfl2": {"cfl": 2.0}}


@register_preset(2, "Constant vs variable relaxation time at three mean free paths")
def _tau_comparison():
    cases = {
        "lam0.02": _sod(5e-6, 0.02, 0.17),
        "lam0.001": _sod(1e-4, 0.001, 0.008),
        "lam1e-07": _sod(1.0, 1e-7, 8e-7),
    }
    variants = {}
    for tag, case in cases.items():
        for mode in ("constant", "variable"):
            variants[f"{tag}_{mode}"] = {**case, "tau_mode": mode}
    return {"n_x": 200}, variants


@register_preset(3, "Regular vs jittered grid, rho_l = 5e-6, MLS")
def _grid_comparison():
    base = _sod(5e-6, 0.02, 0.17, n_x=200, reconstruction="mls")
    return base, {"regular": {"irregular_grid": False}, "irregular": {"irregular_grid": True}}


@register_preset(4, "MLS vs spline, rho_l = 5e-6")
def _rarefied_reconstruction():
    base = _sod(5e-6, 0.02, 0.17, n_x=200)
    return base, {"mls": {"reconstruction": "mls"}, "spline": {"reconstruction": "spline"}}


@register_preset(5, "MLS vs spline at rho_l = 1e-5 (N_x = 400) and 1e-4 (N_x = 800)")
def _transitional_reconstruction():
    cases = {
        "rho1e-05": _sod(1e-5, 0.01, 0.08, n_x=400),
        "rho1e-04": _sod(1e-4, 0.001, 0.008, n_x=800),
    }
    variants = {}
    for tag, case in cases.items():
        for method in ("mls", "spline"):
            variants[f"{tag}_{method}"] = {**case, "reconstruction": method}
    return {}, variants


# Small tau develops shocks, where the upwind stencil is needed
_FLUID_LIMIT = _sod(1.0, 1e-7, 8e-7, n_x=800, upwind_stencil=True, emit_reference=True)


@register_preset(6, "Fluid limit vs exact Euler solution, rho = 1 / 0.125, N_x = 800")
def _fluid_limit():
    return dict(_FLUID_LIMIT), {"mls": {"reconstruction": "mls"}, "spline": {"reconstruction": "spline"}}


@register_preset(7, "Continuous vs discrete Maxwellian on coarse velocity grids")
def _discrete_maxwellian():
    return dict(_FLUID_LIMIT), {
        "continuous_nv20": {"maxwellian_mode": "continuous", "n_v": 20},
        "continuous_nv13": {"maxwellian_mode": "continuous", "n_v": 13},
        "discrete_nv13": {"maxwellian_mode": "discrete", "n_v": 13},
    }
