"""
Run configuration: flat JSON files resolved against defaults and presets.

Precedence, lowest first: built-in defaults, preset base, preset variant,
keys given by the user (file or command line).
"""

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Union

from .boundary import WallSpec
from .constants import (
    BOLTZMANN_CONSTANT,
    DMAX_MAX_ITER,
    DMAX_RTOL,
    GAMMA_MONOATOMIC,
    GAS_CONSTANT_ARGON,
    MLS_ALPHA,
    MLS_RADIUS_FACTOR,
    MOLECULE_DIAMETER_ARGON,
)
from .core import GasConstants, SolverConfig
from .errors import ConfigError, NegativeInternalEnergyError
from .moments import MacroState

logger = logging.getLogger(__name__)

# Base configuration of the shock-tube study; rho_right = rho_left / 8
DEFAULTS: Dict[str, Any] = {
    "cfl": 1.0,
    "t_final": 0.17,
    "n_x": 200,
    "n_v": 20,
    "v_max": 10.0,
    "a": 0.0,
    "b": 1.0,
    "diaphragm": 0.5,
    "rho_left": 1e-4,
    "rho_right": 1.25e-5,
    "e_left": 2.5,
    "e_right": 2.0,
    "u_left": 0.0,
    "u_right": 0.0,
    "lambda_left": None,
    "lambda_right": None,
    "tau_mode": "constant",
    "reconstruction": "mls",
    "maxwellian_mode": "continuous",
    "mls_alpha": MLS_ALPHA,
    "mls_radius_factor": MLS_RADIUS_FACTOR,
    "upwind_stencil": False,
    "irregular_grid": False,
    "rng_seed": 0,
    "wall_left_e": 2.5,
    "wall_right_e": 2.0,
    "wall_left_velocity": (0.0, 0.0, 0.0),
    "wall_right_velocity": (0.0, 0.0, 0.0),
    "gas_constant": GAS_CONSTANT_ARGON,
    "molecule_diameter": MOLECULE_DIAMETER_ARGON,
    "boltzmann_constant": BOLTZMANN_CONSTANT,
    "gamma": GAMMA_MONOATOMIC,
    "preset": None,
    "output_dir": "results",
    "emit_reference": False,
    "progress": False,
    "dmax_rtol": DMAX_RTOL,
    "dmax_max_iter": DMAX_MAX_ITER,
}

_INT_KEYS = {"n_x", "n_v", "rng_seed", "dmax_max_iter"}
_BOOL_KEYS = {"upwind_stencil", "irregular_grid", "emit_reference", "progress"}
_STR_KEYS = {"tau_mode", "reconstruction", "maxwellian_mode", "output_dir"}
_OPTIONAL_FLOAT_KEYS = {"lambda_left", "lambda_right"}
_VECTOR_KEYS = {"wall_left_velocity", "wall_right_velocity"}


def _coerce(key: str, value: Any) -> Any:
    """Check the JSON type of one value and convert it to the field type."""
    if key == "preset":
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected a preset number, got {value!r}", key=key)
        return value
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key=key)
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", key=key)
        return int(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key=key)
        return value
    if key in _VECTOR_KEYS:
        if (not isinstance(value, (list, tuple)) or len(value) != 3 or
                any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value)):
            raise ConfigError(f"expected a list of three numbers, got {value!r}", key=key)
        return tuple(float(c) for c in value)
    if key in _OPTIONAL_FLOAT_KEYS and value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run (or of a preset before expansion)."""

    cfl: float
    t_final: float
    n_x: int
    n_v: int
    v_max: float
    a: float
    b: float
    diaphragm: float
    rho_left: float
    rho_right: float
    e_left: float
    e_right: float
    u_left: float
    u_right: float
    lambda_left: Optional[float]
    lambda_right: Optional[float]
    tau_mode: str
    reconstruction: str
    maxwellian_mode: str
    mls_alpha: float
    mls_radius_factor: float
    upwind_stencil: bool
    irregular_grid: bool
    rng_seed: int
    wall_left_e: float
    wall_right_e: float
    wall_left_velocity: tuple
    wall_right_velocity: tuple
    gas_constant: float
    molecule_diameter: float
    boltzmann_constant: float
    gamma: float
    preset: Optional[int]
    output_dir: str
    emit_reference: bool
    progress: bool
    dmax_rtol: float
    dmax_max_iter: int
    user_keys: FrozenSet[str] = field(default_factory=frozenset)
    variant: Optional[str] = None

    @classmethod
    def from_values(cls, values: Mapping[str, Any], user_keys=frozenset(),
                    variant: Optional[str] = None) -> "RunConfig":
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError("unknown key", key=key)
        resolved = {key: _coerce(key, values.get(key, default)) for key, default in DEFAULTS.items()}
        return cls(**resolved, user_keys=frozenset(user_keys), variant=variant)

    def values(self) -> Dict[str, Any]:
        """Flat key/value view without bookkeeping fields."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in DEFAULTS}

    def user_values(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in self.user_keys}

    @property
    def gas(self) -> GasConstants:
        return GasConstants(R=self.gas_constant, d=self.molecule_diameter, k_B=self.boltzmann_constant)

    @property
    def run_name(self) -> str:
        """<preset>_<reconstruction>_<maxwellian>_<Nv>[_<variant>]."""
        label = f"test{self.preset}" if self.preset is not None else "custom"
        name = f"{label}_{self.reconstruction}_{self.maxwellian_mode}_{self.n_v}"
        return f"{name}_{self.variant}" if self.variant else name

    def _state(self, side: str) -> MacroState:
        rho, e, u = getattr(self, f"rho_{side}"), getattr(self, f"e_{side}"), getattr(self, f"u_{side}")
        if not rho > 0:
            raise ConfigError(f"must be > 0, got {rho}", key=f"rho_{side}")
        if not e > 0:
            raise ConfigError(f"must be > 0, got {e}", key=f"e_{side}")
        try:
            return MacroState.from_internal_energy(rho, (u, 0.0, 0.0), e, self.gas_constant)
        except NegativeInternalEnergyError as err:
            raise ConfigError(str(err), key=f"e_{side}") from err

    def solver_config(self) -> SolverConfig:
        """SolverConfig of this run; raises ConfigError naming the offending key."""
        gas = self.gas
        if not self.gamma > 1:
            raise ConfigError(f"must be > 1, got {self.gamma}", key="gamma")
        for key in ("wall_left_e", "wall_right_e"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"must be > 0, got {getattr(self, key)}", key=key)

        walls = (
            WallSpec.from_internal_energy("left", self.wall_left_e, gas.R, self.wall_left_velocity),
            WallSpec.from_internal_energy("right", self.wall_right_e, gas.R, self.wall_right_velocity),
        )
        return SolverConfig(
            left=self._state("left"),
            right=self._state("right"),
            walls=walls,
            gas=gas,
            cfl=self.cfl,
            t_final=self.t_final,
            n_x=self.n_x,
            n_v=self.n_v,
            v_max=self.v_max,
            a=self.a,
            b=self.b,
            diaphragm=self.diaphragm,
            lambda_left=self.lambda_left,
            lambda_right=self.lambda_right,
            tau_mode=self.tau_mode,
            reconstruction=self.reconstruction,
            maxwellian_mode=self.maxwellian_mode,
            mls_alpha=self.mls_alpha,
            mls_radius_factor=self.mls_radius_factor,
            upwind_stencil=self.upwind_stencil,
            irregular_grid=self.irregular_grid,
            rng_seed=self.rng_seed,
            dmax_rtol=self.dmax_rtol,
            dmax_max_iter=self.dmax_max_iter,
            progress=self.progress,
        ).validate()

    def validate(self) -> "RunConfig":
        from .interp import get_registry

        if self.reconstruction not in get_registry().list_methods():
            raise ConfigError(f"expected one of {get_registry().list_methods()}, got '{self.reconstruction}'",
                              key="reconstruction")
        self.solver_config()
        return self


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat JSON object; an empty file means no keys."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if not text.strip():
        return {}
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object, got {type(raw).__name__}")
    return raw


def resolve(user: Mapping[str, Any], variant: Optional[str] = None) -> RunConfig:
    """Merge defaults, preset base, the named preset variant and user keys."""
    from .presets import get_preset

    unknown = set(user) - set(DEFAULTS)
    if unknown:
        raise ConfigError("unknown key", key=sorted(unknown)[0])

    values = dict(DEFAULTS)
    preset_number = _coerce("preset", user.get("preset"))
    if preset_number is not None:
        preset = get_preset(preset_number)
        values.update(preset.base)
        if variant is not None:
            values.update(preset.variants[variant])
    values.update(user)
    return RunConfig.from_values(values, user_keys=set(user), variant=variant)


def parse_config(source: Union[str, Path, Mapping[str, Any], None] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Resolve a config file (or an already-loaded mapping) plus command-line overrides.

    Overrides whose value is None are ignored. The returned config is validated;
    for a preset it carries the preset base values, and expand_runs produces the
    individual runs.
    """
    if source is None:
        raw: Dict[str, Any] = {}
    elif isinstance(source, Mapping):
        raw = dict(source)
    else:
        raw = load_config_file(source)
    raw.update({key: value for key, value in (overrides or {}).items() if value is not None})

    config = resolve(raw).validate()
    logger.debug(f"Resolved config: {config.values()}")
    return config


def expand_runs(config: RunConfig) -> List[RunConfig]:
    """Individual runs of a config: one per preset variant, or the config itself."""
    from .presets import get_preset

    if config.preset is None:
        return [config]
    preset = get_preset(config.preset)
    runs = [resolve(config.user_values(), variant=name).validate() for name in preset.variants]
    return runs or [config]


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    """Copy of ``config`` with ``changes`` applied as user keys."""
    return RunConfig.from_values({**config.values(), **changes}, user_keys=config.user_keys | set(changes),
                                 variant=config.variant).validate()
