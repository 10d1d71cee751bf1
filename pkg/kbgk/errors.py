"""Exception types raised across the kbgk package."""

from typing import Optional


class KBGKError(Exception):
    """Base class for all solver errors."""


class ConfigError(KBGKError, ValueError):
    """Invalid configuration value; ``key`` names the offending config key."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"config key '{key}': {message}"
        super().__init__(message)


class GridOrderingError(KBGKError, ValueError):
    """Physical grid points are not strictly increasing."""


class OutOfDomainError(KBGKError, ValueError):
    """A query point lies outside the range a reconstructor can serve."""


class StencilStarvationError(KBGKError, ValueError):
    """Fewer than two admissible neighbors inside the search radius."""


class DegenerateStencilError(KBGKError, ValueError):
    """All non-anchor neighbors coincide with the anchor."""


class NegativeInternalEnergyError(KBGKError, ValueError):
    """Moments imply nonpositive density or temperature."""

    def __init__(self, message: str, point_index: Optional[int] = None):
        self.point_index = point_index
        super().__init__(message)

    def __reduce__(self):
        return (type(self), (self.args[0], self.point_index))


class DivergenceError(KBGKError, FloatingPointError):
    """Exponent of the discrete Maxwellian left the representable range."""


class LineSearchError(KBGKError, RuntimeError):
    """Backtracking found no admissible step length."""


class DiscreteMaxwellianError(KBGKError, RuntimeError):
    """Newton iteration for the discrete Maxwellian did not converge."""

    def __init__(self, message: str, residual_norm: float, iterations: int):
        self.residual_norm = residual_norm
        self.message = message
        self.iterations = iterations
        super().__init__(f"{message} (iterations={iterations}, residual={residual_norm:.3e})")

    def __reduce__(self):
        return (type(self), (self.message, self.residual_norm, self.iterations))


class VacuumError(KBGKError, ValueError):
    """Riemann data would generate vacuum."""


class SolverAbort(KBGKError, RuntimeError):
    """A time step failed; records where the failure happened."""

    def __init__(self, cause: Exception, step_index: int, t: float, point_index: Optional[int] = None):
        self.cause = cause
        self.step_index = step_index
        self.t = t
        self.point_index = point_index
        where = f"step {step_index} (t={t:.6g})"
        if point_index is not None:
            where += f", point {point_index}"
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")

    def __reduce__(self):
        return (type(self), (self.cause, self.step_index, self.t, self.point_index))
