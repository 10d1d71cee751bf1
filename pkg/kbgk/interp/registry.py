"""Registry of reconstruction back-ends; modules register their classes on import."""

from typing import Any, Dict, List, Type
import logging

from ..core import PhysicalGrid
from ..errors import ConfigError
from .base import BaseReconstructor

logger = logging.getLogger(__name__)


class ReconstructorRegistry:
    """Registry for managing reconstruction back-ends."""

    def __init__(self):
        self._reconstructors: Dict[str, Type[BaseReconstructor]] = {}

    def register(self, reconstructor_class: Type[BaseReconstructor]) -> None:
        """Register a reconstructor class."""
        if not reconstructor_class.method_id:
            raise ValueError(f"Reconstructor {reconstructor_class.__name__} must have method_id")

        if reconstructor_class.method_id in self._reconstructors:
            logger.warning(f"Overwriting existing reconstructor for {reconstructor_class.method_id}")

        self._reconstructors[reconstructor_class.method_id] = reconstructor_class
        logger.debug(f"Registered reconstructor: {reconstructor_class.method_id}")

    def get_reconstructor(self, method_id: str, grid: PhysicalGrid,
                          config: Dict[str, Any] = None) -> BaseReconstructor:
        """Get a reconstructor instance by method ID."""
        if method_id not in self._reconstructors:
            raise ConfigError(
                f"no reconstructor registered for '{method_id}' (known: {self.list_methods()})",
                key="reconstruction",
            )
        return self._reconstructors[method_id](grid, config)

    def list_methods(self) -> List[str]:
        """List all registered method IDs."""
        return sorted(self._reconstructors.keys())


# Global registry instance
_registry = ReconstructorRegistry()


def register_reconstructor(reconstructor_class: Type[BaseReconstructor]) -> Type[BaseReconstructor]:
    """Decorator to register a reconstructor class."""
    _registry.register(reconstructor_class)
    return reconstructor_class


def get_registry() -> ReconstructorRegistry:
    """Get the global registry instance."""
    return _registry
