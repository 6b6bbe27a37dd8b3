"""Kerr-cat oscillator simulator: spectrum, open-system dynamics, protocols and fits."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    FitError,
    KerrCatError,
    PhysicsError,
)

__all__ = ["ConfigError", "FitError", "KerrCatError", "PhysicsError", "__version__"]
