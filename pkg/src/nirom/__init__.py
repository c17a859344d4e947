"""Adaptive randomized DMD with thin-plate RBF interpolation for non-intrusive ROMs."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NiromError, NumericalError  # noqa: F401
