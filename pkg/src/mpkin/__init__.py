"""Runtime-configured multi-phase atmospheric chemistry solver."""

from mpkin.config import (
    ConfigError,
    Diagnostic,
    MechanismConfig,
    dump_config,
    load_config,
    parse_config,
    validate,
)
from mpkin.core import Core, RateHandle, deserialize_core, serialize_core
from mpkin.layout import EnvironmentalState, StateLayout, build_layout
from mpkin.solver import SolverOptions, SolveStats

__all__ = [
    "ConfigError",
    "Core",
    "Diagnostic",
    "EnvironmentalState",
    "MechanismConfig",
    "RateHandle",
    "SolveStats",
    "SolverOptions",
    "StateLayout",
    "build_layout",
    "deserialize_core",
    "dump_config",
    "load_config",
    "parse_config",
    "serialize_core",
    "validate",
]

__version__ = "0.1.0"
