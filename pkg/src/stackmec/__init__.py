"""Stackelberg pricing and UAV-MEC task offloading simulator."""

from stackmec.errors import (
    ConfigurationError,
    DegenerateEconomicsError,
    DomainError,
    InfeasibleError,
    RebalanceError,
    SchemaError,
    StackmecError,
    StructuralError,
    ValidationError,
)
from stackmec.scenario import (
    ChannelConstants,
    GenerationConfig,
    Scenario,
    UavProfile,
    UeProfile,
    generate,
    load,
    save,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelConstants",
    "ConfigurationError",
    "DegenerateEconomicsError",
    "DomainError",
    "GenerationConfig",
    "InfeasibleError",
    "RebalanceError",
    "Scenario",
    "SchemaError",
    "StackmecError",
    "StructuralError",
    "UavProfile",
    "UeProfile",
    "ValidationError",
    "generate",
    "load",
    "save",
]
