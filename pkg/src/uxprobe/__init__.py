"""Simulated usability testing platform.

Persona-conditioned agents traverse a website, their traces are annotated
into cognitive-intent tags and usability issues, findings are aggregated by
goal/trait/severity, and interface fixes are applied as DOM patches whose
effect is verified by replaying the critical step.
"""

from uxprobe.errors import (
    ConfigurationError,
    DecisionParseError,
    EnvironmentError_,
    GatewayError,
    IntegrityError,
    PatchError,
    SelectorError,
    UXProbeError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DecisionParseError",
    "EnvironmentError_",
    "GatewayError",
    "IntegrityError",
    "PatchError",
    "SelectorError",
    "UXProbeError",
    "__version__",
]
