"""Explicit complex-valued modReLU networks and their error verification."""

from .network_core import (
    AffineLayer,
    ArchitectureStats,
    DepthMismatchError,
    DimensionError,
    IdentityChain,
    ModReLUNetwork,
    ParameterError,
    compose,
    evaluate,
    identity_chain,
    identity_network,
    linear_network,
    modrelu,
    pad_depth,
    parallel,
    stats,
)
from .serialization import ParseError, deserialize, load, save, serialize
from .structured import (
    Parallel,
    Serial,
    StructuredNet,
    WeightedSum,
    architecture_signature,
    flatten,
    pad_structured,
    weighted_sum,
)

__all__ = [
    "AffineLayer",
    "ArchitectureStats",
    "DepthMismatchError",
    "DimensionError",
    "IdentityChain",
    "ModReLUNetwork",
    "Parallel",
    "ParameterError",
    "ParseError",
    "Serial",
    "StructuredNet",
    "WeightedSum",
    "architecture_signature",
    "compose",
    "deserialize",
    "evaluate",
    "flatten",
    "identity_chain",
    "identity_network",
    "linear_network",
    "load",
    "modrelu",
    "pad_depth",
    "pad_structured",
    "parallel",
    "save",
    "serialize",
    "stats",
    "weighted_sum",
]

__version__ = "0.1.0"
