"""SpecTNT: a spectral Transformer inside a temporal Transformer, built on a small numpy autograd."""

from spectnt.errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DimensionError,
    FileFormatError,
    NonFiniteError,
    SpecTNTError,
    TrainingDivergedError,
    UndefinedMetricError,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "FileFormatError",
    "NonFiniteError",
    "SpecTNTError",
    "TrainingDivergedError",
    "UndefinedMetricError",
    "__version__",
]
