class SpecTNTError(Exception):
    """Base class for every error raised by spectnt."""


class DimensionError(SpecTNTError, ValueError):
    """Tensor shapes violate an operation's contract."""


class ConfigError(SpecTNTError, ValueError):
    """A model, run or feature configuration is invalid."""


class ContractError(SpecTNTError, ValueError):
    """A pre-condition of an operation does not hold."""


class UndefinedMetricError(SpecTNTError, ValueError):
    """A metric is undefined for the given input (e.g. a single class)."""


class FileFormatError(SpecTNTError):
    """A binary or audio file could not be parsed."""

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class CheckpointError(SpecTNTError):
    """Checkpoint tensors do not match the model they are loaded into."""

    def __init__(self, message: str, offenders: list[str] | None = None) -> None:
        self.offenders = offenders or []
        if self.offenders:
            message = f"{message}: {', '.join(self.offenders)}"
        super().__init__(message)


class NonFiniteError(SpecTNTError, FloatingPointError):
    """A loss or gradient contains NaN or inf."""

    def __init__(self, message: str, name: str | None = None) -> None:
        self.name = name
        super().__init__(message)


class TrainingDivergedError(SpecTNTError):
    """Training produced a non-finite loss; the last good state was restored."""
