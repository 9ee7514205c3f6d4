"""Exception hierarchy. The CLI maps each family to one exit code."""

from typing import Optional


class FusionError(Exception):
    """Base class for every error raised by fusion_tools."""


class InputError(FusionError):
    """Unreadable, missing or malformed input files, unwritable outputs."""


class WeightFormatError(InputError):
    """A weight file that does not match the expected layout or schema."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(FusionError):
    """Invalid configuration values, files or flags."""


class ShapeError(FusionError, ValueError):
    """Tensor shapes that violate an operation's preconditions."""


class NumericError(FusionError):
    """Non-finite values or numerically inconsistent results."""


class SymmetryError(NumericError):
    """Inverse transform of a spectrum that is not conjugate symmetric."""


class EvaluationError(NumericError):
    """A scalar objective returned a non-finite value."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss; carries the partial trajectory.

    A resolution sweep also attaches the (resolution, mean alpha) rows that
    finished before the diverging resolution as `results`.
    """

    def __init__(self, message: str, trajectory=None, results=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.results = list(results or [])
