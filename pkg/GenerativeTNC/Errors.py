"""
Exception hierarchy for GenerativeTNC.

Every domain error is a ValueError so callers that only guard against bad input
keep working; the subclasses let the CLI and tests tell failures apart.
"""

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from GenerativeTNC.Training.TrainConfig import TrainReport


class GtncError(ValueError):
    """Base class of all GenerativeTNC errors."""


class DimensionError(GtncError):
    pass


class ArgumentError(GtncError):
    pass


class PixelDomainError(GtncError):
    pass


class FormatError(GtncError):
    pass


class ChecksumError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class ConsistencyError(GtncError):
    pass


class TruncatedFileError(GtncError, OSError):
    pass


class DegenerateStateError(GtncError):
    pass


class NonFiniteError(GtncError):
    pass


class GradientSingularityError(GtncError):
    def __init__(self, sample_index: int, site: int) -> None:
        super().__init__(
            f"Sample {sample_index} has zero amplitude at site {site}; "
            "the log-likelihood gradient is singular"
        )
        self.sample_index = sample_index
        self.site = site


class TrainingFailureError(GtncError):
    def __init__(
        self,
        message: str,
        report: Optional["TrainReport"] = None,
        class_label: Optional[int] = None,
    ) -> None:
        if class_label is not None:
            message = f"class {class_label}: {message}"
        super().__init__(message)
        self.report = report
        self.class_label = class_label
