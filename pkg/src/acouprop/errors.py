"""Exception hierarchy shared by all acouprop modules."""


class AcoupropError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(AcoupropError, ValueError):
    """An argument violates a documented precondition."""


class GridMismatchError(InvalidInputError):
    """Two frequency-domain objects do not share the same frequency grid."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but carries no usable information
    (e.g. every frequency bin masked, or a geometrically degenerate
    anchor set)."""


class ManifestError(InvalidInputError):
    """A dataset manifest file is malformed."""


class MissingFileError(AcoupropError, FileNotFoundError):
    """A file referenced by a manifest or CLI argument does not exist."""


class OverflowRangeError(AcoupropError, OverflowError):
    """An exponential factor left the representable floating-point range."""


class TrainingDivergedError(AcoupropError):
    """Neural training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"loss became non-finite at epoch {epoch}")


class NoFixError(AcoupropError):
    """Position solver failed to converge; carries the best residual seen."""

    def __init__(self, best_residual: float, message: str | None = None):
        self.best_residual = best_residual
        super().__init__(
            message or f"no position fix found (best residual {best_residual:.6g})"
        )
