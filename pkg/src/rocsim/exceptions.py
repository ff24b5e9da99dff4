"""Exception hierarchy for invalid inputs and solver failures."""


class RocsimError(Exception):
    """Base class for all library-specific errors."""


class InvalidInputError(RocsimError, ValueError):
    """Malformed argument: bad shape, wrong range, wrong arity."""


class DimensionMismatchError(InvalidInputError):
    """Vector or matrix dimensions incompatible with the model."""


class EmptySampleError(InvalidInputError):
    """Operation requires a sample with at least two points."""


class NoPositivePairsError(InvalidInputError):
    """No pair of observations shares a label."""


class NoNegativePairsError(InvalidInputError):
    """All observations carry the same label."""


class EmptyClassError(InvalidInputError):
    """A class required for tuple sampling has no member."""


class ParameterDomainError(InvalidInputError):
    """Parameters fall outside the validity region of the construction."""


class InfeasibleProblemError(RocsimError):
    """The constrained problem admits no feasible point."""


class NumericalFailureError(RocsimError):
    """A numerical routine could not reach its target accuracy."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IdxFormatError(RocsimError, ValueError):
    """IDX file violates the binary format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
