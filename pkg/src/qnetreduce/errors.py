"""Exception types shared across the package."""


class QnetReduceError(Exception):
    """Base class for all library errors."""


class UnknownBlockLabelError(QnetReduceError, KeyError):
    """A block label is not present in the partition."""


class SingularPivotError(QnetReduceError):
    """A Schur pivot failed the invertibility policy.

    Carries the estimated condition number and, for staged computations,
    the name of the stage whose pivot failed.
    """

    def __init__(self, message: str, cond: float | None = None, stage: str | None = None):
        super().__init__(message)
        self.cond = cond
        self.stage = stage


class IllDefinedComplementError(QnetReduceError):
    """Generalized Schur complement rejected: an inclusion condition failed.

    ``which`` names the failed inclusion ("image" or "kernel").
    """

    def __init__(self, message: str, which: str | None = None, residual: float | None = None):
        super().__init__(message)
        self.which = which
        self.residual = residual


class HpValidationError(QnetReduceError):
    """A generator violates the Hudson-Parthasarathy identities."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class StructureError(QnetReduceError):
    """A scaled family violates its structural conditions."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class FastDecouplingError(StructureError):
    """The limit dynamics would leak into the fast subspace."""


class KernelConditionError(StructureError):
    """The feedback-dressed fast block is not confined and invertible."""


class IllPosedNetworkError(QnetReduceError):
    """The internal scattering loop is singular (N_ii - I not invertible)."""

    def __init__(self, message: str, cond: float | None = None):
        super().__init__(message)
        self.cond = cond


class PathMismatchError(QnetReduceError):
    """Two algebraically equivalent computation paths disagreed numerically."""

    def __init__(self, message: str, deviation: float | None = None):
        super().__init__(message)
        self.deviation = deviation


class PropagationAccuracyError(QnetReduceError):
    """Propagated state drifted beyond the accuracy contract."""


class DimensionCapError(QnetReduceError):
    """Composite system would exceed the configured dense-size cap."""


class SpecFormatError(QnetReduceError):
    """A network spec file is malformed."""
