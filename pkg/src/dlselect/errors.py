"""Exception hierarchy.

Errors deriving from :class:`NumericalError` signal a numerical failure
(the CLI maps them to exit code 2); everything else is a usage or input
problem.
"""


class DLSelectError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DLSelectError, ValueError):
    pass


class ZeroVarianceColumn(DLSelectError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance")


class IndexOutOfRange(DLSelectError, IndexError):
    pass


class InvalidSpec(DLSelectError, ValueError):
    pass


class CSVFormatError(DLSelectError, ValueError):
    pass


class NonPositiveLambda(DLSelectError, ValueError):
    pass


class DegenerateLambda(DLSelectError, ValueError):
    pass


class EmptySupport(DLSelectError, ValueError):
    pass


class EmptySelection(DLSelectError, ValueError):
    pass


class EmptyTruth(DLSelectError, ValueError):
    pass


class EmptySequence(DLSelectError, ValueError):
    pass


class AsymmetricInput(DLSelectError, ValueError):
    pass


class CombinatorialBlowup(DLSelectError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"more than {cap} candidate submatrices; raise the cap explicitly")


class SingularC11(DLSelectError):
    """The active block of the covariance is not invertible; use the PIC check."""

    def __init__(self, cond):
        self.cond = cond
        super().__init__(f"active covariance block is singular (condition number {cond:.3g})")


class NumericalError(DLSelectError):
    pass


class NotConverged(NumericalError):
    def __init__(self, fit, max_sweeps, lam=None):
        self.fit = fit
        self.max_sweeps = max_sweeps
        self.kkt_residual = fit.kkt_residual
        self.lam = fit.lam if lam is None else lam
        super().__init__(
            f"coordinate descent did not converge in {max_sweeps} sweeps at "
            f"lambda={self.lam:.6g} (kkt residual {self.kkt_residual:.3g})"
        )


class InfeasibleDual(NumericalError):
    pass


class NotPSD(NumericalError):
    pass
