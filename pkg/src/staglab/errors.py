"""Exception hierarchy for staglab."""


class StaglabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(StaglabError, ValueError):
    """Raised when array shapes do not fit together."""


class NotHessenbergError(StaglabError, ValueError):
    """Raised when a matrix expected to be upper Hessenberg has fill below
    the first subdiagonal."""


class SingularTriangularError(StaglabError, ArithmeticError):
    """Raised by back substitution on a zero or sub-threshold pivot."""


class DegeneratePencilError(StaglabError, ArithmeticError):
    """Raised when ``det(beta*A - alpha*B)`` vanishes identically."""


class ZeroRhsError(StaglabError, ValueError):
    """Raised when the right-hand side of a solve is the zero vector."""


class ExhaustedSpaceError(StaglabError, RuntimeError):
    """Raised when Arnoldi is stepped past the operator dimension or after
    breakdown."""


class InfinitePairError(StaglabError, ValueError):
    """Raised when a finite harmonic Ritz pair is required but an infinite
    one was passed."""


class ConditioningError(StaglabError, ArithmeticError):
    """Raised when the Krylov power basis is too ill conditioned for the
    residual polynomial oracle.

    This signals that the oracle is unavailable, not that the solver failed.
    """


class PreconditionViolated(StaglabError, ArithmeticError):
    """Raised when a theorem check is requested outside the hypotheses of
    the theorem (for instance dependent columns of ``A V_m``)."""


class InconsistentStateError(StaglabError, RuntimeError):
    """Raised when indicator values contradict each other, e.g. a vanishing
    last entry of ``y`` on a step not flagged as stagnated."""


class GeneratorFailure(StaglabError, RuntimeError):
    """Raised when a problem generator cannot produce a valid instance
    within its reseed budget."""


class MatrixMarketError(StaglabError, ValueError):
    """Raised on malformed Matrix Market input.

    Attributes
    ----------
    line : int or None
        1-based line number where parsing failed.
    """

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line
