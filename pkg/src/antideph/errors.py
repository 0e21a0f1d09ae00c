"""Exception hierarchy."""


class AntidephError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(AntidephError):
    """Operands have incompatible dimensions."""


class NonHermitianError(AntidephError):
    """An operator required to be Hermitian is not."""


class NotPositiveSemidefiniteError(AntidephError):
    """An operator required to be positive semidefinite has a negative eigenvalue."""


class EigenConvergenceError(AntidephError):
    """The dense eigensolver failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NearDefectiveError(AntidephError):
    """Eigenvector matrix is too ill-conditioned to trust the spectral decomposition."""


class DegeneratePairingError(AntidephError):
    """A left/right eigenoperator pairing is numerically zero."""


class NoUniqueSteadyStateError(AntidephError):
    """The dominant eigenvalue is complex or degenerate."""


class InstabilityError(AntidephError):
    """A numerical integration blew up or produced non-finite values."""


class UnphysicalStateError(AntidephError):
    """A state violates positivity, trace, or finiteness requirements."""


class ConfigError(AntidephError):
    """Invalid run configuration."""
