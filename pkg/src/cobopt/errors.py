"""Exception types shared across the package."""


class CoboptError(Exception):
    """Base class for all package-specific errors."""


class EmptyDataset(CoboptError):
    """A model fit was requested on a dataset with no rows."""


class SingularGram(CoboptError):
    """Cholesky factorization failed even after jitter escalation."""


class DegenerateKernel(CoboptError):
    """Every restart of a determinant-maximizing design ended rank deficient."""


class MissingEnsemble(CoboptError):
    """A fantasy-averaged acquisition was evaluated without an ensemble."""


class MissingTruth(CoboptError):
    """A truth-dependent chooser policy was invoked without true values."""


class IllegalPhase(CoboptError):
    """A session operation was attempted in the wrong phase."""


class IndexOutOfRange(CoboptError):
    """A chosen candidate index is outside the pending alternative set."""


class NonFiniteObservation(CoboptError):
    """An observation was NaN or infinite."""


class LengthMismatch(CoboptError):
    """Traces of unequal length cannot be aggregated pointwise."""
