"""Exception types raised across the package."""


class ShadowkitError(Exception):
    """Base class for all errors raised by shadowkit."""


# --- simulator ---

class DimensionCap(ShadowkitError):
    """Hilbert-space dimension exceeds the configured cap."""


class BadTerm(ShadowkitError):
    """A local term is non-Hermitian, mis-sized, or placed on invalid sites."""


class ConvergenceFailure(ShadowkitError):
    """Iterative eigensolver did not converge."""


class UnsupportedLocalDim(ShadowkitError):
    """Operation requires qubits (local dimension 2)."""


class SubsystemTooLarge(ShadowkitError):
    """Requested subsystem exceeds the reduced-density-matrix size cap."""


# --- shadows ---

class EmptyShadow(ShadowkitError):
    """Shadow contains no snapshots."""


class MalformedHeader(ShadowkitError):
    """Shadow file header is invalid or inconsistent with the payload."""


class TruncatedPayload(ShadowkitError):
    """Shadow byte stream ends before the declared payload."""


# --- kernels ---

class CountCapExceeded(ShadowkitError):
    """Wavevector enumeration would exceed the configured count cap."""


class DimensionMismatch(ShadowkitError):
    """Kernel arguments have incompatible dimensions."""


class DegenerateData(ShadowkitError):
    """Data admits no meaningful kernel bandwidth (all points identical)."""


class ShapeMismatch(ShadowkitError):
    """Shadows have incompatible qubit or snapshot counts."""


class NeedTwoSnapshots(ShadowkitError):
    """Self-kernel with equal-snapshot exclusion needs at least two snapshots."""


class NonpositiveDiagonal(ShadowkitError):
    """Gram matrix cannot be standardized: nonpositive diagonal entry."""


# --- predictor ---

class FactorizationFailure(ShadowkitError):
    """Regularized Gram matrix is numerically singular."""


# --- classifier ---

class LengthMismatch(ShadowkitError):
    """Kernel row length does not match the training-set size."""


class DegenerateEmbedding(ShadowkitError):
    """All embedded points coincide; no split is possible."""


# --- observables ---

class ChainTooShort(ShadowkitError):
    """Order parameter requires a longer chain."""


class SameSite(ShadowkitError):
    """Two-point correlator needs two distinct sites."""


class NonAdjacent(ShadowkitError):
    """Reflection intervals must be adjacent and equal-length."""


class WrongLocalDim(ShadowkitError):
    """Operation requires a different local dimension."""


class IntervalOutOfRange(ShadowkitError):
    """Twist window does not fit on the chain."""


# --- cli ---

class ConfigError(ShadowkitError):
    """Experiment configuration is invalid."""


class IoError(ShadowkitError):
    """I/O failure with path context."""
