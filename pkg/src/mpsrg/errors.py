"""Exception types shared across the package.

Two broad families matter for callers: `ValidationError` (bad or
inconsistent input, CLI exit code 2) and `NumericalFailure` (a solver or
decomposition broke down, CLI exit code 3).
"""

from __future__ import annotations


class MpsrgError(Exception):
    """Base class for all package errors."""


class ValidationError(MpsrgError):
    """Input violates a documented precondition or format."""


class NumericalFailure(MpsrgError):
    """An eigensolver, SVD, or related numerical routine failed."""


class NonSquareBond(ValidationError):
    """Operation requires equal left and right bond dimensions."""


class ShapeMismatch(ValidationError):
    """Array or chain shapes are incompatible."""


class SizeOverflow(ValidationError):
    """Requested object exceeds the configured element budget."""


class NotNormal(ValidationError):
    """Tensor fails the normality test (degenerate leading eigenvalue or
    non-positive fixed point)."""


class IllConditioned(NumericalFailure):
    """A gauge or inverse is too ill-conditioned to apply reliably."""


class InjectivityImpossible(ValidationError):
    """Blocked physical dimension is too small to host the virtual pair space."""


class RankCollapse(NumericalFailure):
    """An SVD sweep step retained no singular values."""


class DimensionMismatch(ValidationError):
    """Register or embedding dimensions do not fit together."""


class NotDivisible(ValidationError):
    """Site count is not divisible by the blocking range."""


class UnsupportedScheme(ValidationError):
    """Unknown or unavailable circuit scheme."""


class NotPositive(ValidationError):
    """Matrix expected to be positive semidefinite is not."""


class BranchOverlap(ValidationError):
    """Branch pair states are not mutually orthogonal."""


class IndexOutOfRange(ValidationError, IndexError):
    """Bond or site index outside the valid range."""


class TooLarge(ValidationError):
    """Dense simulation would exceed the configured Hilbert-space cap."""


class AncillaNotZero(MpsrgError):
    """A gate expected ancilla registers in the zero state but found support
    elsewhere; signals a mis-assembled circuit."""
