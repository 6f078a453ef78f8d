"""Exception taxonomy shared by all modules.

The split matters for the CLI: DomainError/DegenerateGapError map to the
configuration exit code, NumericError to the numeric-failure exit code.
"""


class PsiApproxError(Exception):
    """Base class for every library-raised error."""


class DomainError(PsiApproxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateGapError(DomainError):
    """floor(eta(n)) == n, so the taper denominator would be zero."""


class CapabilityError(PsiApproxError):
    """A generator function lacks an optional capability (e.g. derivative)."""


class NumericError(PsiApproxError, ArithmeticError):
    """An iteration failed to converge or a computed value is unusable."""


class InvalidPsiError(NumericError):
    """Sampled values contradict the required shape (positive, decreasing,
    convex, vanishing at infinity) badly enough that results are meaningless."""
