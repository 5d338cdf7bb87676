"""Exception types.

Two families matter to callers: :class:`ValidationError` for bad input or
configuration (CLI exit status 2) and :class:`NumericalGuardError` for a
numerical safeguard that tripped (CLI exit status 3).
"""


class DiskHarmonicsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DiskHarmonicsError, ValueError):
    """Input or configuration is ill-formed."""


class UnsupportedOrderError(ValidationError):
    """Bessel order beyond the configured maximum."""


class DomainError(ValidationError):
    """Evaluation point outside the disk."""


class ShapeError(ValidationError):
    """Grids or tables that must match do not."""


class AliasingError(ValidationError):
    """Lattice cutoff too large for the sampling grid."""


class NumericalGuardError(DiskHarmonicsError, ArithmeticError):
    """A numerical safeguard refused to produce a result."""


class RootScanError(NumericalGuardError):
    """Root scan ran past its safety interval without bracketing enough roots."""


class NearSingularWeightError(NumericalGuardError):
    """Lattice frequency sits on (or numerically at) a basis eigenvalue."""

    def __init__(self, n, m, k, gap):
        self.n, self.m, self.k, self.gap = n, m, tuple(k), gap
        super().__init__(
            f"near-singular spectral weight at (n={n}, m={m}, k={self.k}): "
            f"|pi^2 |k|^2 - z^2| = {gap:.3e}"
        )


class SupportError(NumericalGuardError):
    """Function carries mass outside its declared support radius."""


class ConsistencyError(NumericalGuardError):
    """An internal identity that must hold was violated."""
