"""Exception types raised by the library.

All errors derive from :class:`SemiclassicalError` so callers (the CLI in
particular) can separate numerical invariant failures from bad input.
"""

from __future__ import annotations


class SemiclassicalError(Exception):
    """Base class for all library errors."""


class NotLagrangian(SemiclassicalError):
    """The symplectic form does not vanish on the proposed subspace."""


class NotTransverse(SemiclassicalError):
    """Two subspaces that should be complementary intersect."""


class DegenerateForm(SemiclassicalError):
    """A bilinear form that must be nondegenerate is singular."""


class GridMismatch(SemiclassicalError):
    """Two sampled objects live on incompatible grids."""


class SingularMap(SemiclassicalError):
    """A linear map that must be invertible is (numerically) singular."""


class CapExceeded(SemiclassicalError):
    """A grid or dense matrix would exceed its configured size cap."""


class DimMismatch(SemiclassicalError):
    """Spaces of different dimension were combined."""


class DegreeTooHigh(SemiclassicalError):
    """A Taylor degree beyond the resolvable range was requested."""


class DegreeZero(SemiclassicalError):
    """An interior product was applied to a constant polynomial."""


class OrderTooLow(SemiclassicalError):
    """The weight order is too small for the requested Taylor truncation."""


class EigenFailure(SemiclassicalError):
    """The dense eigen-solver failed or returned non-finite values."""


class NotDiagonalizable(SemiclassicalError):
    """The map is numerically non-diagonalizable."""
