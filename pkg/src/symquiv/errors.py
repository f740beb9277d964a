"""Exception hierarchy shared by all symquiv modules."""


class SymquivError(Exception):
    """Base class for all library errors."""


class NotCartanError(SymquivError):
    """Matrix violates the Cartan conditions (diagonal 2, nonpositive off-diagonal)."""


class NotSymmetrizerError(SymquivError):
    """D*C is not symmetric."""


class NonPositiveSymmetrizerError(SymquivError):
    """Symmetrizer entries must be positive integers."""


class NotDynkinError(SymquivError):
    """Operation requires a Cartan matrix of Dynkin (finite) type."""


class NotOrientationError(SymquivError):
    """Invalid orientation (wrong edge set or oriented cycle)."""


class NotSinkOrSourceError(SymquivError):
    """Vertex is not a sink (resp. source) of the oriented quiver."""


class NotReducedError(SymquivError):
    """Word is not a reduced expression (its root sequence leaves the positive cone)."""


class ShapeMismatchError(SymquivError):
    """Matrix data of a module has inconsistent shapes."""


class SpecMismatchError(SymquivError):
    """Operands live over different algebra specifications."""


class NotLocallyFreeError(SymquivError):
    """Module is not locally free where the operation requires it."""


class InternalMismatchError(SymquivError):
    """Two independent computation routes disagree; indicates a bug, never expected."""


class TooLargeError(SymquivError):
    """Enumeration would exceed the configured budget."""


class InterpolationError(SymquivError):
    """Point counts do not fit a single integer polynomial within the degree bound."""


class PrimeReductionError(SymquivError):
    """Integral model has a denominator divisible by the sample prime."""


class NonFiniteTypeError(SymquivError):
    """Seed mutation closure exceeded the finite-type bound."""


class SearchBudgetExceededError(SymquivError):
    """Backtracking search ran out of budget; result is unknown, not false."""

    def __init__(self, budget):
        super().__init__(f"search budget of {budget} nodes exhausted")
        self.budget = budget


class UndefinedValueError(SymquivError):
    """Requested quantity is undefined for this input (e.g. phi on a non-free socle)."""
