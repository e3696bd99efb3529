"""Exception and warning types shared across the package."""


class GrassmeanError(Exception):
    """Base class for all library errors."""


class InvalidInputError(GrassmeanError, ValueError):
    """Malformed or out-of-contract input."""


class DomainError(GrassmeanError, ValueError):
    """A value fell outside the mathematical domain of an operation."""


class CutLocusError(GrassmeanError):
    """Two points are numerically at or beyond the cut locus, so the
    connecting geodesic is not unique.

    ``index`` identifies the offending datum when raised from a multi-point
    computation and ``column`` the offending column in column-wise averaging.
    The mean solver attaches its partial ``trace`` before re-raising.
    """

    def __init__(self, message, index=None, column=None):
        super().__init__(message)
        self.index = index
        self.column = column
        self.trace = None


class NotDescentDirectionError(GrassmeanError):
    """Line search was started along a direction with non-negative slope."""


class LineSearchFailedError(GrassmeanError):
    """Backtracking exhausted its shrink budget without an Armijo step."""


class DegenerateCurvatureError(GrassmeanError):
    """Second derivative along the search direction is numerically zero."""


class IllConditionedError(GrassmeanError):
    """A matrix that must be inverted is too close to singular."""


class DegenerateAverageError(GrassmeanError):
    """Vector average cancelled to (numerically) zero."""


class AmbiguousModelWarning(UserWarning):
    """The model is close to unidentifiable (near-equal circularity spectrum)."""
