"""Exception hierarchy shared by all analysis modules."""


class BazykinError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BazykinError, ValueError):
    """Inputs violate a documented precondition (e.g. non-positive parameters)."""


class NonGenericError(DomainError):
    """Parameters sit exactly on a boundary where the classification is undefined.

    Raised instead of guessing a side, e.g. C = M at the carrying capacity,
    region-boundary equalities near the origin, or vanishing denominators in
    the blow-up eigenvalue formulas.  The offending quantity is named in the
    message.
    """


class NotFoundError(BazykinError):
    """A searched-for object (homoclinic orbit, Bautin point, ...) does not
    exist in the given bracket, or the search budget was exhausted."""


class StiffnessError(BazykinError):
    """Adaptive step size underflowed.  Carries the last accepted state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state
