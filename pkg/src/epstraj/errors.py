"""Exception types shared across the toolkit."""


class EpstrajError(Exception):
    """Base class for all toolkit errors."""


class DomainError(EpstrajError):
    """A model precondition was violated (steering range, speed sign, geometry)."""


class NumericalError(EpstrajError):
    """Integration produced a non-finite value."""


class SingularVelocity(EpstrajError):
    """Speed too close to zero for the steering-rate mapping."""


class DegenerateVelocity(EpstrajError):
    """Reference velocity magnitude below the floor; flat states undefined."""


class ParamError(EpstrajError):
    """Invalid planner parameter or segment request."""


class TurnTooTight(EpstrajError):
    """Requested heading change cannot be realized by a curvature-bounded turn."""


class InfeasibleError(EpstrajError):
    """No line/turn connection exists between a waypoint pair."""


class ParseError(EpstrajError):
    """Scenario file could not be read or is syntactically invalid."""


class ValidationError(EpstrajError):
    """Scenario value violates a module precondition."""
