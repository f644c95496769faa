"""Exception hierarchy shared by all modules."""


class PreconditionError(ValueError):
    """An input violates an operation's documented precondition."""


class DivergenceError(PreconditionError):
    """Path-loss exponent too small for the interference integral to converge."""


class SpecializationError(PreconditionError):
    """A closed form was called outside the parameter set it was derived for."""


class CapacityError(OverflowError):
    """Requested point count exceeds what can be indexed."""


class CalibrationError(RuntimeError):
    """Tuning-factor fit has no information to work with."""


class UnitError(ValueError):
    """Unknown or incompatible unit pair."""
