"""Exception hierarchy shared by every package in the repository."""


class ToeplitzExpmError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(ToeplitzExpmError, ValueError):
    """A precondition on an argument was violated."""


class NumericOverflowError(ToeplitzExpmError, ArithmeticError):
    """A result is not representable in double precision."""


class StabilityError(ToeplitzExpmError, ArithmeticError):
    """A time-stepping propagator violates its stability contract."""
