"""Exception types raised by the solver and its tooling."""


class MutualBandError(Exception):
    """Base class for all package-specific errors."""


class ParamOutOfRange(MutualBandError):
    """A model parameter violates its admissible range."""


class ZeroJump(MutualBandError):
    """The intervention cost g is evaluated at xi = 0, where it is undefined."""


class SingularSystem(MutualBandError):
    """The smooth-pasting linear system is numerically singular."""


class DomainError(MutualBandError):
    """An evaluation point lies outside the function's domain."""


class OutOfRange(MutualBandError):
    """A solver argument lies outside its admissible interval."""


class ConvergenceFailure(MutualBandError):
    """A bracketing or bisection solve failed to meet its tolerance."""


class NonConvergence(MutualBandError):
    """The grid fixed-point iteration failed to converge."""


class InvalidConfig(MutualBandError):
    """A simulation configuration value is inadmissible."""


class InadmissiblePolicy(MutualBandError):
    """A band policy violates admissibility (ordering or positivity)."""
