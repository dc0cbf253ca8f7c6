"""Exception hierarchy shared by the library and the command line."""


class NQDTError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(NQDTError, ValueError):
    """Invalid argument or malformed input file."""

    exit_code = 2


class CapacityError(NQDTError):
    """Problem too large for the dense 2**n representation."""

    exit_code = 3


class ConvergenceError(NQDTError):
    """Training or integration failed to produce a usable result."""

    exit_code = 4


class DegenerateStateError(ConvergenceError):
    """The network produced an (almost) all-zero wavefunction."""


class SingularityError(NQDTError, ArithmeticError):
    """A denominator vanished (level crossing, zero reference rate)."""

    exit_code = 2


class AccuracyError(ConvergenceError):
    """A step-halving self check of a numerical integrator failed."""


class PromotionWarning(UserWarning):
    """The rank-one shift did not promote the first excited state."""
