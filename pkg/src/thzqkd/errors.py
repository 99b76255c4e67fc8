"""Exception hierarchy for the simulator."""


class ThzQkdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ThzQkdError, ValueError):
    """A parameter violates a physical or structural invariant."""


class PilotRankError(InvalidInputError):
    """Pilot sequence is shorter than the number of transmit antennas."""


class DegenerateLinkError(ThzQkdError):
    """The estimated channel has no usable parallel channels."""


class DomainError(ThzQkdError, ValueError):
    """A formula was evaluated outside its mathematical domain."""


class NumericError(ThzQkdError, ArithmeticError):
    """Numerical breakdown (non-finite data, negative discriminant, ...)."""


class InvalidConfigError(ThzQkdError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class TrialAbortedError(ThzQkdError):
    """A Monte Carlo trial failed; carries the trial coordinates."""

    def __init__(self, message, *, sweep_value=None, trial=None, seed=None, cause=None):
        super().__init__(message)
        self.sweep_value = sweep_value
        self.trial = trial
        self.seed = seed
        self.cause = cause

    def diagnostic(self):
        return {
            "error": type(self.cause).__name__ if self.cause else type(self).__name__,
            "message": str(self),
            "sweep_value": self.sweep_value,
            "trial": self.trial,
            "seed": self.seed,
        }


class ResultWriteError(ThzQkdError, OSError):
    """Results could not be written to ``path``."""

    def __init__(self, message, path):
        super().__init__(message)
        self.path = str(path)
