"""Exception types shared across the package.

Failures that are *data* in the domain (an infeasible grasp, an
unexecutable plan step) are represented as result values, not
exceptions; the classes below cover contract violations and
environment faults.
"""


class HrcError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(HrcError, ValueError):
    """A numeric parameter violates its contract (e.g. tau <= 0)."""


class InvalidTrajectoryError(HrcError, ValueError):
    """A trajectory violates its invariants (ordering, shape, finiteness)."""


class InsufficientDataError(HrcError, ValueError):
    """Too few samples to fit a model."""


class ResolutionError(HrcError, ValueError):
    """Integration step too coarse for the requested duration."""


class DivergenceError(HrcError, ArithmeticError):
    """Numerical integration produced a non-finite state."""


class FitFailedError(HrcError, ArithmeticError):
    """Model fitting produced non-finite weights."""


class UnknownCommandError(HrcError, KeyError):
    """Command pattern not present in the stub template table."""


class BackendUnavailableError(HrcError, ConnectionError):
    """Remote planner backend timed out or refused the connection."""


class PlanFailedError(HrcError):
    """The backend response could not be turned into a valid plan.

    Recorded by the metrics harness as an executability failure, not
    re-raised out of the trial loop.
    """

    def __init__(self, command: str, reason: str):
        super().__init__(f"planning failed for {command!r}: {reason}")
        self.command = command
        self.reason = reason


class StructureError(HrcError):
    """Plan decomposition recursed beyond the single allowed level."""


class UnexecutableLabelError(HrcError, LookupError):
    """Program assembly referenced an object label never registered."""

    def __init__(self, label: str):
        super().__init__(f"no registered object for label {label!r}")
        self.label = label


class SessionConflictError(HrcError):
    """A recording session is already open for this context."""


class SessionClosedError(HrcError):
    """Operation on a finalized or aborted teleoperation session."""


class RejectedSampleError(HrcError, ValueError):
    """Teleoperation sample with a non-monotone timestamp."""


class OverrideFailedError(HrcError):
    """Override rollout diverged; executor falls back to infeasible."""


class ConfigError(HrcError, ValueError):
    """Unreadable or inconsistent configuration/scene/suite file."""
