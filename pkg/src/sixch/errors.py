"""Exception hierarchy shared across the engine.

Every error raised by the library derives from :class:`EngineError` so
callers (in particular the CLI) can map failures to exit codes without
catching bare ``Exception``.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EngineError, ValueError):
    """A scalar nonlinearity was evaluated outside its domain."""


class ShapeError(EngineError, ValueError):
    """Field values do not match the grid sample layout."""


class MeanError(EngineError, ValueError):
    """An operation requiring a zero-mean field received one with mass."""


class SpecError(EngineError, ValueError):
    """An initial-state specification cannot be realized on the grid."""


class BoundOvershoot(EngineError, RuntimeError):
    """Regularized initial data exceeded its guaranteed bounds."""


class OverflowSignal(EngineError, OverflowError):
    """A functional integrand exceeded the representable range."""


class NewtonDivergence(EngineError, RuntimeError):
    """The implicit solver failed to converge within its iteration budget."""


class GuardViolation(EngineError, RuntimeError):
    """Damping could not keep a Newton iterate inside the admissible set."""


class StepFloorError(EngineError, RuntimeError):
    """Adaptive stepping rejected a step already at the minimum step size."""


class RangeError(EngineError, ValueError):
    """A requested time or index lies outside the recorded range."""


class MeanMismatch(EngineError, ValueError):
    """Paired trajectories must start from states with identical mean."""


class ConfigError(EngineError, ValueError):
    """A run configuration file is malformed or inconsistent."""
