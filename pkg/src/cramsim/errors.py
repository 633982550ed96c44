"""Exception types shared across the simulator."""


class CramSimError(Exception):
    """Base class for all simulator errors."""


class ParameterError(CramSimError):
    """A physical parameter or argument is outside its valid domain."""


class CalibrationError(CramSimError):
    """Device calibration failed to reproduce its targets.

    Carries the residuals of the failed fit in ``residuals``.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SolverError(CramSimError):
    """Operating-point iteration did not converge; carries last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(CramSimError):
    """Inconsistent gate/step configuration (arity, preset, model binding)."""


class ScheduleError(CramSimError):
    """Invalid schedule or port binding."""


class CapacityError(CramSimError):
    """Problem size exceeds what the exact evaluator can enumerate."""
