from __future__ import annotations

from typing import Optional


class DomainError(ValueError):
    """Argument outside the admissible domain of an operation."""


class PreconditionError(DomainError):
    pass


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Base class for numerical failures (CLI exit code 2)."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, *, last_iterate: Optional[complex] = None, residual: Optional[float] = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class BracketError(NumericalError):
    pass


class DegenerateSystemError(NumericalError):
    pass


class StepSizeError(NumericalError):
    def __init__(self, message: str, *, t: float, h: float):
        super().__init__(message)
        self.t = t
        self.h = h


class MeasurementError(NumericalError):
    pass
