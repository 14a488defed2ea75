"""
Truncem Errors
Exception hierarchy shared by the scheme, the harness and the CLI.
"""

from typing import Optional


class TruncemError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class ConfigurationError(TruncemError, ValueError):
    """Invalid parameters, unsupported options or unreadable config files"""

    exit_code = 2


class DomainError(TruncemError, ValueError):
    """Argument outside the domain of an operation (off-grid time, bad theta, ...)"""

    exit_code = 2


class NumericalBlowUpError(TruncemError, ArithmeticError):
    """Coefficients or states became non-finite or exceeded the blow-up threshold"""

    exit_code = 3

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step k={step})")
        self.message = message
        self.step = step

    def __reduce__(self):
        # survive the trip back from worker processes with .step intact
        return (self.__class__, (self.message, self.step))


class CouplingError(TruncemError):
    """Two paths were compared that were not driven by the same Brownian sample"""

    exit_code = 3
