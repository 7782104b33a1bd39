"""
Exception hierarchy for wealthkin
"""

from typing import Optional


class WealthKinError(Exception):
    """Base class for all domain errors"""


class ParameterError(WealthKinError):
    """Model or simulation parameters failed validation"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report

    def __str__(self):
        base = super().__str__()
        if self.report is not None:
            return f"{base}\n{self.report}"
        return base


class SamplingError(WealthKinError):
    """A draw or pairing request outside its admissible range"""


class StabilityError(WealthKinError):
    """Fokker-Planck time step exceeds the stability bound"""

    def __init__(self, dtau: float, bound: float):
        super().__init__(f"dtau={dtau:.6g} exceeds the stability bound {bound:.6g}")
        self.dtau = dtau
        self.bound = bound


class TailFitError(WealthKinError):
    """Tail slope cannot be fitted on the given samples"""

    def __init__(self, message: str, n_used: Optional[int] = None):
        super().__init__(message)
        self.n_used = n_used


class ConfigError(WealthKinError):
    """Configuration file could not be parsed or contains unknown keys"""


class BundleError(WealthKinError):
    """Output bundle is malformed or incompatible"""
