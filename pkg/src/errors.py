"""Exception types raised by the localisation library"""

from typing import Any, Dict, Optional


class LatticeLocError(ValueError):
    """Base class for every error raised by this package"""


class ConfigurationError(LatticeLocError):
    """Invalid species table, scenario file, patch or parameter"""


class DomainError(LatticeLocError):
    """A value was requested outside the region where it is defined"""


class PreconditionError(LatticeLocError):
    """An operation was called with arguments violating its contract"""


class ConstructionError(LatticeLocError):
    """A representative table failed one of its build-time conditions"""

    def __init__(self, condition: str, monomial: str, detail: str = ""):
        self.condition = condition
        self.monomial = monomial
        self.detail = detail
        message = f"condition ({condition}) fails for {monomial}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class VerificationError(LatticeLocError):
    """An identity that must hold exactly did not"""

    def __init__(self, message: str, counterexample: Optional[Dict[str, Any]] = None):
        self.counterexample = counterexample or {}
        super().__init__(message)
