"""Error hierarchy shared by every ringdec module.

Each error carries the exit code the CLI returns for it: rejections of the
configuration or of the physical regime exit with 1, numerical failures with 2.
"""

from typing import Optional


class RingDecError(Exception):
    """Base class for all ringdec failures."""

    exit_code = 2


class RejectionError(RingDecError):
    """Input or regime rejected before any numerics ran."""

    exit_code = 1


class ParameterError(RejectionError):
    """A named parameter is non-finite, non-positive or otherwise invalid."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigError(RejectionError):
    """The run configuration failed schema validation."""


class RegimeError(RejectionError):
    """A quantity was requested outside the asymptotic window it is valid in."""


class DomainError(RejectionError):
    """Arguments outside the mathematical domain of a formula."""


class SpectralRangeError(DomainError):
    """Frequency outside the mid band of the analytic spectral density."""


class ExpansionError(RegimeError):
    """A perturbative expansion parameter is not small."""


class BreakdownError(RegimeError):
    """The cutoff-corrected closed form has a non-positive bracket."""


class NumericalError(RingDecError):
    """A numerical procedure failed to deliver the requested accuracy."""

    exit_code = 2


class QuadratureError(NumericalError):
    """Adaptive quadrature ran out of panel budget."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate:.6e}, error={error:.3e})")
        self.estimate = estimate
        self.error = error


class OracleSolverError(NumericalError):
    """The finite-difference eigensolver did not converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


class FitError(NumericalError):
    """Not enough data for a least-squares fit."""


class ContractError(NumericalError):
    """An input object violates the contract of the operation using it."""
