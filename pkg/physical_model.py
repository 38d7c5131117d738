import logging
import math
from dataclasses import dataclass, fields
from typing import List, Optional

from errors import DomainError, ParameterError, RegimeError

# Gaussian-CGS throughout; SI appears only in the reporting helpers at the bottom.
HIERARCHY_LIMIT = 0.2
UV_EDGE_FRACTION = 0.1
FILM_DEPTHS = 10.0
STATAMPERE_PER_AMPERE = 2.99792458e9
TESLA_M2_PER_GAUSS_CM2 = 1e-8


@dataclass(frozen=True)
class Constants:
    """Physical constants in Gaussian-CGS units."""

    c: float = 2.99792458e10
    hbar: float = 1.054571817e-27
    e_charge: float = 4.80320471e-10
    k_B: float = 1.380649e-16

    @property
    def alpha_EM(self) -> float:
        return self.e_charge**2 / (self.hbar * self.c)

    @property
    def Phi0(self) -> float:
        """Superconducting flux quantum pi*hbar*c/e in G*cm^2."""
        return math.pi * self.hbar * self.c / self.e_charge


CONSTANTS = Constants()


@dataclass(frozen=True)
class RingGeometry:
    """
    Ring of radius R0 made of wire of radius R1 with London depth delta.

    R_norm is the cylindrical normalisation radius around the straightened wire
    and R_sphere the spherical normalisation radius for the infrared sector.
    Left unset they default to the geometric mean of R1 and R0 and to 1000*R0.
    Construction never enforces the hierarchy; use validate_regime for that.
    """

    R0: float
    R1: float
    delta: float
    R_norm: Optional[float] = None
    R_sphere: Optional[float] = None
    omega_min_factor: float = math.pi
    film_thickness: Optional[float] = None

    def __post_init__(self):
        if self.R_norm is None and self.R0 > 0 and self.R1 > 0:
            object.__setattr__(self, "R_norm", math.sqrt(self.R0 * self.R1))
        if self.R_sphere is None:
            object.__setattr__(self, "R_sphere", 1000.0 * self.R0)

    @property
    def L(self) -> float:
        return 2.0 * math.pi * self.R0

    @property
    def omega_min(self) -> float:
        return self.omega_min_factor * CONSTANTS.c / self.R0

    @property
    def omega_c(self) -> float:
        """Matching frequency between the infrared sector and the mid band."""
        return CONSTANTS.c / self.R0

    @property
    def omega_uv_edge(self) -> float:
        return UV_EDGE_FRACTION * CONSTANTS.c / self.R1

    @property
    def R_out(self) -> float:
        return self.R0 + self.R1

    @property
    def R_in(self) -> float:
        return self.R0 - self.R1

    @property
    def log_L_R1(self) -> float:
        return math.log(self.L / self.R1)

    @property
    def log_R0_R1(self) -> float:
        return math.log(self.R0 / self.R1)


@dataclass(frozen=True)
class MaterialParams:
    sigma_N: float = 1e18
    T_c: float = 9.2
    Delta0: Optional[float] = None

    def __post_init__(self):
        if self.Delta0 is None and _is_positive(self.T_c):
            object.__setattr__(self, "Delta0", 1.764 * CONSTANTS.k_B * self.T_c)
        for name in ("sigma_N", "T_c", "Delta0"):
            if not _is_positive(getattr(self, name)):
                raise ParameterError(name, "must be finite and strictly positive")
        ratio = self.Delta0 / (CONSTANTS.k_B * self.T_c)
        if not 1.0 <= ratio <= 3.0:
            raise ParameterError(
                "Delta0", f"Delta0/(k_B*T_c) = {ratio:.3f} outside [1, 3]"
            )


@dataclass(frozen=True)
class ThermalState:
    """Temperature together with the infrared scale it is compared against."""

    T: float
    omega_min: float

    def __post_init__(self):
        if not math.isfinite(self.T) or self.T < 0:
            raise ParameterError("T", "must be finite and non-negative")
        if not _is_positive(self.omega_min):
            raise ParameterError("omega_min", "must be finite and strictly positive")

    @classmethod
    def for_geometry(cls, T: float, geom: RingGeometry) -> "ThermalState":
        return cls(T=T, omega_min=geom.omega_min)

    @property
    def zero_temperature(self) -> bool:
        return self.T == 0.0

    @property
    def beta(self) -> Optional[float]:
        """1/(k_B T), or None at zero temperature."""
        if self.zero_temperature:
            return None
        return 1.0 / (CONSTANTS.k_B * self.T)

    @property
    def hbar_beta(self) -> Optional[float]:
        if self.zero_temperature:
            return None
        return CONSTANTS.hbar / (CONSTANTS.k_B * self.T)

    @property
    def u(self) -> float:
        return CONSTANTS.k_B * self.T / (CONSTANTS.hbar * self.omega_min)


@dataclass(frozen=True)
class RegimeDiagnostic:
    name: str
    ratio: float
    limit: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ratio": self.ratio,
            "limit": self.limit,
            "passed": self.passed,
        }


def _is_positive(value) -> bool:
    return value is not None and math.isfinite(value) and value > 0


def _check_fields(geom: RingGeometry) -> None:
    for f in fields(geom):
        value = getattr(geom, f.name)
        if f.name == "film_thickness" and value is None:
            continue
        if not _is_positive(value):
            raise ParameterError(f.name, f"must be finite and strictly positive, got {value}")


def validate_regime(geom: RingGeometry) -> List[RegimeDiagnostic]:
    """
    Checks the length hierarchy the whole calculation relies on.

    Args:
        geom: The ring geometry to check.

    Returns:
        One diagnostic per inequality with the measured ratio. A ratio passes
        when it stays strictly below 1 or at or below the stated limit.

    Raises:
        ParameterError: If a field is non-finite or non-positive.
    """
    _check_fields(geom)
    delta_R1 = geom.delta / geom.R1
    R1_R0 = geom.R1 / geom.R0
    diagnostics = [
        RegimeDiagnostic("delta<R1", delta_R1, 1.0, delta_R1 < 1.0),
        RegimeDiagnostic("R1<R0", R1_R0, 1.0, R1_R0 < 1.0),
        RegimeDiagnostic("delta/R1<=0.2", delta_R1, HIERARCHY_LIMIT, delta_R1 <= HIERARCHY_LIMIT),
        RegimeDiagnostic("R1/R0<=0.2", R1_R0, HIERARCHY_LIMIT, R1_R0 <= HIERARCHY_LIMIT),
        RegimeDiagnostic("R_norm>R1", geom.R1 / geom.R_norm, 1.0, geom.R1 < geom.R_norm),
        RegimeDiagnostic("R_norm<R0", geom.R_norm / geom.R0, 1.0, geom.R_norm < geom.R0),
        RegimeDiagnostic("R_sphere>R0", geom.R0 / geom.R_sphere, 1.0, geom.R0 < geom.R_sphere),
    ]
    if geom.film_thickness is not None:
        ratio = geom.delta / geom.film_thickness
        diagnostics.append(
            RegimeDiagnostic(
                "film_thickness>=10*delta", ratio, 1.0 / FILM_DEPTHS, ratio <= 1.0 / FILM_DEPTHS
            )
        )
    return diagnostics


def regime_passes(diagnostics: List[RegimeDiagnostic]) -> bool:
    return all(d.passed for d in diagnostics)


def require_regime(geom: RingGeometry) -> List[RegimeDiagnostic]:
    """Like validate_regime, but raises RegimeError naming every failed inequality."""
    diagnostics = validate_regime(geom)
    failed = [d for d in diagnostics if not d.passed]
    if failed:
        detail = ", ".join(f"{d.name} (ratio {d.ratio:.4g})" for d in failed)
        raise RegimeError(f"geometry outside the ring hierarchy: {detail}")
    return diagnostics


def thermal_crossover_time(th: ThermalState) -> float:
    """Returns hbar/(k_B T); math.inf at zero temperature."""
    if th.zero_temperature:
        return math.inf
    return th.hbar_beta


def flux_current(L: float, R1: float) -> float:
    """c*Phi0/(2 L ln(L/R1)) for a loop of length L and wire radius R1."""
    if L <= R1:
        raise DomainError(f"L={L} must exceed R1={R1} for a positive inductance logarithm")
    return CONSTANTS.c * CONSTANTS.Phi0 / (2.0 * L * math.log(L / R1))


def single_flux_current(geom: RingGeometry, enforce_regime: bool = True) -> float:
    """
    Supercurrent carried by one flux quantum through the ring, in statA.

    Args:
        geom: Ring geometry.
        enforce_regime: Reject geometries that fail validate_regime.

    Returns:
        I_s = c*Phi0 / (2 L ln(L/R1)).
    """
    if enforce_regime:
        require_regime(geom)
    else:
        _check_fields(geom)
    current = flux_current(geom.L, geom.R1)
    logging.debug(f"Single-flux current {current:.6e} statA for R0={geom.R0}, R1={geom.R1}")
    return current


def statampere_to_ampere(current: float) -> float:
    return current / STATAMPERE_PER_AMPERE


def gauss_cm2_to_tesla_m2(flux: float) -> float:
    return flux * TESLA_M2_PER_GAUSS_CM2
