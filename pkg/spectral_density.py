"""
The environment spectral density (dq)^2 J(omega) seen by the ring current.

Mid band: the closed form from the matched modes. Below c/R0: an omega^3
continuation backed by the partial-wave normalisation argument. Above
0.1 c/R1: nothing (hard cutoff). The same quantity can also be built by binning
couplings of finite-difference oracle modes.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import special
from scipy.integrate import quad, trapezoid
from scipy.optimize import brentq

from cylinder_modes import (
    LOW_FREQUENCY_LIMIT,
    Boundary,
    ModeSolution,
    OracleMode,
    RadialGrid,
    fd_oracle_modes,
    oracle_norm,
)
from errors import ContractError, DomainError, FitError, ParameterError, SpectralRangeError
from physical_model import CONSTANTS, RingGeometry

MODE_MASS = 1.0 / (4.0 * math.pi * CONSTANTS.c**2)
MIN_MODES_PER_BIN = 5
NORM_TOLERANCE = 1e-6
IR_KR0_LIMIT = 0.1
IR_KRSPHERE_MIN = 10.0
IR_MIN_POINTS = 4
EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class CurrentProfile:
    """Supercurrent confined to a London depth below the wire surface."""

    I_total: float
    R1: float
    delta: float

    @classmethod
    def for_geometry(cls, geom: RingGeometry, I_total: float) -> "CurrentProfile":
        return cls(I_total=I_total, R1=geom.R1, delta=geom.delta)

    def density(self, rho):
        rho = np.asarray(rho, dtype=float)
        peak = self.I_total / (2.0 * math.pi * self.R1 * self.delta)
        layer = peak * np.exp(np.minimum(rho - self.R1, 0.0) / self.delta)
        return np.where(rho <= self.R1, layer, 0.0)

    def recovered_current(self) -> float:
        """2 pi times the integral of j rho over the cross-section, in closed form."""
        ratio = self.delta / self.R1
        return self.I_total * (1.0 - ratio + ratio * math.exp(-self.R1 / self.delta))


def coupling(
    mode: Union[ModeSolution, OracleMode],
    cur: CurrentProfile,
    geom: RingGeometry,
    grid: Optional[RadialGrid] = None,
) -> float:
    """
    Coupling q*C_n = -(1/c) * 2 pi L * integral of j(rho) f_n(rho) rho over the wire.

    Analytic modes use the exact overlap of the two exp((rho-R1)/delta) layers;
    oracle modes are integrated on their own grid, which must be passed.

    Raises:
        ContractError: If the mode is not normalised or an oracle mode comes without its grid.
    """
    prefactor = -2.0 * math.pi * geom.L / CONSTANTS.c
    if isinstance(mode, ModeSolution):
        if not (math.isfinite(mode.A_n) and mode.A_n > 0):
            raise ContractError(f"mode {mode.index} has no valid amplitude")
        d, R1 = cur.delta, cur.R1
        overlap = 0.5 * d * R1 - 0.25 * d**2 + 0.25 * d**2 * math.exp(-2.0 * R1 / d)
        peak = cur.I_total / (2.0 * math.pi * R1 * d)
        return prefactor * peak * mode.A_n * overlap

    if grid is None:
        raise ContractError("oracle modes need the grid they were solved on")
    norm = oracle_norm(mode, grid, geom)
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ContractError(f"oracle mode k={mode.k_n:.6g} is not normalised (norm {norm:.8f})")
    inside = grid.rho <= cur.R1 * (1.0 + EDGE_SLACK)
    rho = grid.rho[inside]
    integrand = cur.density(rho) * mode.eigenvector[inside] * rho
    return float(prefactor * trapezoid(integrand, rho))


def _check_band(omega: np.ndarray, geom: RingGeometry, strict: bool) -> None:
    if np.any(omega <= 0):
        raise SpectralRangeError("frequencies must be positive")
    if np.any(omega > geom.omega_uv_edge * (1.0 + EDGE_SLACK)):
        raise SpectralRangeError(
            f"omega above the UV edge 0.1 c/R1 = {geom.omega_uv_edge:.4e}; the spectrum is cut off there"
        )
    if strict and np.any(omega < geom.omega_c * (1.0 - EDGE_SLACK)):
        raise SpectralRangeError(
            f"omega below c/R0 = {geom.omega_c:.4e}; use the infrared sector of SpectralDensityModel"
        )


def _as_output(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


def j_analytic(omega, geom: RingGeometry, I: float, strict: bool = True):
    """
    Mid-band spectral density for total current I:
    q^2 J = (pi/(4 c^2)) (delta/R1)^2 I^2 L / ln^2(omega R1/c).

    Args:
        omega: Frequency or array of frequencies in 1/s.
        geom: Ring geometry.
        I: Current in statA.
        strict: Also reject frequencies below c/R0. The UV edge is always enforced.

    Raises:
        SpectralRangeError: If omega leaves the mid band.
    """
    scalar = np.ndim(omega) == 0
    omega = np.asarray(omega, dtype=float)
    _check_band(omega, geom, strict)
    log = np.log(omega * geom.R1 / CONSTANTS.c)
    value = math.pi / (4.0 * CONSTANTS.c**2) * (geom.delta / geom.R1) ** 2 * I**2 * geom.L / log**2
    return _as_output(value, scalar)


def j_single_flux(omega, geom: RingGeometry, strict: bool = True):
    """j_analytic with I equal to the single-flux current, written without I."""
    scalar = np.ndim(omega) == 0
    omega = np.asarray(omega, dtype=float)
    _check_band(omega, geom, strict)
    log = np.log(omega * geom.R1 / CONSTANTS.c)
    prefactor = (
        math.pi**3
        * CONSTANTS.c**2
        * CONSTANTS.hbar**2
        / (16.0 * CONSTANTS.e_charge**2 * geom.L * geom.log_L_R1**2)
    )
    return _as_output(prefactor * (geom.delta / geom.R1) ** 2 / log**2, scalar)


@dataclass(frozen=True, eq=False)
class BinnedDensity:
    edges: np.ndarray
    values: np.ndarray
    mode_counts: np.ndarray
    min_modes: float = MIN_MODES_PER_BIN

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def valid(self) -> np.ndarray:
        return self.mode_counts >= self.min_modes

    def evaluate(self, omega):
        """Piecewise-constant lookup; zero outside the table and in flagged bins."""
        omega = np.asarray(omega, dtype=float)
        idx = np.searchsorted(self.edges, omega, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.values))
        safe = np.clip(idx, 0, len(self.values) - 1)
        return np.where(inside & self.valid[safe], self.values[safe], 0.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "omega_lo": self.edges[:-1],
                "omega_hi": self.edges[1:],
                "J_binned": self.values,
                "mode_count": self.mode_counts,
                "valid": self.valid,
            }
        )


def binned_oracle_density(
    omegas: Sequence[float],
    couplings: Sequence[float],
    bin_width: float,
    min_modes: float = MIN_MODES_PER_BIN,
    origin: float = 0.0,
) -> BinnedDensity:
    """
    Regularises J = (pi/2) sum C_n^2/(m_n omega_n) delta(omega - omega_n) on fixed bins.

    Each mode's weight is spread uniformly over its own spacing cell (midpoints
    to its neighbours), so modes straddling a bin edge count fractionally.

    Args:
        omegas: Mode frequencies.
        couplings: Matching q*C_n values.
        bin_width: Bin width in 1/s; edges sit at origin + j*bin_width.
        min_modes: Bins holding fewer (fractional) modes are flagged invalid.
        origin: Offset of the bin lattice.

    Returns:
        The BinnedDensity over every bin touched by a mode cell.
    """
    omegas = np.asarray(omegas, dtype=float)
    couplings = np.asarray(couplings, dtype=float)
    if omegas.size < 2 or omegas.shape != couplings.shape:
        raise ParameterError("modes", "need at least two modes with one coupling each")
    if not bin_width > 0:
        raise ParameterError("bin_width", "must be positive")

    order = np.argsort(omegas)
    omegas, couplings = omegas[order], couplings[order]
    weights = 0.5 * math.pi * couplings**2 / (MODE_MASS * omegas)

    mids = 0.5 * (omegas[1:] + omegas[:-1])
    lower = np.concatenate(([omegas[0] - (omegas[1] - omegas[0]) / 2], mids))
    upper = np.concatenate((mids, [omegas[-1] + (omegas[-1] - omegas[-2]) / 2]))
    lower = np.maximum(lower, 0.0)
    widths = upper - lower

    first = math.floor((lower[0] - origin) / bin_width)
    last = math.ceil((upper[-1] - origin) / bin_width)
    edges = origin + bin_width * np.arange(first, last + 1)
    overlap = np.minimum(upper[:, None], edges[None, 1:]) - np.maximum(lower[:, None], edges[None, :-1])
    fraction = np.clip(overlap, 0.0, None) / widths[:, None]

    counts = fraction.sum(axis=0)
    table = BinnedDensity(
        edges=edges,
        values=weights @ fraction / bin_width,
        mode_counts=counts,
        min_modes=min_modes,
    )
    flagged = int(np.sum(~table.valid))
    if flagged:
        logging.info(f"{flagged} of {len(counts)} bins hold fewer than {min_modes} modes and are excluded")
    return table


def oracle_mode_budget(geom: RingGeometry, max_modes: int) -> int:
    """Enough oracle modes to reach k R1 = 0.1, capped by max_modes."""
    return int(min(max_modes, math.ceil(LOW_FREQUENCY_LIMIT * geom.R_norm / (math.pi * geom.R1)) + 5))


@dataclass(frozen=True, eq=False)
class OracleSpectrum:
    k: np.ndarray
    couplings: np.ndarray
    table: BinnedDensity


def oracle_spectral_table(
    geom: RingGeometry,
    grid: RadialGrid,
    current: CurrentProfile,
    count: int,
    bin_width_modes: float = 6.0,
    boundary: Boundary = Boundary.DIRICHLET,
    min_modes: float = MIN_MODES_PER_BIN,
    with_wire: bool = True,
) -> OracleSpectrum:
    """Solves oracle modes, couples them to the current and bins them; bin width in units of pi c/R_norm."""
    modes = fd_oracle_modes(geom, grid, count, boundary=boundary, with_wire=with_wire)
    k = np.array([m.k_n for m in modes])
    couplings = np.array([coupling(m, current, geom, grid) for m in modes])
    spacing = math.pi * CONSTANTS.c / geom.R_norm
    # Lowest free Neumann mode sits at k = 0 up to eigensolver round-off and carries no weight.
    keep = k > 0.1 * math.pi / geom.R_norm
    table = binned_oracle_density(
        CONSTANTS.c * k[keep], couplings[keep], bin_width_modes * spacing, min_modes=min_modes
    )
    return OracleSpectrum(k=k, couplings=couplings, table=table)


def comparison_window(table: BinnedDensity, geom: RingGeometry, log_min: float = 3.0, far_zone: float = 5.0) -> np.ndarray:
    """Valid bins lying where the closed form is expected to hold to logarithmic accuracy."""
    lo, hi = table.edges[:-1], table.edges[1:]
    with np.errstate(divide="ignore"):
        log_hi = np.abs(np.log(hi * geom.R1 / CONSTANTS.c))
    return (
        table.valid
        & (lo >= geom.omega_c)
        & (hi <= geom.omega_uv_edge)
        & (log_hi >= log_min)
        & (lo * geom.R_norm / CONSTANTS.c >= far_zone)
    )


def analytic_bin_average(table: BinnedDensity, geom: RingGeometry, I: float, samples: int = 33) -> np.ndarray:
    """Bin averages of j_analytic; NaN for bins outside the mid band."""
    out = np.full(len(table.values), np.nan)
    for i, (lo, hi) in enumerate(zip(table.edges[:-1], table.edges[1:])):
        if lo >= geom.omega_c and hi <= geom.omega_uv_edge:
            out[i] = float(np.mean(j_analytic(np.linspace(lo, hi, samples), geom, I)))
    return out


@dataclass(frozen=True, eq=False)
class SpectralDensityModel:
    """
    Piecewise (dq)^2 J(omega) used by the decoherence engine.

    dq is dq_multiplier times the single-flux current. The mid band runs from
    the matching frequency min(c/R0, omega_max) to omega_max; below it the
    optional omega^3 sector continues the mid-band value continuously, above
    omega_max the density is zero. With a table the binned oracle density is
    used instead of the closed form.
    """

    geometry: RingGeometry
    dq_multiplier: float = 1.0
    ir_sector: bool = True
    omega_max: Optional[float] = None
    table: Optional[BinnedDensity] = None

    def __post_init__(self):
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", self.geometry.omega_uv_edge)
        if not 0 < self.omega_max <= self.geometry.omega_uv_edge * (1.0 + EDGE_SLACK):
            raise ParameterError("omega_max", "must be positive and not above 0.1 c/R1")
        if not (math.isfinite(self.dq_multiplier) and self.dq_multiplier >= 0):
            raise ParameterError("dq_multiplier", "must be finite and non-negative")

    @property
    def mode(self) -> str:
        return "binned" if self.table is not None else "analytic"

    @property
    def omega_match(self) -> float:
        return min(self.geometry.omega_c, self.omega_max)

    def _mid_band(self, omega: np.ndarray) -> np.ndarray:
        return self.dq_multiplier**2 * j_single_flux(omega, self.geometry, strict=False)

    def __call__(self, omega):
        scalar = np.ndim(omega) == 0
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.zeros_like(omega)
        if self.table is not None:
            band = (omega > 0) & (omega <= self.omega_max)
            out[band] = self.table.evaluate(omega[band])
            return _as_output(out[0], True) if scalar else out

        mid = (omega >= self.omega_match) & (omega <= self.omega_max)
        if np.any(mid):
            out[mid] = self._mid_band(omega[mid])
        if self.ir_sector:
            ir = (omega > 0) & (omega < self.omega_match)
            if np.any(ir):
                edge = self._mid_band(np.array([self.omega_match]))[0]
                out[ir] = edge * (omega[ir] / self.omega_match) ** 3
        return _as_output(out[0], True) if scalar else out

    def edge_value(self) -> float:
        """Value just below omega_max, used by the UV tail bound."""
        return float(self(self.omega_max))

    def breakpoints(self) -> List[float]:
        return [self.omega_match, self.omega_max]

    def sector(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        labels = np.where(omega < self.omega_match, "ir", "mid")
        return np.where(omega > self.omega_max, "uv_cutoff", labels)

    def covers(self, lo: float, hi: float) -> bool:
        if self.table is None:
            return True
        valid_edges = self.table.edges[:-1][self.table.valid]
        return valid_edges.size > 0 and valid_edges.min() <= lo and self.table.edges[1:][self.table.valid].max() >= hi

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "R0": self.geometry.R0,
            "R1": self.geometry.R1,
            "delta": self.geometry.delta,
            "dq_multiplier": self.dq_multiplier,
            "ir_sector": self.ir_sector,
            "omega_c": self.geometry.omega_c,
            "omega_match": self.omega_match,
            "omega_max": self.omega_max,
            "J_at_match": float(self(self.omega_match)),
        }


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def legendre_norm(l: int) -> float:
    """Normalisation integral of the associated Legendre function P_l^1."""
    return 2.0 * l * (l + 1) / (2 * l + 1)


@dataclass(frozen=True)
class ScattererMap:
    """
    k-independent link from the growing coefficient F to the decaying G and the
    regular D of one multipole channel: G = g_over_f * F, D R_out^l = d_over_f * F.
    """

    g_over_f: float = 1.0
    d_over_f: float = 1.0


IDENTITY_SCATTERER = ScattererMap()


@dataclass(frozen=True)
class PartialWaveCoefficients:
    l: int
    k: float
    D_nl: float
    F_nl: float
    G_nl: float
    delta_n: float

    def __post_init__(self):
        if self.l < 1:
            raise ParameterError("l", "no l=0 channel exists: P_0^1 vanishes identically")

    @property
    def N_l(self) -> float:
        return legendre_norm(self.l)


def _channel_amplitudes(k: float, l: int, R_out: float, scatterer: ScattererMap):
    x = k * R_out
    regular = double_factorial(2 * l + 1) / x**l
    irregular = -scatterer.g_over_f * x ** (l + 1) / double_factorial(2 * l - 1)
    return regular, irregular


def radial_function(r, k: float, l: int, geom: RingGeometry, scatterer: ScattererMap = IDENTITY_SCATTERER):
    """Exterior radial function per unit F: (r/R_out)^l + G/F (R_out/r)^(l+1) near the ring, a shifted sine far away."""
    regular, irregular = _channel_amplitudes(k, l, geom.R_out, scatterer)
    x = k * np.asarray(r, dtype=float)
    return regular * special.spherical_jn(l, x) + irregular * special.spherical_yn(l, x)


def partial_wave_coefficients(
    k: float, l: int, geom: RingGeometry, scatterer: ScattererMap = IDENTITY_SCATTERER
) -> PartialWaveCoefficients:
    """
    Normalises the l channel over the sphere R_sphere and returns its coefficients.

    The interior (D r^l) and the exterior free solution are integrated with
    weight r^2; F is fixed by requiring the total to be 1.
    """
    if l < 1:
        raise ParameterError("l", "no l=0 channel exists: P_0^1 vanishes identically")
    R_out = geom.R_out
    regular, irregular = _channel_amplitudes(k, l, R_out, scatterer)
    interior = scatterer.d_over_f**2 * R_out**3 / (2 * l + 3)

    pieces = max(2, math.ceil(k * (geom.R_sphere - R_out) / (4.0 * math.pi)) + 1)
    edges = np.linspace(R_out, geom.R_sphere, pieces + 1)
    exterior = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = quad(
            lambda r: radial_function(r, k, l, geom, scatterer) ** 2 * r**2, lo, hi, limit=200
        )
        exterior += value

    F = 1.0 / math.sqrt(interior + exterior)
    return PartialWaveCoefficients(
        l=l,
        k=k,
        D_nl=F * scatterer.d_over_f / R_out**l,
        F_nl=F,
        G_nl=F * scatterer.g_over_f,
        delta_n=math.atan2(-irregular, regular),
    )


def sphere_wavenumbers(
    geom: RingGeometry, l: int, k_lo: float, k_hi: float, scatterer: ScattererMap = IDENTITY_SCATTERER
) -> np.ndarray:
    """Wavenumbers in [k_lo, k_hi] at which the l channel vanishes on the normalisation sphere."""

    def edge_value(k):
        regular, _ = _channel_amplitudes(k, l, geom.R_out, scatterer)
        return float(radial_function(geom.R_sphere, k, l, geom, scatterer) / regular)

    step = math.pi / (8.0 * geom.R_sphere)
    ks = np.append(np.arange(k_lo, k_hi, step), k_hi)
    values = np.array([edge_value(k) for k in ks])
    roots = []
    for i in range(len(ks) - 1):
        if values[i] == 0.0:
            roots.append(float(ks[i]))
        elif values[i] * values[i + 1] < 0.0:
            roots.append(brentq(edge_value, ks[i], ks[i + 1], rtol=1e-13))
    return np.array(roots)


@dataclass(frozen=True, eq=False)
class IRScalingResult:
    l: int
    k: np.ndarray
    F: np.ndarray
    delta_n: np.ndarray
    slope: float
    intercept: float
    phase_slope: float

    @property
    def j_exponent(self) -> float:
        """Exponent of J(omega): C^2/omega with C proportional to F and a flat mode density."""
        return 2.0 * self.slope - 1.0

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "F_exponent": self.slope,
            "J_exponent": self.j_exponent,
            "phase_shift_exponent": self.phase_slope,
            "k": self.k.tolist(),
            "F": self.F.tolist(),
        }


def ir_coefficient_scaling(
    geom: RingGeometry,
    k_list: Sequence[float],
    l: int = 1,
    scatterer: ScattererMap = IDENTITY_SCATTERER,
    snap_to_modes: bool = True,
) -> IRScalingResult:
    """
    Fits the power law of the growing coefficient F_{n,l} against k.

    Args:
        geom: Ring geometry; R_sphere is the normalisation sphere.
        k_list: At least four wavenumbers with k*R0 <= 0.1 and k*R_sphere >= 10.
        l: Multipole index.
        scatterer: k-independent map fixing G and D from F.
        snap_to_modes: Move every k to the nearest Dirichlet root on the sphere.

    Returns:
        IRScalingResult with the log-log slope of F (l + 1 expected) and of the phase shift.

    Raises:
        FitError: If fewer than four distinct wavenumbers remain.
        DomainError: If a wavenumber leaves the infrared window.
    """
    k = np.sort(np.asarray(k_list, dtype=float))
    if k.size < IR_MIN_POINTS:
        raise FitError(f"need at least {IR_MIN_POINTS} wavenumbers, got {k.size}")
    if np.any(k * geom.R0 > IR_KR0_LIMIT) or np.any(k * geom.R_sphere < IR_KRSPHERE_MIN):
        raise DomainError(
            f"infrared fit needs k*R0 <= {IR_KR0_LIMIT} and k*R_sphere >= {IR_KRSPHERE_MIN}"
        )

    if snap_to_modes:
        shift = math.pi / geom.R_sphere
        roots = sphere_wavenumbers(geom, l, k[0] - shift, k[-1] + shift, scatterer)
        if roots.size:
            k = np.unique(roots[np.abs(roots[None, :] - k[:, None]).argmin(axis=1)])
        if k.size < IR_MIN_POINTS:
            raise FitError(f"only {k.size} distinct sphere modes near the requested wavenumbers")

    coefficients = [partial_wave_coefficients(float(ki), l, geom, scatterer) for ki in k]
    F = np.array([c.F_nl for c in coefficients])
    phase = np.array([c.delta_n for c in coefficients])
    slope, intercept = np.polyfit(np.log(k), np.log(F), 1)
    phase_slope = float(np.polyfit(np.log(k), np.log(phase), 1)[0]) if np.all(phase > 0) else math.nan
    logging.info(f"Infrared l={l}: F ~ k^{slope:.4f}, implied J ~ omega^{2 * slope - 1:.4f}")
    return IRScalingResult(
        l=l, k=k, F=F, delta_n=phase, slope=float(slope), intercept=float(intercept), phase_slope=phase_slope
    )
