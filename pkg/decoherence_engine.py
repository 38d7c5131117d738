"""
Decoherence exponent D(t) of a persistent-current superposition.

D(t) = (2/(pi hbar)) * integral of (dq)^2 J(w)/w^2 (1 - cos w t) coth(hbar beta w / 2) dw,
evaluated by panel quadrature aligned to the oscillation of cos(w t), together
with the closed forms that hold in the intermediate-time windows and the
saturation estimate.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import BreakdownError, ParameterError, RegimeError
from physical_model import CONSTANTS, RingGeometry, ThermalState, require_regime
from quadrature import cosine_weighted, panel_quadrature
from spectral_density import SpectralDensityModel
from utils import parallel_map

PREFACTOR = 2.0 / (math.pi * CONSTANTS.hbar)
COTH_SERIES_LIMIT = 1e-3
GEOMETRIC_RATIO = 1.25
TAIL_RATIO = 2.0
DEFAULT_OSCILLATIONS = 200
WINDOW_FACTOR = 3.0
SATURATION_ONSET = 30.0
PLATEAU_BAND = 0.2
BREAKDOWN_FRACTION = 0.5


class IRMode(str, Enum):
    CUTOFF = "cutoff"
    OMEGA3 = "omega3"


class ThermalWeight(str, Enum):
    FULL = "full"
    ZERO = "zero"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class CutoffPolicy:
    """Integration limits: a hard infrared cutoff at omega_min, or the omega^3 sector down to zero."""

    ir_mode: IRMode = IRMode.CUTOFF
    omega_min: Optional[float] = None
    omega_max: Optional[float] = None

    def limits(self, geom: RingGeometry, model: SpectralDensityModel) -> Tuple[float, float]:
        upper = model.omega_max if self.omega_max is None else min(self.omega_max, model.omega_max)
        if IRMode(self.ir_mode) is IRMode.OMEGA3:
            return 0.0, upper
        return (geom.omega_min if self.omega_min is None else self.omega_min), upper


@dataclass(frozen=True, eq=False)
class DecoherenceRequest:
    geometry: RingGeometry
    thermal: ThermalState
    times: np.ndarray
    model: SpectralDensityModel
    cutoff: CutoffPolicy = CutoffPolicy()
    log_override: bool = False
    rtol: float = 1e-6
    n_oscillations: int = DEFAULT_OSCILLATIONS

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size == 0 or not np.all(np.isfinite(times)):
            raise ParameterError("times", "need a non-empty one-dimensional grid of finite times")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("times", "time grid must be strictly increasing")
        light_time = self.geometry.R1 / CONSTANTS.c
        if times[0] <= light_time:
            raise RegimeError(
                f"times must exceed R1/c = {light_time:.4e} s, grid starts at {times[0]:.4e} s"
            )


@dataclass(frozen=True)
class DecoherenceSample:
    t: float
    D: float
    error: float
    regime: str
    tail_bound: float
    D_lowT1: float
    D_Dfin: float
    dfin_breakdown: bool


@dataclass(frozen=True)
class QuadratureOutcome:
    value: float
    error: float
    tail_bound: float


@dataclass(frozen=True)
class HighTResult:
    value: float
    correction: float
    breakdown: bool


@dataclass(frozen=True, eq=False)
class DecoherenceCurve:
    samples: List[DecoherenceSample]
    D_lim: float
    D_lim_override: float
    D_lim_quadrature: Optional[float]
    plateau_ok: Optional[bool]
    boundaries: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.D for s in self.samples])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": [s.t for s in self.samples],
                "D_quadrature": [s.D for s in self.samples],
                "D_lowT1": [s.D_lowT1 for s in self.samples],
                "D_Dfin": [s.D_Dfin for s in self.samples],
                "regime": [s.regime for s in self.samples],
                "tail_bound": [s.tail_bound for s in self.samples],
            }
        )


def thermal_factor(omega, thermal: ThermalState, weight: ThermalWeight = ThermalWeight.FULL):
    """coth(hbar beta w / 2), replaced by 1 or by its classical limit 2/(hbar beta w) on request."""
    omega = np.asarray(omega, dtype=float)
    weight = ThermalWeight(weight)
    if thermal.zero_temperature or weight is ThermalWeight.ZERO:
        return np.ones_like(omega)
    x = thermal.hbar_beta * omega
    if weight is ThermalWeight.CLASSICAL:
        return 2.0 / x
    small = x < COTH_SERIES_LIMIT
    safe = np.where(small, 1.0, x)
    return np.where(small, 2.0 / np.where(small, x, 1.0) + x / 6.0, 1.0 / np.tanh(0.5 * safe))


def _integrand(omega, t, model, thermal, weight):
    s = np.sin(0.5 * omega * t)
    return PREFACTOR * model(omega) * thermal_factor(omega, thermal, weight) * 2.0 * s * s / omega**2


def _smooth_part(omega, model, thermal, weight):
    return PREFACTOR * model(omega) * thermal_factor(omega, thermal, weight) / omega**2


def _panel_edges(lower: float, split: float, t: float, model: SpectralDensityModel) -> np.ndarray:
    start = lower if lower > 0 else min(split, 1.0 / t) * 1e-6
    n_geometric = int(math.ceil(math.log(split / start) / math.log(GEOMETRIC_RATIO))) + 1
    pieces = [
        np.arange(lower, split, 0.5 * math.pi / t),
        np.geomspace(start, split, max(n_geometric, 2)),
        np.array([lower, split]),
        np.array([b for b in model.breakpoints() if lower < b < split]),
    ]
    edges = np.unique(np.concatenate(pieces))
    return edges[(edges >= lower) & (edges <= split)]


def uv_tail_bound(model: SpectralDensityModel, thermal: ThermalState, upper: float) -> float:
    """Bound on what the region above the cutoff would add if J stayed at its edge value."""
    edge = float(model(upper))
    return PREFACTOR * 2.0 * edge * float(thermal_factor(upper, thermal)) / upper


def decoherence_exponent(
    t: float,
    model: SpectralDensityModel,
    thermal: ThermalState,
    lower: float,
    upper: float,
    rtol: float = 1e-6,
    n_oscillations: int = DEFAULT_OSCILLATIONS,
    weight: ThermalWeight = ThermalWeight.FULL,
) -> QuadratureOutcome:
    """
    D at one time between the frequency limits.

    Panels of width at most pi/(2t) cover [lower, lower + n_oscillations*pi/t];
    above that, 1 - cos is split into a smooth integral and a Fourier-weighted one.

    Args:
        t: Time in s.
        model: Spectral density including (dq)^2.
        thermal: Temperature.
        lower: Lower frequency limit (0 for the omega^3 sector).
        upper: Upper frequency limit.
        rtol: Relative tolerance.
        n_oscillations: Half-periods resolved by panels before switching to the tail method.
        weight: Full coth, its zero-temperature or its classical limit.

    Returns:
        QuadratureOutcome with value, error estimate and the UV tail bound.
    """
    if t < 0:
        raise ParameterError("t", "time must be non-negative")
    tail = uv_tail_bound(model, thermal, upper) if upper > 0 else 0.0
    if t == 0 or upper <= lower:
        return QuadratureOutcome(0.0, 0.0, tail)

    split = min(upper, lower + n_oscillations * math.pi / t)
    head = panel_quadrature(
        partial(_integrand, t=t, model=model, thermal=thermal, weight=weight),
        _panel_edges(lower, split, t, model),
        rtol=rtol,
    )
    value, error = head.value, head.error
    if split < upper:
        smooth_fn = partial(_smooth_part, model=model, thermal=thermal, weight=weight)
        n_tail = int(math.ceil(math.log(upper / split) / math.log(TAIL_RATIO))) + 1
        edges = np.unique(
            np.concatenate(
                (
                    np.geomspace(split, upper, max(n_tail, 2)),
                    [b for b in model.breakpoints() if split < b < upper],
                )
            )
        )
        smooth = panel_quadrature(smooth_fn, edges, rtol=rtol)
        atol = 1e-2 * rtol * max(abs(value + smooth.value), np.finfo(float).tiny)
        oscillating = cosine_weighted(lambda w: float(smooth_fn(w)), split, upper, t, atol)
        value += smooth.value - oscillating
        error += smooth.error + atol
    return QuadratureOutcome(max(value, 0.0), error, tail)


def lowT_window(geom: RingGeometry) -> Tuple[float, float]:
    return WINDOW_FACTOR * geom.R1 / CONSTANTS.c, geom.R0 / (WINDOW_FACTOR * CONSTANTS.c)


def _check_window(t: float, geom: RingGeometry) -> None:
    lo, hi = lowT_window(geom)
    if not lo <= t <= hi:
        raise RegimeError(f"t = {t:.4e} s outside the intermediate window [{lo:.4e}, {hi:.4e}] s")


def _closed_form_scale(geom: RingGeometry) -> float:
    return (geom.delta / geom.R1) ** 2 / (CONSTANTS.e_charge**2 * geom.L * geom.log_L_R1**2)


def d_lowT_closed(
    t: float, geom: RingGeometry, thermal: Optional[ThermalState] = None, enforce_window: bool = True
) -> float:
    """
    Zero-temperature intermediate-time exponent
    D = t pi^3 c^2 hbar / (16 e^2 L ln^2(L/R1)) (delta/R1)^2 / ln^2(c t/R1).

    Args:
        t: Time in s.
        geom: Ring geometry.
        thermal: When given at T > 0, t must not exceed hbar/(k_B T).
        enforce_window: Require 3 R1/c <= t <= R0/(3c).

    Raises:
        RegimeError: If a window condition fails.
    """
    if enforce_window:
        _check_window(t, geom)
        if thermal is not None and not thermal.zero_temperature and t > thermal.hbar_beta:
            raise RegimeError(f"t = {t:.4e} s exceeds hbar/(k_B T) = {thermal.hbar_beta:.4e} s")
    log_t = math.log(CONSTANTS.c * t / geom.R1)
    return t * math.pi**3 * CONSTANTS.c**2 * CONSTANTS.hbar / 16.0 * _closed_form_scale(geom) / log_t**2


def d_highT_closed(
    t: float, geom: RingGeometry, th: ThermalState, enforce_window: bool = True
) -> HighTResult:
    """
    High-temperature exponent with the infrared cutoff correction,
    D = t^2 pi^2 c^2 k_B T / (8 e^2 L ln^2(L/R1)) (delta/R1)^2 [1/ln(ct/R1) - 1/ln(R0/R1)].

    The correction field is the ratio of the second bracket term to the first;
    breakdown is flagged once it exceeds one half.

    Raises:
        RegimeError: At T = 0, or outside the window when enforced.
        BreakdownError: If the bracket is not positive.
    """
    if th.zero_temperature:
        raise RegimeError("the high-temperature form needs T > 0")
    if enforce_window:
        _check_window(t, geom)
        if t < th.hbar_beta:
            raise RegimeError(f"t = {t:.4e} s is below hbar/(k_B T) = {th.hbar_beta:.4e} s")
    log_t = math.log(CONSTANTS.c * t / geom.R1)
    first, second = 1.0 / log_t, 1.0 / geom.log_R0_R1
    bracket = first - second
    if log_t <= 0 or bracket <= 0:
        raise BreakdownError(
            f"cutoff expansion breaks down at t = {t:.4e} s (bracket {bracket:.3e})"
        )
    value = (
        t**2 * math.pi**2 * CONSTANTS.c**2 * CONSTANTS.k_B * th.T / 8.0 * _closed_form_scale(geom) * bracket
    )
    correction = second / first
    breakdown = correction > BREAKDOWN_FRACTION
    if breakdown:
        logging.warning(f"Cutoff correction {correction:.2f} of the leading term at t = {t:.4e} s")
    return HighTResult(value=value, correction=correction, breakdown=breakdown)


def f_crossover(u: float) -> float:
    return max(1.0, u)


def d_saturation(geom: RingGeometry, th: ThermalState, log_override: bool = False) -> float:
    """
    Long-time plateau estimate
    D_lim = f(u) / (16 alpha ln^4(R0/R1)) (pi c/(R0 omega_min)) (delta/R1)^2.

    Args:
        geom: Ring geometry, must pass the regime checks.
        th: Temperature; u is taken against th.omega_min.
        log_override: Replace ln^4(R0/R1) by 1.
    """
    require_regime(geom)
    logs = 1.0 if log_override else geom.log_R0_R1**4
    return (
        f_crossover(th.u)
        / (16.0 * CONSTANTS.alpha_EM * logs)
        * (math.pi * CONSTANTS.c / (geom.R0 * th.omega_min))
        * (geom.delta / geom.R1) ** 2
    )


def regime_tag(t: float, geom: RingGeometry, thermal: ThermalState) -> str:
    if t >= geom.R0 / CONSTANTS.c:
        return "saturated"
    if thermal.zero_temperature or t <= thermal.hbar_beta:
        return "linear"
    return "quadratic"


def _evaluate_sample(t: float, request: DecoherenceRequest, lower: float, upper: float) -> DecoherenceSample:
    outcome = decoherence_exponent(
        t, request.model, request.thermal, lower, upper, request.rtol, request.n_oscillations
    )
    try:
        low = d_lowT_closed(t, request.geometry, request.thermal)
    except RegimeError:
        low = math.nan
    high, breakdown = math.nan, False
    if not request.thermal.zero_temperature:
        try:
            result = d_highT_closed(t, request.geometry, request.thermal)
            high, breakdown = result.value, result.breakdown
        except BreakdownError:
            breakdown = True
        except RegimeError:
            pass
    return DecoherenceSample(
        t=float(t),
        D=outcome.value,
        error=outcome.error,
        regime=regime_tag(t, request.geometry, request.thermal),
        tail_bound=outcome.tail_bound,
        D_lowT1=low,
        D_Dfin=high,
        dfin_breakdown=breakdown,
    )


def plateau_check(times: np.ndarray, values: np.ndarray, geom: RingGeometry) -> Tuple[Optional[float], Optional[bool]]:
    """Mean over the final decade of samples beyond 30 R0/c and whether they all stay within 20% of it."""
    onset = SATURATION_ONSET * geom.R0 / CONSTANTS.c
    late = (times >= onset) & (times >= times[-1] / 10.0)
    if not np.any(late):
        return None, None
    mean = float(np.mean(values[late]))
    if mean <= 0:
        return mean, False
    return mean, bool(np.all(np.abs(values[late] / mean - 1.0) <= PLATEAU_BAND))


def d_of_t(req: DecoherenceRequest, workers: int = 1) -> DecoherenceCurve:
    """
    Samples D(t) over the request's time grid.

    Args:
        req: Validated request.
        workers: Worker processes; samples come back ordered by t either way.

    Returns:
        DecoherenceCurve with the closed-form comparators and the saturation variants.

    Raises:
        RegimeError: If a binned model does not cover the integration range.
        QuadratureError: If a sample misses the tolerance within the panel budget.
    """
    lower, upper = req.cutoff.limits(req.geometry, req.model)
    if upper <= lower:
        logging.warning(
            f"Empty spectral window: lower limit {lower:.4e} >= upper limit {upper:.4e} 1/s, D vanishes"
        )
    elif not req.model.covers(max(lower, req.geometry.omega_c), upper):
        raise RegimeError("binned spectral table does not cover the integration range")

    samples = parallel_map(
        partial(_evaluate_sample, request=req, lower=lower, upper=upper), list(req.times), workers
    )
    times = np.array([s.t for s in samples])
    values = np.array([s.D for s in samples])
    quadrature_plateau, plateau_ok = (None, None) if upper <= lower else plateau_check(times, values, req.geometry)
    curve = DecoherenceCurve(
        samples=samples,
        D_lim=d_saturation(req.geometry, req.thermal, log_override=False),
        D_lim_override=d_saturation(req.geometry, req.thermal, log_override=True),
        D_lim_quadrature=quadrature_plateau,
        plateau_ok=plateau_ok,
        boundaries={
            "R1_over_c": req.geometry.R1 / CONSTANTS.c,
            "hbar_beta": math.inf if req.thermal.zero_temperature else req.thermal.hbar_beta,
            "R0_over_c": req.geometry.R0 / CONSTANTS.c,
        },
    )
    logging.info(f"Evaluated D(t) at {len(samples)} times, max D = {values.max():.4e}")
    return curve


def regime_slope(
    times: Sequence[float],
    values: Sequence[float],
    geom: RingGeometry,
    thermal: Optional[ThermalState] = None,
    regime: str = "linear",
) -> float:
    """
    Local power of D(t) with the logarithmic structure of the matching closed form divided out.

    The closed form is t^p times slowly varying logarithms; the returned exponent
    is p plus the log-log slope of D divided by that closed form.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2:
        raise ParameterError("times", "need at least two samples for a slope")
    if regime == "linear":
        power = 1.0
        reference = np.array([d_lowT_closed(t, geom, enforce_window=False) for t in times])
    elif regime == "quadratic":
        if thermal is None:
            raise ParameterError("thermal", "the quadratic regime needs a temperature")
        power = 2.0
        reference = np.array([d_highT_closed(t, geom, thermal, enforce_window=False).value for t in times])
    else:
        raise ParameterError("regime", f"unknown regime {regime}")
    return power + float(np.polyfit(np.log(times), np.log(values / reference), 1)[0])


def raw_slope(times: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(times)), np.log(np.asarray(values)), 1)[0])
