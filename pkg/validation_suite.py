"""
Cross-checks run by `ringdec validate`: oracle against analytic modes, coupling
and binned density against the closed forms, the infrared exponent, the time
regimes and saturation of D(t), and the dissipation identities.

A check whose asymptotic window is empty for the configured geometry is
reported as skipped with the reason and counts neither way.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy import special

from cylinder_modes import (
    LOW_FREQUENCY_LIMIT,
    Boundary,
    analytic_mode,
    build_radial_grid,
    fd_oracle_modes,
    interior_decay_length,
    interior_fraction,
    mode_wavenumbers,
    oracle_surface_value,
    weighted_overlaps,
)
from decoherence_engine import (
    IRMode,
    CutoffPolicy,
    DecoherenceRequest,
    d_highT_closed,
    d_lowT_closed,
    d_of_t,
    decoherence_exponent,
    lowT_window,
    raw_slope,
    regime_slope,
)
from dissipation import NEGLIGIBLE_MARGIN, absorption, default_temperatures, temperature_sweep
from errors import RingDecError
from physical_model import CONSTANTS, RingGeometry, ThermalState, single_flux_current, validate_regime
from run_config import RunConfig
from spectral_density import (
    CurrentProfile,
    SpectralDensityModel,
    analytic_bin_average,
    binned_oracle_density,
    comparison_window,
    coupling,
    ir_coefficient_scaling,
    oracle_mode_budget,
    j_analytic,
)

PASSED, FAILED, SKIPPED = "passed", "failed", "skipped"
ORACLE_KR1 = 0.05
ORACLE_FAR_ZONE = 5.0
LOG_WINDOW = 3.0
REGIME_T_START = 600.0
REGIME_SPAN = 10.0
ZETA_R_REFERENCE = 2.332e-6


@dataclass
class CheckResult:
    name: str
    status: str
    detail: dict = field(default_factory=dict)
    reason: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail, "reason": self.reason}


def _verdict(name: str, ok: bool, **detail) -> CheckResult:
    return CheckResult(name, PASSED if ok else FAILED, detail)


def _skip(name: str, reason: str) -> CheckResult:
    logging.info(f"Check {name} skipped: {reason}")
    return CheckResult(name, SKIPPED, reason=reason)


class OracleContext:
    """Grid and oracle modes shared by the mode checks, solved once."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.geom = config.ring_geometry()
        self.boundary = Boundary(config.numerics.boundary)
        self.grid = build_radial_grid(self.geom, config.numerics.grid_points)
        self.count = oracle_mode_budget(self.geom, config.numerics.max_modes)
        self.modes = fd_oracle_modes(self.geom, self.grid, self.count, boundary=self.boundary)
        self.current = CurrentProfile.for_geometry(
            self.geom, config.numerics.dq_multiplier * single_flux_current(self.geom)
        )

    def eligible(self, log_min: float = 0.0):
        return [
            m
            for m in self.modes
            if m.k_n * self.geom.R1 <= ORACLE_KR1
            and m.k_n * self.geom.R_norm >= ORACLE_FAR_ZONE
            and abs(math.log(m.k_n * self.geom.R1)) >= log_min
        ]


def check_constants() -> CheckResult:
    alpha = CONSTANTS.e_charge**2 / (CONSTANTS.hbar * CONSTANTS.c)
    phi0 = math.pi * CONSTANTS.hbar * CONSTANTS.c / CONSTANTS.e_charge
    ok = abs(CONSTANTS.alpha_EM / alpha - 1) <= 1e-12 and abs(CONSTANTS.Phi0 / phi0 - 1) <= 1e-12
    return _verdict("constants", ok, alpha_EM=CONSTANTS.alpha_EM, Phi0=CONSTANTS.Phi0)


def check_free_field(ctx: OracleContext) -> CheckResult:
    modes = fd_oracle_modes(ctx.geom, ctx.grid, 5, boundary=Boundary.DIRICHLET, with_wire=False)
    exact = special.jn_zeros(0, 5) / ctx.geom.R_norm
    error = float(np.max(np.abs(np.array([m.k_n for m in modes]) / exact - 1)))
    return _verdict("free_field_j0_zeros", error <= 1e-3, max_relative_error=error)


def check_orthonormality(ctx: OracleContext) -> CheckResult:
    gram = weighted_overlaps(ctx.modes, ctx.grid, ctx.geom)
    error = float(np.max(np.abs(gram - np.eye(len(ctx.modes)))))
    return _verdict("oracle_orthonormality", error <= 1e-8, max_deviation=error, modes=len(ctx.modes))


def check_interior_profile(ctx: OracleContext) -> CheckResult:
    mode = ctx.modes[0]
    length = interior_decay_length(mode, ctx.grid)
    fraction = interior_fraction(mode, ctx.grid)
    bound = 10.0 * (ctx.geom.delta / ctx.geom.R1) ** 2
    ok = abs(length / ctx.geom.delta - 1) <= 0.05 and fraction <= bound
    return _verdict(
        "oracle_interior_profile", ok, decay_length_over_delta=length / ctx.geom.delta,
        interior_fraction=fraction, fraction_bound=bound,
    )


def check_wavenumbers(ctx: OracleContext) -> CheckResult:
    roots = mode_wavenumbers(ctx.geom, LOW_FREQUENCY_LIMIT / ctx.geom.R1, ctx.boundary)
    if roots.size == 0:
        return _skip("oracle_vs_analytic_wavenumbers", "no matched modes below k R1 = 0.1")
    first = abs(roots[0] / ctx.modes[0].k_n - 1)
    eligible = ctx.eligible()
    errors = [float(np.min(np.abs(roots / m.k_n - 1))) for m in eligible]
    worst = max(errors) if errors else 0.0
    return _verdict(
        "oracle_vs_analytic_wavenumbers", first <= 5e-3 and worst <= 1e-2,
        first_root_error=first, max_error=worst, compared=len(errors),
    )


def check_surface_and_coupling(ctx: OracleContext) -> List[CheckResult]:
    eligible = ctx.eligible(log_min=LOG_WINDOW)
    if not eligible:
        reason = "no oracle modes with k R1 <= 0.05, k R_norm >= 5 and |ln k R1| >= 3"
        return [_skip("oracle_vs_analytic_surface", reason), _skip("coupling_cross_check", reason)]
    budget = ctx.config.numerics.log_accuracy
    surface, couplings = [], []
    for m in eligible:
        analytic = analytic_mode(ctx.geom, target_k=m.k_n)
        surface.append(oracle_surface_value(m, ctx.grid) / analytic.A_n - 1)
        couplings.append(
            coupling(m, ctx.current, ctx.geom, ctx.grid) / coupling(analytic, ctx.current, ctx.geom) - 1
        )
    worst_surface = float(np.max(np.abs(surface)))
    worst_coupling = float(np.max(np.abs(couplings)))
    return [
        _verdict("oracle_vs_analytic_surface", worst_surface <= budget, max_deviation=worst_surface),
        _verdict("coupling_cross_check", worst_coupling <= budget, max_deviation=worst_coupling),
    ]


def check_continuity(ctx: OracleContext) -> CheckResult:
    k = ORACLE_KR1 / ctx.geom.R1
    mode = analytic_mode(ctx.geom, target_k=k)
    jump = abs(mode.derivative_jump()) / (mode.A_n / ctx.geom.delta)
    return _verdict("analytic_continuity", jump <= 1e-8, relative_derivative_jump=jump)


def check_binned_density(ctx: OracleContext) -> CheckResult:
    weighted = [m for m in ctx.modes if m.k_n > 0]
    k = np.array([m.k_n for m in weighted])
    couplings = np.array([coupling(m, ctx.current, ctx.geom, ctx.grid) for m in weighted])
    spacing = math.pi * CONSTANTS.c / ctx.geom.R_norm
    table = binned_oracle_density(
        CONSTANTS.c * k, couplings, ctx.config.numerics.bin_width_modes * spacing,
        min_modes=ctx.config.numerics.min_modes_per_bin,
    )
    window = comparison_window(table, ctx.geom, LOG_WINDOW)
    if not np.any(window):
        return _skip("binned_density_vs_analytic", "no populated bin inside the valid mid band")
    reference = analytic_bin_average(table, ctx.geom, ctx.current.I_total)
    deviation = float(np.max(np.abs(table.values[window] / reference[window] - 1)))
    return _verdict(
        "binned_density_vs_analytic", deviation <= ctx.config.numerics.log_accuracy,
        max_deviation=deviation, bins=int(window.sum()),
    )


def check_infrared(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    k_lo, k_hi = 12.0 / geom.R_sphere, 0.095 / geom.R0
    if k_hi <= 2.0 * k_lo:
        return _skip("infrared_exponent", "R_sphere too small for a k range inside the infrared window")
    result = ir_coefficient_scaling(geom, np.geomspace(k_lo, k_hi, config.numerics.ir_k_points))
    ok = abs(result.slope - 2.0) <= 0.05 and abs(result.j_exponent - 3.0) <= 0.05
    return _verdict(
        "infrared_exponent", ok, F_exponent=result.slope, J_exponent=result.j_exponent,
        phase_shift_exponent=result.phase_slope,
    )


def check_homogeneity(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    doubled = RingGeometry(**{**config.geometry.model_dump(), "delta": 2.0 * geom.delta})
    t = math.sqrt(geom.R1 * geom.R0) / CONSTANTS.c
    closed = d_lowT_closed(t, doubled, enforce_window=False) / d_lowT_closed(t, geom, enforce_window=False)
    omega = geom.omega_uv_edge / 2.0
    spectral = j_analytic(omega, doubled, 1.0, strict=False) / j_analytic(omega, geom, 1.0, strict=False)

    thermal = config.thermal_state()
    values = []
    for g in (geom, doubled):
        model = SpectralDensityModel(g)
        values.append(decoherence_exponent(t, model, thermal, 0.0, model.omega_max, config.numerics.quad_rtol).value)
    quadrature = values[1] / values[0]
    ok = abs(closed - 4) <= 1e-12 * 4 and abs(spectral - 4) <= 1e-12 * 4 and abs(quadrature / 4 - 1) <= 10 * config.numerics.quad_rtol
    return _verdict("delta_homogeneity", ok, closed_form=closed, spectral=spectral, quadrature=quadrature)


def check_temperature_monotonicity(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    model = SpectralDensityModel(geom)
    T1 = config.thermal.T if config.thermal.T > 0 else 1.0
    states = [ThermalState.for_geometry(T, geom) for T in (0.0, T1, 2.0 * T1)]
    times = np.geomspace(3.0 * geom.R1 / CONSTANTS.c, 30.0 * geom.R0 / CONSTANTS.c, 5)
    ok = decoherence_exponent(0.0, model, states[1], 0.0, model.omega_max).value == 0.0
    for t in times:
        values = [decoherence_exponent(t, model, s, 0.0, model.omega_max).value for s in states]
        ok = ok and values[0] >= 0 and values[1] >= values[0] and values[2] >= values[1]
    return _verdict("temperature_monotonicity", ok, temperatures=[s.T for s in states])


def _regime_times(geom: RingGeometry) -> Optional[np.ndarray]:
    lo = REGIME_T_START * geom.R1 / CONSTANTS.c
    hi = min(REGIME_SPAN * lo, lowT_window(geom)[1])
    if hi < 3.0 * lo:
        return None
    return np.geomspace(lo, hi, 6)


def check_low_temperature(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    times = _regime_times(geom)
    if times is None:
        return _skip("low_temperature_regime", "R0/R1 too small for a linear window well above the UV edge")
    request = DecoherenceRequest(
        geometry=geom,
        thermal=ThermalState.for_geometry(0.0, geom),
        times=times,
        model=SpectralDensityModel(geom),
        cutoff=CutoffPolicy(ir_mode=IRMode(config.numerics.ir_mode)),
        rtol=config.numerics.quad_rtol,
    )
    curve = d_of_t(request)
    closed = np.array([d_lowT_closed(t, geom) for t in times])
    deviation = float(np.max(np.abs(curve.values / closed - 1)))
    slope = regime_slope(times, curve.values, geom, regime="linear")
    ok = abs(slope - 1.0) <= 0.15 and deviation <= config.numerics.log_accuracy
    return _verdict(
        "low_temperature_regime", ok, slope=slope, raw_slope=raw_slope(times, curve.values),
        max_deviation_from_closed_form=deviation,
    )


def check_high_temperature(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    times = _regime_times(geom)
    if times is None:
        return _skip("high_temperature_regime", "R0/R1 too small for a quadratic window")
    T = 5.0 * CONSTANTS.hbar / (CONSTANTS.k_B * times[0])
    cutoff = CutoffPolicy(ir_mode=IRMode(config.numerics.ir_mode))
    curves = []
    for temperature in (T, 2.0 * T):
        request = DecoherenceRequest(
            geometry=geom,
            thermal=ThermalState.for_geometry(temperature, geom),
            times=times,
            model=SpectralDensityModel(geom),
            cutoff=cutoff,
            rtol=config.numerics.quad_rtol,
        )
        curves.append(d_of_t(request).values)
    thermal = ThermalState.for_geometry(T, geom)
    slope = regime_slope(times, curves[0], geom, thermal, regime="quadratic")
    ratio = curves[1] / curves[0]
    closed = np.array([d_highT_closed(t, geom, thermal).value for t in times])
    deviation = float(np.max(np.abs(curves[0] / closed - 1)))
    ok = abs(slope - 2.0) <= 0.2 and np.all(np.abs(ratio / 2.0 - 1) <= 0.1) and deviation <= 0.5
    return _verdict(
        "high_temperature_regime", ok, temperature=T, slope=slope,
        doubling_ratio_min=float(ratio.min()), doubling_ratio_max=float(ratio.max()),
        max_deviation_from_closed_form=deviation,
    )


def check_saturation(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    if geom.omega_uv_edge <= geom.omega_min:
        return _skip("saturation_plateau", "infrared cutoff above the UV edge: empty spectral window")
    thermal = config.thermal_state()
    request = DecoherenceRequest(
        geometry=geom,
        thermal=thermal,
        times=np.geomspace(30.0, 300.0, 6) * geom.R0 / CONSTANTS.c,
        model=SpectralDensityModel(geom),
        cutoff=CutoffPolicy(ir_mode=IRMode.CUTOFF),
        rtol=config.numerics.quad_rtol,
    )
    curve = d_of_t(request)
    ratio = curve.D_lim_quadrature / curve.D_lim
    factor = config.numerics.saturation_factor
    ok = 1.0 / factor <= ratio <= factor and bool(curve.plateau_ok)
    return _verdict(
        "saturation_plateau", ok, D_lim=curve.D_lim, D_quadrature=curve.D_lim_quadrature,
        ratio=ratio, plateau=curve.plateau_ok,
    )


def check_dissipation(config: RunConfig) -> CheckResult:
    geom = config.ring_geometry()
    mat = config.material_params()
    reference = absorption(1e11, 1e18, 1e-5)
    omega = config.dissipation_omega()
    R_cav = config.cavity_radius()
    sweep = temperature_sweep(omega, default_temperatures(mat), mat, geom, R_cav, config.material.constant_gap)
    active = sweep[sweep["zeta_R"] > 0]
    identity = active["tau"] * (CONSTANTS.c / R_cav) * active["zeta_R"]
    ok = (
        abs(reference / ZETA_R_REFERENCE - 1) <= 1e-2
        and bool((sweep["margin"] > NEGLIGIBLE_MARGIN).all())
        and bool((np.abs(identity - 1) <= 1e-12).all())
    )
    return _verdict(
        "dissipation", ok, zeta_R_reference=reference, min_margin=float(sweep["margin"].min()),
        omega=omega,
    )


def _guarded(name: str, check: Callable, *args):
    try:
        result = check(*args)
    except RingDecError as e:
        logging.error(f"Check {name} raised {type(e).__name__}: {e}")
        return [CheckResult(name, FAILED, {"error": str(e), "exit_code": e.exit_code})]
    return result if isinstance(result, list) else [result]


def run_suite(config: RunConfig) -> List[CheckResult]:
    """
    Runs every check for the configuration in a fixed order.

    The regime gate comes first; if it fails nothing else runs.
    """
    geom = config.ring_geometry()
    diagnostics = validate_regime(geom)
    gate = CheckResult(
        "regime_gate",
        PASSED if all(d.passed for d in diagnostics) else FAILED,
        {"diagnostics": [d.to_dict() for d in diagnostics]},
    )
    if gate.status == FAILED:
        return [gate]

    results = [gate, check_constants()]
    ctx = OracleContext(config)
    for name, check in (
        ("free_field_j0_zeros", check_free_field),
        ("oracle_orthonormality", check_orthonormality),
        ("oracle_interior_profile", check_interior_profile),
        ("oracle_vs_analytic_wavenumbers", check_wavenumbers),
        ("oracle_vs_analytic_surface", check_surface_and_coupling),
        ("analytic_continuity", check_continuity),
        ("binned_density_vs_analytic", check_binned_density),
    ):
        results += _guarded(name, check, ctx)
    for name, check in (
        ("infrared_exponent", check_infrared),
        ("delta_homogeneity", check_homogeneity),
        ("temperature_monotonicity", check_temperature_monotonicity),
        ("low_temperature_regime", check_low_temperature),
        ("high_temperature_regime", check_high_temperature),
        ("saturation_plateau", check_saturation),
        ("dissipation", check_dissipation),
    ):
        results += _guarded(name, check, config)
    for r in results:
        logging.info(f"Check {r.name}: {r.status}")
    return results
