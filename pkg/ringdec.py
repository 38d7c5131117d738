"""
ringdec: decoherence of a persistent supercurrent in a superconducting ring.

    python ringdec.py {spectrum,decohere,saturation,dissipation,validate,sweep} [--config PATH] [--out DIR]

Exit codes: 0 success, 1 configuration or regime rejection, 2 numerical failure.
"""

import argparse
import logging
import sys
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from cylinder_modes import Boundary, build_radial_grid
from decoherence_engine import (
    CutoffPolicy,
    DecoherenceRequest,
    IRMode,
    d_of_t,
    d_saturation,
    f_crossover,
    lowT_window,
    regime_slope,
)
from dissipation import conductivity, default_temperatures, frequency_sweep, gap, surface_impedance, temperature_sweep
from errors import BreakdownError, RejectionError, RingDecError
from physical_model import (
    CONSTANTS,
    RingGeometry,
    ThermalState,
    gauss_cm2_to_tesla_m2,
    require_regime,
    single_flux_current,
    statampere_to_ampere,
    thermal_crossover_time,
)
from run_config import RunConfig, load_config
from spectral_density import (
    CurrentProfile,
    SpectralDensityModel,
    analytic_bin_average,
    comparison_window,
    oracle_mode_budget,
    oracle_spectral_table,
)
from utils import add_run_arguments, configure_logging, parallel_map, write_csv, write_json
from validation_suite import FAILED, PASSED, SKIPPED, run_suite

SATURATION_TIMES = (30.0, 300.0)
SATURATION_POINTS = 8
SLOPE_MIN_SAMPLES = 3
LINEAR_MARGIN = 3.0
FREQUENCY_DECADES = 3
FREQUENCY_POINTS = 16


def _gate(config: RunConfig) -> RingGeometry:
    geom = config.ring_geometry()
    require_regime(geom)
    return geom


def _frame_out(config: RunConfig, name: str, frame: pd.DataFrame) -> None:
    if "csv" in config.output.formats:
        write_csv(frame, config.output.directory / name)


def _payload_out(config: RunConfig, name: str, payload: dict) -> None:
    if "json" in config.output.formats:
        write_json(payload, config.output.directory / name)


def _model(config: RunConfig, geom: RingGeometry, table=None) -> SpectralDensityModel:
    return SpectralDensityModel(
        geom, dq_multiplier=config.numerics.dq_multiplier, omega_max=config.numerics.omega_max, table=table
    )


def _si_report(geom: RingGeometry) -> dict:
    return {
        "I_s_A": statampere_to_ampere(single_flux_current(geom)),
        "Phi0_T_m2": gauss_cm2_to_tesla_m2(CONSTANTS.Phi0),
    }


def cmd_spectrum(config: RunConfig, workers: int = 1) -> int:
    """Analytic and oracle-binned J(omega) on a log grid, with sector labels."""
    geom = _gate(config)
    numerics = config.numerics
    model = _model(config, geom)
    current = CurrentProfile.for_geometry(geom, numerics.dq_multiplier * single_flux_current(geom))
    spectrum = oracle_spectral_table(
        geom,
        build_radial_grid(geom, numerics.grid_points),
        current,
        oracle_mode_budget(geom, numerics.max_modes),
        bin_width_modes=numerics.bin_width_modes,
        boundary=Boundary(numerics.boundary),
        min_modes=numerics.min_modes_per_bin,
    )
    table = spectrum.table

    omega = np.geomspace(1e-2 * model.omega_match, model.omega_max, numerics.spectrum_points)
    idx = np.searchsorted(table.edges, omega, side="right") - 1
    inside = (idx >= 0) & (idx < len(table.values))
    safe = np.clip(idx, 0, len(table.values) - 1)
    binned = np.where(inside & table.valid[safe], table.values[safe], np.nan)
    _frame_out(
        config,
        "spectrum.csv",
        pd.DataFrame({"omega": omega, "J_analytic": model(omega), "J_binned": binned, "sector": model.sector(omega)}),
    )

    window = comparison_window(table, geom)
    deviation = None
    if np.any(window):
        reference = analytic_bin_average(table, geom, current.I_total)
        deviation = float(np.max(np.abs(table.values[window] / reference[window] - 1)))
        logging.info(f"Binned density deviates from the closed form by at most {deviation:.1%}")
    else:
        logging.info("No valid bin inside the comparison window; deviation not reported")
    _payload_out(
        config,
        "spectrum.json",
        {
            "model": model.to_dict(),
            "oracle_modes": len(spectrum.k),
            "binned": table.to_frame().to_dict(orient="list"),
            "max_deviation": deviation,
        },
    )
    return 0


def _request(config: RunConfig, geom: RingGeometry, times, cutoff: Optional[CutoffPolicy] = None) -> DecoherenceRequest:
    return DecoherenceRequest(
        geometry=geom,
        thermal=config.thermal_state(),
        times=times,
        model=_model(config, geom),
        cutoff=cutoff if cutoff is not None else config.cutoff_policy(),
        log_override=config.numerics.log_override,
        rtol=config.numerics.quad_rtol,
        n_oscillations=config.numerics.n_oscillations,
    )


def _slope(times, values, mask, geom, thermal, regime) -> Optional[float]:
    mask = mask & (values > 0)
    if mask.sum() < SLOPE_MIN_SAMPLES:
        return None
    try:
        return regime_slope(times[mask], values[mask], geom, thermal, regime=regime)
    except BreakdownError as e:
        logging.warning(f"No {regime} slope: {e}")
        return None


def _linear_samples(
    times: np.ndarray, regimes: np.ndarray, in_window: np.ndarray, thermal: ThermalState
) -> np.ndarray:
    """Linear-regime samples kept well clear of the thermal crossover at hbar beta."""
    linear = in_window & (regimes == "linear")
    if thermal.zero_temperature:
        return linear
    return linear & (times <= thermal.hbar_beta / LINEAR_MARGIN)


def cmd_decohere(config: RunConfig, workers: int = 1) -> int:
    """D(t) over the configured time grid with closed-form comparators and saturation values."""
    geom = _gate(config)
    request = _request(config, geom, config.times())
    curve = d_of_t(request, workers=workers)
    _frame_out(config, "dcurve.csv", curve.to_frame())

    times, values = curve.times, curve.values
    lo, hi = lowT_window(geom)
    in_window = (times >= lo) & (times <= hi)
    regimes = np.array([s.regime for s in curve.samples])
    summary = {
        "D_lim": curve.D_lim,
        "D_lim_override": curve.D_lim_override,
        "D_lim_quadrature": curve.D_lim_quadrature,
        "D_lim_reported": curve.D_lim_override if config.numerics.log_override else curve.D_lim,
        "plateau_ok": curve.plateau_ok,
        "boundaries": curve.boundaries,
        "u": request.thermal.u,
        "linear_slope": _slope(
            times, values, _linear_samples(times, regimes, in_window, request.thermal), geom, request.thermal, "linear"
        ),
        "quadratic_slope": (
            None
            if request.thermal.zero_temperature
            else _slope(times, values, in_window & (regimes == "quadratic"), geom, request.thermal, "quadratic")
        ),
        "dfin_breakdown": any(s.dfin_breakdown for s in curve.samples),
    }
    if config.output.si_report:
        summary["si"] = _si_report(geom)
    _payload_out(config, "summary.json", summary)
    return 0


def saturation_estimates(config: RunConfig, workers: int = 1) -> dict:
    """Formula, log-override and long-time quadrature values of the plateau."""
    geom = _gate(config)
    thermal = config.thermal_state()
    estimates = {
        "T": thermal.T,
        "u": thermal.u,
        "f_u": f_crossover(thermal.u),
        "D_lim": d_saturation(geom, thermal),
        "D_lim_override": d_saturation(geom, thermal, log_override=True),
        "D_lim_quadrature": None,
        "plateau_ok": None,
        "crossover_time": thermal_crossover_time(thermal),
    }
    if geom.omega_min >= _model(config, geom).omega_max:
        logging.warning("Infrared cutoff at or above the UV edge; no quadrature plateau")
        return estimates
    times = np.geomspace(*SATURATION_TIMES, SATURATION_POINTS) * geom.R0 / CONSTANTS.c
    curve = d_of_t(_request(config, geom, times, CutoffPolicy(ir_mode=IRMode.CUTOFF)), workers=workers)
    estimates["D_lim_quadrature"] = curve.D_lim_quadrature
    estimates["plateau_ok"] = curve.plateau_ok
    if curve.D_lim_quadrature:
        estimates["quadrature_ratio"] = curve.D_lim_quadrature / estimates["D_lim"]
    return estimates


def cmd_saturation(config: RunConfig, workers: int = 1) -> int:
    estimates = saturation_estimates(config, workers)
    if config.output.si_report:
        estimates["si"] = _si_report(config.ring_geometry())
    _payload_out(config, "saturation.json", estimates)
    return 0


def cmd_dissipation(config: RunConfig, workers: int = 1) -> int:
    """Surface impedance report at the configured point plus temperature and frequency sweeps."""
    geom = _gate(config)
    mat = config.material_params()
    thermal = config.thermal_state()
    constant_gap = config.material.constant_gap
    omega, R_cav = config.dissipation_omega(), config.cavity_radius()

    report = surface_impedance(omega, thermal, mat, geom, R_cav, constant_gap)
    payload = report.to_dict()
    payload["gap"] = gap(thermal.T, mat, constant_gap)
    payload["sigma_over_sigma_N"] = conductivity(thermal, mat, constant_gap) / mat.sigma_N
    _payload_out(config, "dissipation.json", payload)

    _frame_out(
        config, "dissipation.csv", temperature_sweep(omega, default_temperatures(mat), mat, geom, R_cav, constant_gap)
    )
    omegas = np.geomspace(omega / 10**FREQUENCY_DECADES, omega, FREQUENCY_POINTS)
    _frame_out(config, "dissipation_omega.csv", frequency_sweep(omegas, thermal, mat, geom, R_cav, constant_gap))
    return 0


def cmd_validate(config: RunConfig, workers: int = 1) -> int:
    results = run_suite(config)
    counts = {status: sum(r.status == status for r in results) for status in (PASSED, FAILED, SKIPPED)}
    write_json({"checks": [r.to_dict() for r in results], **counts}, config.output.directory / "report.json")
    if results[0].status == FAILED:
        logging.error("Regime gate failed; no further checks run")
        return RejectionError.exit_code
    if counts[FAILED]:
        failed = ", ".join(r.name for r in results if r.status == FAILED)
        logging.error(f"Failed checks: {failed}")
        return RingDecError.exit_code
    logging.info(f"All {counts[PASSED]} checks passed, {counts[SKIPPED]} skipped")
    return 0


def _sweep_point(value: float, config: RunConfig, parameter: str) -> dict:
    row = {parameter: value}
    try:
        estimates = saturation_estimates(config.with_parameter(parameter, value))
    except RejectionError as e:
        logging.warning(f"Sweep point {parameter} = {value} rejected: {e}")
        return {**row, "status": type(e).__name__}
    row.update({k: estimates[k] for k in ("u", "D_lim", "D_lim_override", "D_lim_quadrature", "plateau_ok")})
    row["status"] = "ok"
    return row


def cmd_sweep(config: RunConfig, workers: int = 1) -> int:
    """Saturation values over one parameter, one worker task per value."""
    _gate(config)
    parameter = config.numerics.sweep_parameter
    rows = parallel_map(
        partial(_sweep_point, config=config, parameter=parameter), config.numerics.sweep_values, workers
    )
    columns = [parameter, "status", "u", "D_lim", "D_lim_override", "D_lim_quadrature", "plateau_ok"]
    _frame_out(config, "sweep.csv", pd.DataFrame(rows).reindex(columns=columns))
    return 0


COMMANDS = {
    "spectrum": (cmd_spectrum, "analytic and oracle-binned spectral density"),
    "decohere": (cmd_decohere, "decoherence exponent D(t) over the time grid"),
    "saturation": (cmd_saturation, "long-time plateau of D(t)"),
    "dissipation": (cmd_dissipation, "surface impedance and dissipation time"),
    "validate": (cmd_validate, "oracle and property checks"),
    "sweep": (cmd_sweep, "saturation value over a parameter"),
}


def _write_error(directory: Path, error: Exception, exit_code: int) -> None:
    try:
        write_json(
            {"error": type(error).__name__, "message": str(error), "exit_code": exit_code},
            directory / "error.json",
        )
    except OSError as e:
        logging.error(f"Could not write error report: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringdec", description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        add_run_arguments(commands.add_parser(name, help=help_text))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    directory = args.out if args.out is not None else Path("out")
    try:
        config = load_config(args.config).with_overrides(
            out=args.out, log_override=args.log_override, ir_mode=args.ir_mode, boundary=args.boundary
        )
        directory = config.output.directory
        return COMMANDS[args.command][0](config, args.workers)
    except RingDecError as e:
        logging.error(f"{type(e).__name__}: {e}")
        _write_error(directory, e, e.exit_code)
        return e.exit_code
    except Exception as e:
        logging.error(f"Unexpected {type(e).__name__}: {e}")
        _write_error(directory, e, RingDecError.exit_code)
        return RingDecError.exit_code


if __name__ == "__main__":
    sys.exit(main())
