import math
from unittest.mock import patch

import numpy as np
import pytest

from decoherence_engine import (
    CutoffPolicy,
    DecoherenceRequest,
    IRMode,
    ThermalWeight,
    d_highT_closed,
    d_lowT_closed,
    d_of_t,
    d_saturation,
    decoherence_exponent,
    f_crossover,
    lowT_window,
    plateau_check,
    raw_slope,
    regime_slope,
    regime_tag,
    thermal_factor,
)
from errors import BreakdownError, ParameterError, RegimeError
from physical_model import CONSTANTS, ThermalState
from spectral_density import BinnedDensity, SpectralDensityModel


def _serial_map(func, items, workers=1):
    return [func(item) for item in items]


@pytest.fixture
def wide_model(wide_geometry):
    return SpectralDensityModel(wide_geometry)


def _curve(geom, T, times, **kwargs):
    request = DecoherenceRequest(
        geometry=geom,
        thermal=ThermalState.for_geometry(T, geom),
        times=times,
        model=SpectralDensityModel(geom),
        **kwargs,
    )
    return d_of_t(request)


def test_thermal_factor_limits(wide_geometry):
    th = ThermalState.for_geometry(1.0, wide_geometry)
    omega = np.array([1e6, 1e15])
    full = thermal_factor(omega, th)
    assert full[0] == pytest.approx(2.0 / (th.hbar_beta * 1e6), rel=1e-6)
    assert full[1] == pytest.approx(1.0)
    assert thermal_factor(1e9, th, ThermalWeight.ZERO) == 1.0
    assert thermal_factor(1e9, th, ThermalWeight.CLASSICAL) == pytest.approx(2.0 / (th.hbar_beta * 1e9))
    assert np.all(thermal_factor(omega, ThermalState.for_geometry(0.0, wide_geometry)) == 1.0)


def test_request_rejects_decreasing_times(wide_geometry, wide_model, zero_temperature):
    with pytest.raises(ParameterError) as e:
        DecoherenceRequest(wide_geometry, zero_temperature, [2e-12, 1e-12], wide_model)
    assert e.value.field == "times"


def test_request_rejects_times_below_light_crossing(wide_geometry, wide_model, zero_temperature):
    with pytest.raises(RegimeError, match="R1/c"):
        DecoherenceRequest(wide_geometry, zero_temperature, [1e-16, 1e-12], wide_model)


def test_cutoff_policy_limits(wide_geometry, wide_model):
    assert CutoffPolicy().limits(wide_geometry, wide_model) == (wide_geometry.omega_min, wide_geometry.omega_uv_edge)
    assert CutoffPolicy(ir_mode=IRMode.OMEGA3).limits(wide_geometry, wide_model)[0] == 0.0
    assert CutoffPolicy(omega_max=1e12).limits(wide_geometry, wide_model)[1] == 1e12


def test_decoherence_exponent_vanishes_at_zero_time(wide_model, zero_temperature, wide_geometry):
    outcome = decoherence_exponent(0.0, wide_model, zero_temperature, wide_geometry.omega_min, 1e13)
    assert outcome.value == 0.0
    with pytest.raises(ParameterError):
        decoherence_exponent(-1.0, wide_model, zero_temperature, wide_geometry.omega_min, 1e13)


def test_decoherence_exponent_empty_window(wide_model, zero_temperature):
    assert decoherence_exponent(1e-11, wide_model, zero_temperature, 2e13, 1e13).value == 0.0


def test_d_lowT_closed_value(default_geometry):
    assert d_lowT_closed(1e-11, default_geometry, enforce_window=False) == pytest.approx(6.12e-9, rel=1e-2)
    with pytest.raises(RegimeError):
        d_lowT_closed(1e-11, default_geometry)


def test_d_lowT_closed_respects_thermal_time(wide_geometry):
    th = ThermalState.for_geometry(20.0, wide_geometry)
    with pytest.raises(RegimeError, match="hbar"):
        d_lowT_closed(1e-10, wide_geometry, th)


def test_d_highT_closed_needs_temperature(wide_geometry, zero_temperature):
    with pytest.raises(RegimeError):
        d_highT_closed(1e-10, wide_geometry, zero_temperature)


@patch("decoherence_engine.logging.warning")
def test_d_highT_closed_flags_breakdown_near_ring_size(mock_warning, wide_geometry):
    th = ThermalState.for_geometry(20.0, wide_geometry)
    result = d_highT_closed(lowT_window(wide_geometry)[1], wide_geometry, th)
    assert result.correction == pytest.approx(0.92, abs=0.01)
    assert result.breakdown
    mock_warning.assert_called_once()


def test_d_highT_closed_bracket_turns_negative(wide_geometry):
    th = ThermalState.for_geometry(20.0, wide_geometry)
    with pytest.raises(BreakdownError):
        d_highT_closed(2 * wide_geometry.R0 / CONSTANTS.c, wide_geometry, th, enforce_window=False)


def test_d_saturation_values(default_geometry):
    th = ThermalState.for_geometry(0.0, default_geometry)
    override = d_saturation(default_geometry, th, log_override=True)
    assert override == pytest.approx(8.5647e-8, rel=1e-4)
    assert d_saturation(default_geometry, th) == pytest.approx(override / math.log(10.0) ** 4)


def test_d_saturation_grows_linearly_above_crossover(wide_geometry):
    cold = ThermalState.for_geometry(0.0, wide_geometry)
    hot = ThermalState.for_geometry(100.0, wide_geometry)
    assert hot.u > 1
    assert d_saturation(wide_geometry, hot) == pytest.approx(hot.u * d_saturation(wide_geometry, cold))


def test_f_crossover():
    assert f_crossover(0.5) == 1.0
    assert f_crossover(3.0) == 3.0


def test_regime_tag(wide_geometry, zero_temperature):
    th = ThermalState.for_geometry(20.0, wide_geometry)
    assert regime_tag(1e-11, wide_geometry, zero_temperature) == "linear"
    assert regime_tag(1e-13, wide_geometry, th) == "linear"
    assert regime_tag(1e-10, wide_geometry, th) == "quadratic"
    assert regime_tag(1e-8, wide_geometry, th) == "saturated"


def test_plateau_check(wide_geometry):
    times = np.geomspace(1e-7, 1e-6, 5)
    assert plateau_check(times, np.full(5, 2.0), wide_geometry) == (2.0, True)
    assert plateau_check(times, np.array([1.0, 1.0, 1.0, 1.0, 3.0]), wide_geometry)[1] is False
    assert plateau_check(np.array([1e-12, 1e-11]), np.ones(2), wide_geometry) == (None, None)


def test_slopes(wide_geometry):
    times = np.geomspace(2e-12, 2e-11, 6)
    assert raw_slope(times, times**2) == pytest.approx(2.0)
    exact = [d_lowT_closed(t, wide_geometry) for t in times]
    assert regime_slope(times, exact, wide_geometry) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ParameterError):
        regime_slope(times, exact, wide_geometry, regime="quadratic")
    with pytest.raises(ParameterError):
        regime_slope(times[:1], exact[:1], wide_geometry)


@patch("decoherence_engine.logging.warning")
def test_d_of_t_empty_window(mock_warning, default_geometry):
    curve = _curve(default_geometry, 1.0, np.geomspace(1e-10, 1e-8, 5))
    assert np.all(curve.values == 0.0)
    assert curve.plateau_ok is None
    assert curve.D_lim_quadrature is None
    assert any("Empty spectral window" in c.args[0] for c in mock_warning.call_args_list)
    assert list(curve.to_frame().columns) == ["t", "D_quadrature", "D_lowT1", "D_Dfin", "regime", "tail_bound"]


@patch("decoherence_engine.logging.warning")
def test_d_of_t_passes_workers(mock_warning, mocker, default_geometry):
    mock_map = mocker.patch("decoherence_engine.parallel_map", side_effect=_serial_map)
    curve = _curve(default_geometry, 0.0, [1e-10, 2e-10])
    assert mock_map.call_args.args[2] == 1
    request = DecoherenceRequest(
        default_geometry, ThermalState.for_geometry(0.0, default_geometry), [1e-10, 2e-10],
        SpectralDensityModel(default_geometry),
    )
    d_of_t(request, workers=3)
    assert mock_map.call_args.args[2] == 3
    assert curve.boundaries["hbar_beta"] == math.inf


def test_d_of_t_rejects_uncovered_table(wide_geometry, zero_temperature):
    table = BinnedDensity(edges=np.array([1e9, 2e9]), values=np.ones(1), mode_counts=np.array([10.0]))
    request = DecoherenceRequest(
        wide_geometry, zero_temperature, [1e-11], SpectralDensityModel(wide_geometry, table=table)
    )
    with pytest.raises(RegimeError, match="cover"):
        d_of_t(request)


def test_d_vanishes_as_temperature_goes_to_zero(wide_geometry, wide_model):
    lower, upper = wide_geometry.omega_min, wide_geometry.omega_uv_edge
    cold = decoherence_exponent(1e-11, wide_model, ThermalState.for_geometry(1e-4, wide_geometry), lower, upper)
    zero = decoherence_exponent(1e-11, wide_model, ThermalState.for_geometry(0.0, wide_geometry), lower, upper)
    assert cold.value == pytest.approx(zero.value, rel=1e-6)


def test_thermal_weight_ordering(wide_geometry, wide_model):
    th = ThermalState.for_geometry(20.0, wide_geometry)
    lower, upper = wide_geometry.omega_min, wide_geometry.omega_uv_edge

    def run(weight):
        return decoherence_exponent(1e-10, wide_model, th, lower, upper, weight=weight).value

    full, classical, zero = run(ThermalWeight.FULL), run(ThermalWeight.CLASSICAL), run(ThermalWeight.ZERO)
    assert classical <= full * (1 + 1e-5)
    assert full <= (classical + zero) * (1 + 1e-5)


@pytest.mark.slow
def test_low_temperature_regime(wide_geometry):
    times = np.geomspace(2e-12, 2e-11, 6)
    curve = _curve(wide_geometry, 0.0, times)
    assert regime_slope(times, curve.values, wide_geometry) == pytest.approx(1.0, abs=0.15)
    closed = np.array([d_lowT_closed(t, wide_geometry) for t in times])
    assert np.all(np.abs(curve.values / closed - 1) <= 0.35)
    assert set(curve.to_frame()["regime"]) == {"linear"}


@pytest.mark.slow
def test_high_temperature_regime(wide_geometry):
    times = np.geomspace(2e-12, 2e-11, 6)
    warm = _curve(wide_geometry, 20.0, times)
    hot = _curve(wide_geometry, 40.0, times)
    th = ThermalState.for_geometry(20.0, wide_geometry)
    assert regime_slope(times, warm.values, wide_geometry, th, regime="quadratic") == pytest.approx(2.0, abs=0.2)
    assert np.all(np.abs(hot.values / warm.values - 2.0) <= 0.2)
    frame = warm.to_frame()
    assert np.all(np.abs(frame["D_quadrature"] / frame["D_Dfin"] - 1) <= 0.5)


@pytest.mark.slow
def test_saturation_plateau(wide_geometry):
    curve = _curve(wide_geometry, 0.0, np.geomspace(1e-7, 1e-6, 6))
    assert curve.plateau_ok
    assert curve.D_lim_quadrature / curve.D_lim == pytest.approx(1.085, rel=0.1)
    assert set(curve.to_frame()["regime"]) == {"saturated"}
