import math
from unittest.mock import patch

import pytest

from errors import DomainError, ParameterError, RegimeError
from physical_model import (
    CONSTANTS,
    MaterialParams,
    RingGeometry,
    ThermalState,
    flux_current,
    gauss_cm2_to_tesla_m2,
    regime_passes,
    require_regime,
    single_flux_current,
    statampere_to_ampere,
    thermal_crossover_time,
    validate_regime,
)


def test_constants_identities():
    assert CONSTANTS.alpha_EM == pytest.approx(1 / 137.036, rel=1e-4)
    assert CONSTANTS.Phi0 == pytest.approx(2.0678e-7, rel=1e-4)


def test_geometry_defaults():
    geom = RingGeometry(R0=1.0, R1=0.1, delta=1e-5)
    assert geom.R_norm == pytest.approx(math.sqrt(0.1))
    assert geom.R_sphere == 1000.0
    assert geom.L == pytest.approx(2 * math.pi)
    assert geom.omega_min == pytest.approx(math.pi * CONSTANTS.c)
    assert geom.omega_uv_edge == pytest.approx(CONSTANTS.c)


def test_validate_regime_default_passes(default_geometry):
    diagnostics = validate_regime(default_geometry)
    assert regime_passes(diagnostics)
    ratios = {d.name: d.ratio for d in diagnostics}
    assert ratios["delta<R1"] == pytest.approx(1e-4)
    assert ratios["R1<R0"] == pytest.approx(0.1)


def test_validate_regime_thick_london_layer_fails():
    diagnostics = validate_regime(RingGeometry(R0=1.0, R1=0.1, delta=0.1, R_norm=0.3))
    failed = {d.name for d in diagnostics if not d.passed}
    assert "delta<R1" in failed


def test_validate_regime_ratio_rule():
    diagnostics = validate_regime(RingGeometry(R0=1.0, R1=0.3, delta=1e-5, R_norm=0.5))
    failed = {d.name for d in diagnostics if not d.passed}
    assert failed == {"R1/R0<=0.2"}


def test_require_regime_names_r1():
    with pytest.raises(RegimeError, match="R1<R0"):
        require_regime(RingGeometry(R0=1.0, R1=2.0, delta=1e-5, R_norm=3.0))


def test_validate_regime_rejects_non_positive_field():
    with pytest.raises(ParameterError) as e:
        validate_regime(RingGeometry(R0=1.0, R1=0.1, delta=-1.0))
    assert e.value.field == "delta"


@pytest.mark.parametrize("thickness, passed", [(5e-5, False), (2e-4, True)])
def test_film_thickness_diagnostic(thickness, passed):
    geom = RingGeometry(R0=1.0, R1=0.1, delta=1e-5, R_norm=0.3, film_thickness=thickness)
    film = [d for d in validate_regime(geom) if d.name == "film_thickness>=10*delta"]
    assert film[0].passed is passed


def test_thermal_state_at_one_kelvin(default_geometry):
    th = ThermalState.for_geometry(1.0, default_geometry)
    assert th.u == pytest.approx(1.39, abs=0.01)
    assert th.hbar_beta == pytest.approx(7.638e-12, rel=1e-3)
    assert thermal_crossover_time(ThermalState.for_geometry(2.0, default_geometry)) == pytest.approx(
        th.hbar_beta / 2
    )


def test_thermal_state_zero_temperature(default_geometry):
    th = ThermalState.for_geometry(0.0, default_geometry)
    assert th.beta is None
    assert th.hbar_beta is None
    assert th.u == 0.0
    assert thermal_crossover_time(th) == math.inf


def test_thermal_state_rejects_negative_temperature(default_geometry):
    with pytest.raises(ParameterError) as e:
        ThermalState.for_geometry(-1.0, default_geometry)
    assert e.value.field == "T"


def test_material_defaults_and_gap_ratio():
    mat = MaterialParams()
    assert mat.Delta0 == pytest.approx(1.764 * CONSTANTS.k_B * 9.2)
    with pytest.raises(ParameterError, match="Delta0"):
        MaterialParams(Delta0=0.5 * CONSTANTS.k_B * 9.2)


@patch("physical_model.logging.debug")
def test_single_flux_current(mock_debug, default_geometry):
    current = single_flux_current(default_geometry)
    assert current == pytest.approx(119.14, rel=1e-3)
    assert statampere_to_ampere(current) == pytest.approx(3.97e-8, rel=1e-2)
    mock_debug.assert_called_once()


def test_single_flux_current_decreases_with_ring_size():
    small = single_flux_current(RingGeometry(R0=1.0, R1=0.1, delta=1e-5, R_norm=0.3))
    large = single_flux_current(RingGeometry(R0=2.0, R1=0.1, delta=1e-5, R_norm=0.3))
    assert large < small / 1.9


def test_flux_current_unit_logarithm():
    L = 2 * math.pi
    assert flux_current(L, L / math.e) == pytest.approx(CONSTANTS.c * CONSTANTS.Phi0 / (2 * L))


def test_flux_current_rejects_short_loop():
    with pytest.raises(DomainError):
        flux_current(1.0, 2.0)


def test_single_flux_current_regime_switch():
    geom = RingGeometry(R0=1.0, R1=0.5, delta=1e-5, R_norm=0.7)
    with pytest.raises(RegimeError):
        single_flux_current(geom)
    assert single_flux_current(geom, enforce_regime=False) > 0


def test_si_helpers():
    assert statampere_to_ampere(2.99792458e9) == pytest.approx(1.0)
    assert gauss_cm2_to_tesla_m2(1e8) == pytest.approx(1.0)
