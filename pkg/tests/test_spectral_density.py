import math

import numpy as np
import pytest

from cylinder_modes import Boundary, OracleMode, analytic_mode, build_radial_grid, mode_wavenumbers
from errors import ContractError, DomainError, FitError, ParameterError, SpectralRangeError
from physical_model import CONSTANTS, RingGeometry, single_flux_current
from spectral_density import (
    MODE_MASS,
    BinnedDensity,
    CurrentProfile,
    SpectralDensityModel,
    analytic_bin_average,
    binned_oracle_density,
    comparison_window,
    coupling,
    double_factorial,
    ir_coefficient_scaling,
    j_analytic,
    j_single_flux,
    legendre_norm,
    oracle_mode_budget,
    oracle_spectral_table,
    partial_wave_coefficients,
)

MODE_GEOMETRY = RingGeometry(R0=10.0, R1=1e-3, delta=1e-6, R_norm=1.0, R_sphere=1e4)


def _oracle_geometry(R_norm):
    return RingGeometry(R0=10.0, R1=1e-4, delta=1e-6, R_norm=R_norm, R_sphere=1e4)


def _oracle_spectrum(geom):
    grid = build_radial_grid(geom, 20000)
    current = CurrentProfile.for_geometry(geom, single_flux_current(geom))
    spectrum = oracle_spectral_table(geom, grid, current, oracle_mode_budget(geom, 400))
    return spectrum, analytic_bin_average(spectrum.table, geom, current.I_total)


@pytest.fixture(scope="module")
def narrow_tube():
    return _oracle_spectrum(_oracle_geometry(0.3))


@pytest.fixture(scope="module")
def wide_tube():
    return _oracle_spectrum(_oracle_geometry(0.6))


def test_current_profile_recovers_total_current(default_geometry):
    cur = CurrentProfile.for_geometry(default_geometry, 2.0)
    assert cur.recovered_current() == pytest.approx(2.0 * (1 - 1e-4), rel=1e-12)
    assert cur.density(0.2) == 0.0
    assert cur.density(0.1) == pytest.approx(2.0 / (2 * math.pi * 0.1 * 1e-5))


def test_j_analytic_value(default_geometry):
    I = single_flux_current(default_geometry)
    assert j_analytic(3e9, default_geometry, I, strict=False) == pytest.approx(3.675e-26, rel=1e-3)


def test_j_single_flux_matches_j_analytic(wide_geometry):
    omega = np.geomspace(1e9, 1e13, 7)
    I = single_flux_current(wide_geometry)
    assert np.allclose(j_single_flux(omega, wide_geometry), j_analytic(omega, wide_geometry, I), rtol=1e-10)


def test_j_analytic_scales_with_london_depth_squared(wide_geometry):
    thicker = RingGeometry(R0=100.0, R1=1e-4, delta=2e-6, R_norm=1.0, R_sphere=1e5)
    ratio = j_single_flux(1e11, thicker) / j_single_flux(1e11, wide_geometry)
    assert ratio == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("omega, strict", [(1e14, False), (1e8, True), (-1.0, False)])
def test_j_analytic_band_edges(omega, strict, wide_geometry):
    with pytest.raises(SpectralRangeError):
        j_analytic(omega, wide_geometry, 1.0, strict=strict)


def test_analytic_mode_sum_reproduces_closed_form():
    I = 1.0
    cur = CurrentProfile.for_geometry(MODE_GEOMETRY, I)
    for k in mode_wavenumbers(MODE_GEOMETRY, 90.0)[10::10]:
        mode = analytic_mode(MODE_GEOMETRY, target_k=k)
        qC = coupling(mode, cur, MODE_GEOMETRY)
        mode_density = MODE_GEOMETRY.R_norm / (math.pi * CONSTANTS.c)
        single = 0.5 * math.pi * qC**2 / (MODE_MASS * mode.omega_n) * mode_density
        assert qC < 0
        assert single == pytest.approx(j_analytic(mode.omega_n, MODE_GEOMETRY, I), rel=5e-3)


def test_coupling_needs_grid_for_oracle_modes(default_geometry):
    cur = CurrentProfile.for_geometry(default_geometry, 1.0)
    with pytest.raises(ContractError):
        coupling(OracleMode(k_n=1.0, eigenvector=np.zeros(3)), cur, default_geometry)


def test_binned_density_counts_and_conserves_weight():
    omegas = np.arange(1, 101, dtype=float)
    couplings = np.ones_like(omegas)
    table = binned_oracle_density(omegas, couplings, 5.0, origin=0.5)
    assert len(table.values) == 20
    assert np.allclose(table.mode_counts, 5.0)
    assert table.valid.all()
    weights = 0.5 * math.pi / (MODE_MASS * omegas)
    assert np.sum(table.values * 5.0) == pytest.approx(weights.sum(), rel=1e-12)
    assert table.evaluate(1e6) == 0.0
    assert table.evaluate(3.0) == pytest.approx(table.values[0])


def test_binned_density_flags_sparse_bins():
    omegas = np.arange(1, 101, dtype=float)
    table = binned_oracle_density(omegas, np.ones_like(omegas), 5.0, min_modes=6, origin=0.5)
    assert not table.valid.any()
    assert table.evaluate(50.0) == 0.0
    frame = table.to_frame()
    assert list(frame.columns) == ["omega_lo", "omega_hi", "J_binned", "mode_count", "valid"]


@pytest.mark.parametrize("omegas, width", [([1.0], 1.0), ([1.0, 2.0], 0.0)])
def test_binned_density_rejects_bad_input(omegas, width):
    with pytest.raises(ParameterError):
        binned_oracle_density(omegas, np.ones(len(omegas)), width)


def test_model_sectors(wide_geometry):
    model = SpectralDensityModel(wide_geometry)
    match = model.omega_match
    assert match == pytest.approx(wide_geometry.omega_c)
    assert model(match * (1 - 1e-9)) == pytest.approx(model(match), rel=1e-6)
    assert model(match / 4) / model(match / 2) == pytest.approx(1 / 8, rel=1e-12)
    assert model(wide_geometry.omega_uv_edge * 1.01) == 0.0
    assert list(model.sector([match / 2, 2 * match, 2 * wide_geometry.omega_uv_edge])) == ["ir", "mid", "uv_cutoff"]


def test_model_without_infrared_sector(wide_geometry):
    model = SpectralDensityModel(wide_geometry, ir_sector=False)
    assert model(wide_geometry.omega_c / 2) == 0.0


def test_model_dq_multiplier(wide_geometry):
    base = SpectralDensityModel(wide_geometry)
    doubled = SpectralDensityModel(wide_geometry, dq_multiplier=2.0)
    assert doubled(1e11) == pytest.approx(4 * base(1e11), rel=1e-12)


def test_model_rejects_omega_max_above_edge(wide_geometry):
    with pytest.raises(ParameterError) as e:
        SpectralDensityModel(wide_geometry, omega_max=2 * wide_geometry.omega_uv_edge)
    assert e.value.field == "omega_max"


def test_model_low_cutoff_moves_matching_point(wide_geometry):
    model = SpectralDensityModel(wide_geometry, omega_max=wide_geometry.omega_c / 2)
    assert model.omega_match == model.omega_max
    assert model.breakpoints() == [model.omega_max, model.omega_max]
    assert model.to_dict()["mode"] == "analytic"


def test_model_uses_table(wide_geometry):
    edges = np.array([1e9, 2e9, 3e9])
    table = BinnedDensity(edges=edges, values=np.array([1.0, 2.0]), mode_counts=np.array([6.0, 2.0]))
    model = SpectralDensityModel(wide_geometry, table=table)
    assert model.mode == "binned"
    assert model(1.5e9) == 1.0
    assert model(2.5e9) == 0.0
    assert model.covers(1e9, 2e9)
    assert not model.covers(1e9, 3e9)


def test_partial_wave_helpers():
    assert double_factorial(5) == 15
    assert double_factorial(0) == 1
    assert double_factorial(-1) == 1
    assert legendre_norm(1) == pytest.approx(4 / 3)


def test_partial_wave_has_no_monopole(default_geometry):
    with pytest.raises(ParameterError):
        partial_wave_coefficients(0.05, 0, default_geometry)


@pytest.mark.parametrize("l, slope", [(1, 2.0), (2, 3.0)])
def test_infrared_coefficient_scaling(l, slope, default_geometry):
    result = ir_coefficient_scaling(default_geometry, np.geomspace(0.012, 0.095, 8), l=l)
    assert result.slope == pytest.approx(slope, abs=0.05)
    if l == 1:
        assert result.j_exponent == pytest.approx(3.0, abs=0.05)
        assert result.phase_slope == pytest.approx(3.0, abs=0.05)
    assert set(result.to_dict()) == {"l", "F_exponent", "J_exponent", "phase_shift_exponent", "k", "F"}


def test_infrared_scaling_needs_enough_points(default_geometry):
    with pytest.raises(FitError):
        ir_coefficient_scaling(default_geometry, [0.02, 0.03, 0.04])


def test_infrared_scaling_stays_in_window(default_geometry):
    with pytest.raises(DomainError):
        ir_coefficient_scaling(default_geometry, [0.02, 0.03, 0.04, 1.0])


def test_oracle_table_drops_zero_mode(default_geometry):
    grid = build_radial_grid(default_geometry, 20000)
    cur = CurrentProfile.for_geometry(default_geometry, 1.0)
    spectrum = oracle_spectral_table(default_geometry, grid, cur, 20, boundary=Boundary.NEUMANN, with_wire=False)
    assert spectrum.k[0] < 1e-2 * spectrum.k[1]
    assert spectrum.table.mode_counts.sum() == pytest.approx(19.0)


def test_oracle_mode_budget(default_geometry):
    assert oracle_mode_budget(default_geometry, 400) == 6
    assert oracle_mode_budget(_oracle_geometry(0.3), 50) == 50


@pytest.mark.slow
def test_binned_oracle_density_matches_closed_form(narrow_tube):
    spectrum, analytic = narrow_tube
    window = comparison_window(spectrum.table, _oracle_geometry(0.3))
    assert window.sum() >= 3
    ratio = spectrum.table.values[window] / analytic[window]
    assert np.all(np.abs(ratio - 1) <= 0.35)


@pytest.mark.slow
def test_binned_oracle_density_independent_of_tube(narrow_tube, wide_tube):
    narrow, wide = narrow_tube[0].table, wide_tube[0].table
    window = comparison_window(narrow, _oracle_geometry(0.3))
    assert window.any()
    for i in np.flatnonzero(window):
        lo, hi = narrow.edges[i], narrow.edges[i + 1]
        halves = wide.evaluate([lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)])
        assert np.all(halves > 0)
        assert narrow.values[i] == pytest.approx(halves.mean(), rel=0.05)


@pytest.mark.slow
def test_binned_oracle_density_stable_under_bin_halving(wide_tube):
    geom = _oracle_geometry(0.6)
    spectrum, fine_reference = wide_tube
    fine = spectrum.table
    spacing = math.pi * CONSTANTS.c / geom.R_norm
    coarse = binned_oracle_density(CONSTANTS.c * spectrum.k, spectrum.couplings, 12.0 * spacing)
    I = single_flux_current(geom)
    coarse_ratio = coarse.values / analytic_bin_average(coarse, geom, I)
    fine_ratio = fine.values / fine_reference
    fine_window = comparison_window(fine, geom)
    window = comparison_window(coarse, geom)
    assert window.any()
    for i in np.flatnonzero(window):
        lo, hi = coarse.edges[i], coarse.edges[i + 1]
        inside = fine_window & (fine.edges[:-1] >= lo * (1 - 1e-9)) & (fine.edges[1:] <= hi * (1 + 1e-9))
        assert inside.sum() == 2
        assert np.allclose(fine_ratio[inside], coarse_ratio[i], rtol=0.05)
