from pathlib import Path

import numpy as np
import pytest

from errors import QuadratureError
from run_config import RunConfig, load_config
from validation_suite import (
    FAILED,
    PASSED,
    SKIPPED,
    CheckResult,
    OracleContext,
    _guarded,
    _regime_times,
    check_binned_density,
    check_constants,
    check_dissipation,
    check_homogeneity,
    check_infrared,
    check_low_temperature,
    check_saturation,
    check_temperature_monotonicity,
    run_suite,
)


WIDE_CONFIG = Path(__file__).parent.parent / "configs" / "wide_hierarchy.json"


def _failing_check():
    raise QuadratureError("panel budget exhausted", estimate=1.0, error=0.5)


def test_guarded_maps_numerical_errors_to_failures():
    results = _guarded("quadrature", _failing_check)
    assert len(results) == 1
    assert results[0].status == FAILED
    assert results[0].detail["exit_code"] == 2


def test_guarded_keeps_lists_and_propagates_bugs():
    pair = [CheckResult("a", PASSED), CheckResult("b", SKIPPED)]
    assert _guarded("pair", lambda: pair) == pair
    with pytest.raises(ZeroDivisionError):
        _guarded("bug", lambda: 1 / 0)


def test_regime_times(default_geometry, wide_geometry):
    assert _regime_times(default_geometry) is None
    times = _regime_times(wide_geometry)
    assert len(times) == 6
    assert times[-1] == pytest.approx(10 * times[0])


def test_gate_failure_stops_the_suite(write_config):
    config = load_config(write_config('{"geometry": {"delta": 0.05}}'))
    results = run_suite(config)
    assert [r.name for r in results] == ["regime_gate"]
    assert results[0].status == FAILED


def test_config_level_checks_on_defaults():
    config = RunConfig()
    assert check_constants().status == PASSED
    assert check_infrared(config).status == PASSED
    assert check_homogeneity(config).status == PASSED
    assert check_temperature_monotonicity(config).status == PASSED
    assert check_dissipation(config).status == PASSED


def test_time_regime_checks_skip_for_small_hierarchy():
    config = RunConfig()
    assert check_low_temperature(config).status == SKIPPED
    saturation = check_saturation(config)
    assert saturation.status == SKIPPED
    assert "empty spectral window" in saturation.reason


def test_check_result_serialises():
    assert CheckResult("x", PASSED, {"v": np.float64(1.0)}).to_dict()["detail"] == {"v": 1.0}


@pytest.mark.slow
def test_low_temperature_check_on_wide_hierarchy():
    config = load_config(WIDE_CONFIG)
    result = check_low_temperature(config)
    assert result.status == PASSED
    assert result.detail["slope"] == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
def test_default_suite_has_no_failures():
    results = run_suite(RunConfig())
    assert results[0].name == "regime_gate"
    assert not [r.name for r in results if r.status == FAILED]


@pytest.mark.slow
def test_binned_density_check_runs_on_wide_hierarchy():
    result = check_binned_density(OracleContext(load_config(WIDE_CONFIG)))
    assert result.status == PASSED
    assert result.detail["bins"] >= 3
    assert result.detail["max_deviation"] <= 0.35
