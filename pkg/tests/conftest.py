import pytest

from physical_model import MaterialParams, RingGeometry, ThermalState
from run_config import RunConfig


@pytest.fixture
def default_geometry():
    return RingGeometry(R0=1.0, R1=0.1, delta=1e-5, R_norm=0.3, R_sphere=1000.0)


@pytest.fixture
def wide_geometry():
    """R0/R1 = 1e6: every intermediate-time window is non-empty."""
    return RingGeometry(R0=100.0, R1=1e-4, delta=1e-6, R_norm=1.0, R_sphere=1e5)


@pytest.fixture
def material():
    return MaterialParams()


@pytest.fixture
def zero_temperature(wide_geometry):
    return ThermalState.for_geometry(0.0, wide_geometry)


@pytest.fixture
def default_config(tmp_path):
    return RunConfig().with_overrides(out=tmp_path)


@pytest.fixture
def write_config(tmp_path):
    def _write(payload: str, name: str = "run.json"):
        path = tmp_path / name
        path.write_text(payload)
        return path

    return _write
