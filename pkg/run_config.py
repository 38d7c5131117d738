"""Schema of the JSON run configuration; defaults reproduce the estimate parameter set."""

import math
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from decoherence_engine import CutoffPolicy, IRMode
from errors import ConfigError
from physical_model import CONSTANTS, MaterialParams, RingGeometry, ThermalState

DISSIPATION_OMEGA = 1e11


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Block):
    R0: float = Field(1.0, gt=0, allow_inf_nan=False)
    R1: float = Field(0.1, gt=0, allow_inf_nan=False)
    delta: float = Field(1e-5, gt=0, allow_inf_nan=False)
    R_norm: float = Field(0.3, gt=0, allow_inf_nan=False)
    R_sphere: float = Field(1000.0, gt=0, allow_inf_nan=False)
    omega_min_factor: float = Field(math.pi, gt=0, allow_inf_nan=False)
    film_thickness: Optional[float] = Field(None, gt=0, allow_inf_nan=False)


class MaterialConfig(_Block):
    sigma_N: float = Field(1e18, gt=0, allow_inf_nan=False)
    T_c: float = Field(9.2, gt=0, allow_inf_nan=False)
    Delta0: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    constant_gap: bool = False


class ThermalConfig(_Block):
    T: float = Field(1.0, ge=0, allow_inf_nan=False)


class TimeGrid(_Block):
    """Log-spaced time grid; unset ends default to 3 R1/c and 300 R0/c."""

    t_start: Optional[float] = Field(None, gt=0)
    t_stop: Optional[float] = Field(None, gt=0)
    t_points: int = Field(60, ge=2)
    times: Optional[List[float]] = None


class NumericsConfig(_Block):
    grid_points: int = Field(20000, ge=1000)
    bin_width_modes: float = Field(6.0, gt=0)
    min_modes_per_bin: float = Field(5.0, gt=0)
    max_modes: int = Field(400, ge=8)
    quad_rtol: float = Field(1e-6, gt=0, lt=1e-2)
    n_oscillations: int = Field(200, ge=4)
    log_accuracy: float = Field(0.35, gt=0)
    saturation_factor: float = Field(3.0, gt=1)
    ir_mode: Literal["cutoff", "omega3"] = "cutoff"
    boundary: Literal["dirichlet", "neumann"] = "dirichlet"
    log_override: bool = False
    dq_multiplier: float = Field(1.0, ge=0)
    omega_max: Optional[float] = Field(None, gt=0)
    time_grid: TimeGrid = TimeGrid()
    spectrum_points: int = Field(200, ge=2)
    ir_k_points: int = Field(8, ge=4)
    cavity_radius: Optional[float] = Field(None, gt=0)
    dissipation_omega: Optional[float] = Field(None, gt=0)
    sweep_parameter: Literal["T", "delta", "R1", "R0"] = "T"
    sweep_values: List[float] = [0.0, 0.5, 1.0, 2.0, 4.0]


class OutputConfig(_Block):
    directory: Path = Path("out")
    formats: List[Literal["csv", "json"]] = ["csv", "json"]
    si_report: bool = True


class RunConfig(_Block):
    geometry: GeometryConfig = GeometryConfig()
    material: MaterialConfig = MaterialConfig()
    thermal: ThermalConfig = ThermalConfig()
    numerics: NumericsConfig = NumericsConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _time_grid_ordered(self):
        grid = self.numerics.time_grid
        if grid.t_start is not None and grid.t_stop is not None and grid.t_stop <= grid.t_start:
            raise ValueError("numerics.time_grid.t_stop must exceed t_start")
        return self

    def ring_geometry(self) -> RingGeometry:
        return RingGeometry(**self.geometry.model_dump())

    def material_params(self) -> MaterialParams:
        return MaterialParams(
            sigma_N=self.material.sigma_N, T_c=self.material.T_c, Delta0=self.material.Delta0
        )

    def thermal_state(self) -> ThermalState:
        return ThermalState.for_geometry(self.thermal.T, self.ring_geometry())

    def cutoff_policy(self) -> CutoffPolicy:
        return CutoffPolicy(ir_mode=IRMode(self.numerics.ir_mode), omega_max=self.numerics.omega_max)

    def times(self) -> np.ndarray:
        grid = self.numerics.time_grid
        if grid.times is not None:
            return np.asarray(grid.times, dtype=float)
        geom = self.ring_geometry()
        start = grid.t_start if grid.t_start is not None else 3.0 * geom.R1 / CONSTANTS.c
        stop = grid.t_stop if grid.t_stop is not None else 300.0 * geom.R0 / CONSTANTS.c
        return np.geomspace(start, stop, grid.t_points)

    def cavity_radius(self) -> float:
        if self.numerics.cavity_radius is not None:
            return self.numerics.cavity_radius
        return 3.0 * self.geometry.R0

    def dissipation_omega(self) -> float:
        if self.numerics.dissipation_omega is not None:
            return self.numerics.dissipation_omega
        return min(DISSIPATION_OMEGA, self.ring_geometry().omega_uv_edge)

    def with_overrides(
        self,
        out: Optional[Path] = None,
        log_override: Optional[bool] = None,
        ir_mode: Optional[str] = None,
        boundary: Optional[str] = None,
    ) -> "RunConfig":
        """Copy with CLI flags applied; None leaves a setting untouched."""
        numerics = {
            key: value
            for key, value in (("log_override", log_override), ("ir_mode", ir_mode), ("boundary", boundary))
            if value is not None
        }
        data = self.model_dump()
        data["numerics"].update(numerics)
        if out is not None:
            data["output"]["directory"] = out
        return _validate(data)

    def with_parameter(self, name: str, value: float) -> "RunConfig":
        """Copy with one sweepable parameter replaced: T or a geometry length."""
        data = self.model_dump()
        if name == "T":
            data["thermal"]["T"] = value
        else:
            data["geometry"][name] = value
        return _validate(data)


def _validate(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}")


def load_config(path: Optional[Path] = None) -> RunConfig:
    """
    Reads a JSON configuration, or returns the defaults when no path is given.

    Raises:
        ConfigError: If the file is missing, not JSON, or fails the schema.
    """
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}: {e}")
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration {path}: {e}")
