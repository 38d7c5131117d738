"""
Dissipation bounds: thermally activated conductivity, the low-frequency surface
impedance expansion and the cavity absorption time compared with R0/c.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from errors import DomainError, ExpansionError, ParameterError, RegimeError
from physical_model import CONSTANTS, MaterialParams, RingGeometry, ThermalState

GAP_SLOPE = 1.74
PERTURBATIVE_LIMIT = 0.1
NEGLIGIBLE_MARGIN = 1e4


def gap(T: float, mat: MaterialParams, constant_gap: bool = False) -> float:
    """Delta(T) = Delta0 tanh(1.74 sqrt(T_c/T - 1)), or Delta0 itself with constant_gap."""
    if constant_gap or T == 0:
        return mat.Delta0
    if T >= mat.T_c:
        return 0.0
    return mat.Delta0 * math.tanh(GAP_SLOPE * math.sqrt(mat.T_c / T - 1.0))


def conductivity(th: ThermalState, mat: MaterialParams, constant_gap: bool = False) -> float:
    """
    Thermally activated conductivity sigma = sigma_N exp(-Delta(T)/(k_B T)).

    Args:
        th: Temperature, 0 <= T < T_c; T = 0 gives the limiting value 0.
        mat: Material parameters.
        constant_gap: Use Delta0 at every temperature.

    Raises:
        DomainError: If T >= T_c.
    """
    if th.T >= mat.T_c:
        raise DomainError(f"T = {th.T} K >= T_c = {mat.T_c} K: not superconducting")
    if th.zero_temperature:
        return 0.0
    return mat.sigma_N * math.exp(-gap(th.T, mat, constant_gap) / (CONSTANTS.k_B * th.T))


def impedance_from_sigma(omega: float, sigma: float, delta: float) -> complex:
    """zeta = -i (w delta/c) [1 + 2 pi i w sigma delta^2 / c^2]."""
    expansion = 2.0 * math.pi * omega * sigma * delta**2 / CONSTANTS.c**2
    return -1j * (omega * delta / CONSTANTS.c) * (1.0 + 1j * expansion)


def absorption(omega: float, sigma: float, delta: float) -> float:
    """Real part of the surface impedance, 2 pi w^2 sigma delta^3 / c^3."""
    return 2.0 * math.pi * omega**2 * sigma * delta**3 / CONSTANTS.c**3


@dataclass(frozen=True)
class DissipationTime:
    tau: float
    margin: float

    @property
    def negligible(self) -> bool:
        return self.margin >= NEGLIGIBLE_MARGIN


def dissipation_time(zeta_R: float, R_cav: float, R0: float) -> DissipationTime:
    """
    Absorption time tau = R_cav/(c zeta_R) of radiation trapped in a cavity of
    radius R_cav, and its ratio to the ring light time R0/c.

    Raises:
        ParameterError: If R_cav <= R0 or zeta_R < 0.
    """
    if not R_cav > R0:
        raise ParameterError("R_cav", f"cavity radius {R_cav} must exceed the ring radius {R0}")
    if zeta_R < 0:
        raise ParameterError("zeta_R", "absorption cannot be negative")
    if zeta_R == 0:
        return DissipationTime(tau=math.inf, margin=math.inf)
    tau = R_cav / (CONSTANTS.c * zeta_R)
    return DissipationTime(tau=tau, margin=tau * CONSTANTS.c / R0)


@dataclass(frozen=True)
class ImpedanceReport:
    omega: float
    T: float
    sigma: float
    zeta: complex
    zeta_R: float
    tau: float
    R_cav: float
    margin: float

    @property
    def negligible(self) -> bool:
        return self.margin >= NEGLIGIBLE_MARGIN

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "T": self.T,
            "sigma": self.sigma,
            "zeta_real": self.zeta.real,
            "zeta_imag": self.zeta.imag,
            "zeta_R": self.zeta_R,
            "tau": self.tau,
            "R_cav": self.R_cav,
            "margin": self.margin,
            "negligible": self.negligible,
        }


def surface_impedance(
    omega: float,
    th: ThermalState,
    mat: MaterialParams,
    geom: RingGeometry,
    R_cav: Optional[float] = None,
    constant_gap: bool = False,
) -> ImpedanceReport:
    """
    Surface impedance of the ring material at one frequency and temperature.

    Args:
        omega: Frequency in 1/s, at most 0.1 c/R1.
        th: Temperature below T_c.
        mat: Material parameters.
        geom: Ring geometry (delta, R1, R0).
        R_cav: Cavity radius for the dissipation time; defaults to 3 R0.
        constant_gap: Use Delta0 at every temperature.

    Raises:
        RegimeError: If omega exceeds 0.1 c/R1 or a photon can break a Cooper pair.
        ExpansionError: If 2 pi w sigma delta^2/c^2 is not below 0.1.
    """
    if omega > geom.omega_uv_edge:
        raise RegimeError(f"omega = {omega:.4e} 1/s above 0.1 c/R1 = {geom.omega_uv_edge:.4e}")
    sigma = conductivity(th, mat, constant_gap)
    pair_gap = 2.0 * gap(th.T, mat, constant_gap)
    if CONSTANTS.hbar * omega >= pair_gap:
        raise RegimeError(
            f"hbar*omega = {CONSTANTS.hbar * omega:.3e} erg reaches 2 Delta(T) = {pair_gap:.3e} erg"
        )
    expansion = 2.0 * math.pi * omega * sigma * geom.delta**2 / CONSTANTS.c**2
    if expansion >= PERTURBATIVE_LIMIT:
        raise ExpansionError(f"expansion parameter {expansion:.3f} is not small")

    R_cav = 3.0 * geom.R0 if R_cav is None else R_cav
    zeta = impedance_from_sigma(omega, sigma, geom.delta)
    zeta_R = absorption(omega, sigma, geom.delta)
    timing = dissipation_time(zeta_R, R_cav, geom.R0)
    return ImpedanceReport(
        omega=omega,
        T=th.T,
        sigma=sigma,
        zeta=zeta,
        zeta_R=zeta_R,
        tau=timing.tau,
        R_cav=R_cav,
        margin=timing.margin,
    )


def temperature_sweep(
    omega: float,
    temperatures: Sequence[float],
    mat: MaterialParams,
    geom: RingGeometry,
    R_cav: Optional[float] = None,
    constant_gap: bool = False,
) -> pd.DataFrame:
    """Impedance reports over temperatures, one row each, with the negligibility verdict."""
    return _report_frame(
        surface_impedance(omega, ThermalState.for_geometry(float(T), geom), mat, geom, R_cav, constant_gap)
        for T in temperatures
    )


def frequency_sweep(
    omegas: Sequence[float],
    th: ThermalState,
    mat: MaterialParams,
    geom: RingGeometry,
    R_cav: Optional[float] = None,
    constant_gap: bool = False,
) -> pd.DataFrame:
    return _report_frame(
        surface_impedance(float(omega), th, mat, geom, R_cav, constant_gap) for omega in omegas
    )


def _report_frame(reports) -> pd.DataFrame:
    rows = []
    for report in reports:
        rows.append(report.to_dict())
        if not report.negligible:
            logging.warning(
                f"Dissipation margin {report.margin:.3e} at T = {report.T} K, omega = {report.omega:.3e} is not negligible"
            )
    return pd.DataFrame(rows)


def default_temperatures(mat: MaterialParams, points: int = 16, top: float = 0.8) -> np.ndarray:
    return np.linspace(top / points, top, points) * mat.T_c
