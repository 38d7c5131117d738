"""
Azimuthally symmetric low-frequency modes around the straightened wire.

Two independent routes: the matched analytic form (boundary layer inside the
wire, J0/Y0 mixture outside) and a finite-volume radial eigensolver used as the
brute-force oracle for it.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import special
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.optimize import brentq

from errors import DomainError, OracleSolverError, ParameterError
from physical_model import CONSTANTS, RingGeometry

LOW_FREQUENCY_LIMIT = 0.1
FAR_ZONE_MIN = 3.0
LAYER_DEPTHS = 10
LAYER_STEPS_PER_DEPTH = 10
MIN_STEPS_PER_DEPTH = 8
DEFAULT_GRID_POINTS = 20000
SCAN_STEPS_PER_ZERO = 16
PEAK_SAMPLES = 2048
RESIDUAL_LIMIT = 1e-8


class Boundary(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


def exterior_coefficients(
    k, R1: float, delta: float, amplitude: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coefficients (b, c) of b*J0(k rho) + c*Y0(k rho) matching value and slope of
    the interior layer amplitude*exp((rho - R1)/delta) at rho = R1.

    The Wronskian J1*Y0 - J0*Y1 = 2/(pi x) makes the 2x2 solve explicit.
    """
    k = np.asarray(k, dtype=float)
    x = k * R1
    j0, j1 = special.j0(x), special.j1(x)
    y0, y1 = special.y0(x), special.y1(x)
    scale = 0.5 * math.pi * R1 * amplitude
    b = scale * (-k * y1 - y0 / delta)
    c = scale * (j0 / delta + k * j1)
    return b, c


def _boundary_function(k, geom: RingGeometry, boundary: Boundary):
    b, c = exterior_coefficients(k, geom.R1, geom.delta)
    x = np.asarray(k, dtype=float) * geom.R_norm
    if boundary is Boundary.DIRICHLET:
        value = b * special.j0(x) + c * special.y0(x)
    else:
        value = -(b * special.j1(x) + c * special.y1(x))
    return value / np.hypot(b, c)


def _check_low_frequency(k: float, geom: RingGeometry) -> None:
    if k * geom.R1 > LOW_FREQUENCY_LIMIT * (1 + 1e-12):
        raise DomainError(
            f"k*R1 = {k * geom.R1:.4g} exceeds {LOW_FREQUENCY_LIMIT}; "
            "the boundary-layer matching needs k*R1 << 1"
        )


def mode_wavenumbers(
    geom: RingGeometry, k_max: float, boundary: Boundary = Boundary.DIRICHLET
) -> np.ndarray:
    """
    Finds every wavenumber k <= k_max whose matched exterior solution satisfies
    the boundary condition at R_norm.

    Args:
        geom: Ring geometry; R_norm sets the normalisation tube.
        k_max: Upper end of the search, with k_max*R1 <= 0.1.
        boundary: Dirichlet (default) or Neumann condition at R_norm.

    Returns:
        Ascending array of wavenumbers in 1/cm, possibly empty.
    """
    boundary = Boundary(boundary)
    _check_low_frequency(k_max, geom)
    step = math.pi / (SCAN_STEPS_PER_ZERO * geom.R_norm)
    if k_max <= 0.5 * step:
        return np.empty(0)
    ks = np.append(np.arange(0.5 * step, k_max, step), k_max)
    values = _boundary_function(ks, geom, boundary)

    roots = []
    for i in range(len(ks) - 1):
        lo, hi = values[i], values[i + 1]
        if lo == 0.0:
            roots.append(float(ks[i]))
        elif lo * hi < 0.0:
            roots.append(
                brentq(
                    lambda k: float(_boundary_function(k, geom, boundary)),
                    ks[i],
                    ks[i + 1],
                    rtol=1e-13,
                )
            )
    if values[-1] == 0.0:
        roots.append(float(ks[-1]))
    return np.array(roots)


@dataclass(frozen=True)
class ModeSolution:
    """One matched analytic mode, normalised over a tube of radius R_norm and length L."""

    index: int
    k_n: float
    omega_n: float
    A_n: float
    B_n: float
    surface_value: float
    exterior_peak: float
    mass: float
    J_coeff: float
    Y_coeff: float
    R1: float
    delta: float
    R_norm: float
    L: float
    far_zone_ok: bool
    boundary: Boundary = Boundary.DIRICHLET

    def profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = self.A_n * np.exp(np.minimum(rho - self.R1, 0.0) / self.delta)
        x = self.k_n * np.maximum(rho, self.R1)
        outside = self.J_coeff * special.j0(x) + self.Y_coeff * special.y0(x)
        return np.where(rho < self.R1, inside, outside)

    def derivative_jump(self) -> float:
        """Exterior minus interior slope at rho = R1; zero up to round-off."""
        x = self.k_n * self.R1
        outer = -self.k_n * (self.J_coeff * special.j1(x) + self.Y_coeff * special.y1(x))
        return float(outer - self.A_n / self.delta)

    @property
    def surface_to_peak(self) -> float:
        return self.surface_value / self.exterior_peak

    def to_row(self) -> dict:
        return {
            "n": self.index,
            "k_n": self.k_n,
            "omega_n": self.omega_n,
            "A_n": self.A_n,
            "surface_value": self.surface_value,
        }


def analytic_mode(
    geom: RingGeometry,
    n: Optional[int] = None,
    target_k: Optional[float] = None,
    boundary: Boundary = Boundary.DIRICHLET,
) -> ModeSolution:
    """
    Builds the matched analytic mode either by index among the boundary-condition
    roots or directly at a given wavenumber.

    Args:
        geom: Ring geometry.
        n: 1-based mode index among mode_wavenumbers up to k*R1 = 0.1.
        target_k: Wavenumber to build the mode at instead of an indexed root.
        boundary: Boundary condition used when searching by index.

    Returns:
        The ModeSolution with A_n from the tube normalisation
        A_n = sqrt(k/(2 L R_norm)) * (delta/R1) / |ln(k R1)|.

    Raises:
        DomainError: If k*R1 > 0.1, ln(k R1) = 0 or the index is out of range.
    """
    boundary = Boundary(boundary)
    if (n is None) == (target_k is None):
        raise ParameterError("n", "give exactly one of n or target_k")

    if target_k is None:
        if n < 1:
            raise ParameterError("n", "mode index starts at 1")
        roots = mode_wavenumbers(geom, LOW_FREQUENCY_LIMIT / geom.R1, boundary)
        if n > len(roots):
            raise DomainError(f"only {len(roots)} modes below k*R1 = {LOW_FREQUENCY_LIMIT}")
        k = float(roots[n - 1])
        index = n
    else:
        k = float(target_k)
        if not k > 0:
            raise DomainError(f"wavenumber must be positive, got {k}")
        index = max(1, int(round(k * geom.R_norm / math.pi)))

    _check_low_frequency(k, geom)
    log_kR1 = math.log(k * geom.R1)
    if log_kR1 == 0.0:
        raise DomainError("k*R1 = 1 makes the exterior logarithm vanish")

    far_zone_ok = k * geom.R_norm >= FAR_ZONE_MIN
    if not far_zone_ok:
        logging.warning(
            f"k*R_norm = {k * geom.R_norm:.3g} < {FAR_ZONE_MIN}: no far zone inside the normalisation tube"
        )

    amplitude = math.sqrt(k / (2.0 * geom.L * geom.R_norm)) * (geom.delta / geom.R1) / abs(log_kR1)
    b, c = exterior_coefficients(k, geom.R1, geom.delta, amplitude)
    rho = np.unique(
        np.concatenate(
            (
                np.geomspace(geom.R1, geom.R_norm, PEAK_SAMPLES),
                np.linspace(geom.R1, geom.R_norm, PEAK_SAMPLES),
            )
        )
    )
    exterior = b * special.j0(k * rho) + c * special.y0(k * rho)

    return ModeSolution(
        index=index,
        k_n=k,
        omega_n=CONSTANTS.c * k,
        A_n=amplitude,
        B_n=amplitude * geom.R1 / geom.delta,
        surface_value=amplitude,
        exterior_peak=float(np.max(np.abs(exterior))),
        mass=1.0 / (4.0 * math.pi * CONSTANTS.c**2),
        J_coeff=float(b),
        Y_coeff=float(c),
        R1=geom.R1,
        delta=geom.delta,
        R_norm=geom.R_norm,
        L=geom.L,
        far_zone_ok=far_zone_ok,
        boundary=boundary,
    )


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes over [0, R_norm]: geometric in the core, uniform across the surface layer, geometric outside."""

    rho: np.ndarray
    R1: float
    delta: float
    layer_step: float

    @property
    def N(self) -> int:
        return len(self.rho)

    @property
    def R_norm(self) -> float:
        return float(self.rho[-1])

    def control_volumes(self) -> np.ndarray:
        """Per-node integral of rho d rho over the node's control volume; the last node gets a half cell."""
        half = 0.5 * (self.rho[:-1] + self.rho[1:])
        lo = np.concatenate(([0.0], half))
        hi = np.concatenate((half, [self.rho[-1]]))
        return 0.5 * (hi**2 - lo**2)

    def validate(self) -> None:
        if self.rho[0] != 0.0:
            raise ParameterError("rho", "grid must start on the axis")
        if np.any(np.diff(self.rho) <= 0):
            raise ParameterError("rho", "grid nodes must be strictly increasing")
        layer = (self.rho >= max(self.R1 - LAYER_DEPTHS * self.delta, 0.0)) & (self.rho <= self.R1)
        steps = np.diff(self.rho[layer])
        if steps.size == 0 or steps.max() > self.delta / MIN_STEPS_PER_DEPTH * (1 + 1e-9):
            raise ParameterError(
                "N", f"fewer than {MIN_STEPS_PER_DEPTH} points per London depth inside the wire"
            )


def build_radial_grid(geom: RingGeometry, N: int = DEFAULT_GRID_POINTS) -> RadialGrid:
    """
    Lays out the oracle grid with a uniform step delta/10 over [R1 - 10 delta, R1 + 10 delta].

    Args:
        geom: Ring geometry.
        N: Total number of nodes.

    Returns:
        A validated RadialGrid ending exactly at R_norm.
    """
    h = geom.delta / LAYER_STEPS_PER_DEPTH
    a = max(geom.R1 - LAYER_DEPTHS * geom.delta, 0.0)
    b = geom.R1 + LAYER_DEPTHS * geom.delta
    if b >= geom.R_norm:
        raise ParameterError("R_norm", "normalisation tube must enclose the surface layer")

    layer = a + h * np.arange(int(round((b - a) / h)) + 1)
    if a > h:
        core = a - np.geomspace(h, a, max(N // 10, 16))[::-1]
        core[0] = 0.0
    else:
        core = np.zeros(1) if a > 0 else np.empty(0)
    n_out = N - len(core) - len(layer)
    if n_out < 16:
        raise ParameterError("N", f"{N} points leave too few nodes outside the wire")
    outer = layer[-1] + np.geomspace(h, geom.R_norm - layer[-1], n_out)
    outer[-1] = geom.R_norm

    grid = RadialGrid(
        rho=np.concatenate((core, layer, outer)), R1=geom.R1, delta=geom.delta, layer_step=h
    )
    grid.validate()
    return grid


class OracleMode(NamedTuple):
    k_n: float
    eigenvector: np.ndarray


def _assemble(grid: RadialGrid, boundary: Boundary, with_wire: bool):
    rho = grid.rho
    half = 0.5 * (rho[:-1] + rho[1:])
    flux = half / np.diff(rho)
    volume = grid.control_volumes()
    stiffness = np.concatenate(([0.0], flux)) + np.concatenate((flux, [0.0]))

    lo = np.concatenate(([0.0], half))
    hi = np.concatenate((half, [rho[-1]]))
    if with_wire:
        inside = 0.5 * (np.minimum(hi, grid.R1) ** 2 - np.minimum(lo, grid.R1) ** 2)
        potential = inside / grid.delta**2
    else:
        potential = np.zeros_like(volume)

    n = grid.N - 1 if boundary is Boundary.DIRICHLET else grid.N
    volume = volume[:n]
    diag = (stiffness[:n] + potential[:n]) / volume
    off = -flux[: n - 1] / np.sqrt(volume[:-1] * volume[1:])
    return diag, off, volume


def fd_oracle_modes(
    geom: RingGeometry,
    grid: RadialGrid,
    count: int,
    boundary: Boundary = Boundary.DIRICHLET,
    with_wire: bool = True,
    rel_tol: float = 1e-10,
) -> List[OracleMode]:
    """
    Solves -(1/rho)(rho f')' + V f = k^2 f on the grid with V = 1/delta^2 inside
    the wire, regular at the axis and with the chosen condition at R_norm.

    The finite-volume operator is symmetrised by the square root of the control
    volumes and handed to Sturm-bisection plus inverse iteration.

    Args:
        geom: Ring geometry (L enters the normalisation).
        grid: Validated radial grid.
        count: Number of lowest eigenpairs to return.
        boundary: Condition at R_norm.
        with_wire: False drops the potential, leaving the free cylinder.
        rel_tol: Eigenvalue tolerance relative to (pi/R_norm)^2.

    Returns:
        Modes ordered by k, eigenvectors over grid.rho normalised so that
        the sum of 2 pi L f^2 over the control volumes equals 1.

    Raises:
        OracleSolverError: If the eigensolver fails or leaves a large residual.
    """
    boundary = Boundary(boundary)
    grid.validate()
    diag, off, volume = _assemble(grid, boundary, with_wire)
    if not 1 <= count <= len(diag):
        raise ParameterError("count", f"must lie in [1, {len(diag)}]")

    tol = rel_tol * (math.pi / grid.R_norm) ** 2
    try:
        w, v = eigh_tridiagonal(
            diag,
            off,
            select="i",
            select_range=(0, count - 1),
            tol=tol,
            lapack_driver="stebz",
        )
    except (LinAlgError, ValueError) as e:
        raise OracleSolverError(f"tridiagonal eigensolve failed: {e}")

    order = np.argsort(w)
    w, v = w[order], v[:, order]
    applied = diag[:, None] * v
    applied[:-1] += off[:, None] * v[1:]
    applied[1:] += off[:, None] * v[:-1]
    residual = float(np.max(np.linalg.norm(applied - v * w, axis=0)))
    scale = float(np.max(np.abs(diag)) + 2.0 * np.max(np.abs(off)))
    if residual > RESIDUAL_LIMIT * scale:
        raise OracleSolverError("inverse iteration did not converge", residual / scale)

    f = v / np.sqrt(volume)[:, None] / math.sqrt(2.0 * math.pi * geom.L)
    if boundary is Boundary.DIRICHLET:
        f = np.vstack((f, np.zeros((1, f.shape[1]))))

    modes = []
    for i in range(count):
        vector = f[:, i]
        reference = np.interp(grid.R1, grid.rho, vector) if with_wire else vector[0]
        if reference < 0:
            vector = -vector
        modes.append(OracleMode(k_n=float(math.sqrt(max(w[i], 0.0))), eigenvector=vector))
    logging.info(
        f"Oracle solved {count} {boundary.value} modes on {grid.N} nodes, "
        f"k in [{modes[0].k_n:.6g}, {modes[-1].k_n:.6g}] 1/cm"
    )
    return modes


def oracle_norm(mode: OracleMode, grid: RadialGrid, geom: RingGeometry) -> float:
    """
    Discrete normalisation integral of an oracle eigenvector.

    Args:
        mode: Oracle mode to weigh.
        grid: Grid the eigenvector lives on.
        geom: Supplies the box length L.

    Returns:
        2 pi L sum(V_i f_i^2) over the control volumes; 1 for a normalised mode.
    """
    return float(2.0 * math.pi * geom.L * np.sum(grid.control_volumes() * mode.eigenvector**2))


def weighted_overlaps(modes: List[OracleMode], grid: RadialGrid, geom: RingGeometry) -> np.ndarray:
    """Gram matrix of the modes in the discrete 2 pi L rho d rho inner product."""
    F = np.column_stack([m.eigenvector for m in modes])
    return 2.0 * math.pi * geom.L * F.T @ (grid.control_volumes()[:, None] * F)


def oracle_surface_value(mode: OracleMode, grid: RadialGrid) -> float:
    """Eigenvector interpolated at the wire surface rho = R1."""
    return float(np.interp(grid.R1, grid.rho, mode.eigenvector))


def interior_fraction(mode: OracleMode, grid: RadialGrid) -> float:
    """Share of the mode's weight lying inside the wire."""
    weight = grid.control_volumes() * mode.eigenvector**2
    return float(weight[grid.rho < grid.R1].sum() / weight.sum())


def interior_decay_length(mode: OracleMode, grid: RadialGrid) -> float:
    """Exponential decay length of the eigenvector between one and six London depths inside the wire."""
    window = (grid.rho >= grid.R1 - 6.0 * grid.delta) & (grid.rho <= grid.R1 - grid.delta)
    slope = np.polyfit(grid.rho[window], np.log(np.abs(mode.eigenvector[window])), 1)[0]
    return float(1.0 / slope)
