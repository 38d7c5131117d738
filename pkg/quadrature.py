import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import IntegrationWarning, quad

from errors import QuadratureError

DEFAULT_ORDER = 16
DEFAULT_PANEL_BUDGET = 200_000
QAWO_LIMIT = 500


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int


def _panel_sums(func: Callable, a: np.ndarray, b: np.ndarray, nodes: np.ndarray, weights: np.ndarray):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    values = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
    return half * (values @ weights)


def panel_quadrature(
    func: Callable,
    edges: Sequence[float],
    rtol: float = 1e-6,
    atol: float = 0.0,
    order: int = DEFAULT_ORDER,
    max_panels: int = DEFAULT_PANEL_BUDGET,
) -> QuadratureResult:
    """
    Integrates a vectorised function over consecutive panels with Gauss-Legendre
    rules of two orders, bisecting panels until the summed order difference
    meets the tolerance.

    Args:
        func: Vectorised integrand.
        edges: Ascending panel edges; they are never merged, so callers can
            align them with features of the integrand.
        rtol: Relative tolerance on the total.
        atol: Absolute tolerance on the total.
        order: Points of the fine rule; the coarse rule uses half as many.
        max_panels: Budget of panel evaluations.

    Returns:
        QuadratureResult with the fine-rule value and the error estimate.

    Raises:
        QuadratureError: If the budget runs out before the tolerance is met.
    """
    fine_nodes, fine_weights = leggauss(order)
    coarse_nodes, coarse_weights = leggauss(order // 2)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    span = float(edges[-1] - edges[0])

    accepted, accepted_error = 0.0, 0.0
    panels = 0
    while a.size:
        panels += a.size
        fine = _panel_sums(func, a, b, fine_nodes, fine_weights)
        coarse = _panel_sums(func, a, b, coarse_nodes, coarse_weights)
        error = np.abs(fine - coarse)
        total = accepted + float(fine.sum())
        total_error = accepted_error + float(error.sum())
        tolerance = max(atol, rtol * abs(total))
        if total_error <= tolerance:
            return QuadratureResult(total, total_error, panels)

        good = error <= tolerance * (b - a) / span
        accepted += float(fine[good].sum())
        accepted_error += float(error[good].sum())
        a, b = a[~good], b[~good]
        if panels + 2 * a.size > max_panels:
            raise QuadratureError("panel budget exhausted", total, total_error)
        mid = 0.5 * (a + b)
        a, b = np.concatenate((a, mid)), np.concatenate((mid, b))

    return QuadratureResult(accepted, accepted_error, panels)


def cosine_weighted(func: Callable, lo: float, hi: float, t: float, atol: float) -> float:
    """Integral of func(x) cos(x t) over [lo, hi] by QUADPACK's Fourier-weighted rule."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, error = quad(
            func, lo, hi, weight="cos", wvar=t, limit=QAWO_LIMIT, epsabs=atol, epsrel=1e-8
        )
    if error > max(atol, 1e-8 * abs(value)):
        raise QuadratureError("oscillatory tail did not converge", value, error)
    logging.debug(f"Oscillatory tail on [{lo:.4e}, {hi:.4e}] = {value:.6e} +- {error:.2e}")
    return value
