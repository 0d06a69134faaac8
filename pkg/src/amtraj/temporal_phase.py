"""Exact per-piece minimization of the objective over the duration."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .cost import ObjectiveConfig, RationalCost, rational_coefficients
from .exceptions import NumericalError
from .trajectory import BoundaryCondition
from .univar_roots import UnivariatePolynomial

__all__ = [
    "stationarity_polynomial",
    "stationarity_coefficients",
    "stationary_points",
    "optimal_piece_duration",
    "optimal_durations",
    "rational_cost_values",
    "ROOT_REL_TOL",
]

ROOT_REL_TOL = 1e-10


def stationarity_coefficients(alpha, p_n: int, rho: float) -> np.ndarray:
    """Coefficients of ``T^(1+p_n) dJ/dT`` for a stack of alpha rows."""
    alpha = np.atleast_2d(alpha)
    j = np.arange(alpha.shape[-1])
    L = max(alpha.shape[-1], p_n + 2)
    out = np.zeros(alpha.shape[:-1] + (L,))
    out[..., : alpha.shape[-1]] = (j - p_n) * alpha
    out[..., p_n + 1] += rho
    return out


def stationarity_polynomial(rc: RationalCost, rho: float | None = None) -> UnivariatePolynomial:
    """Polynomial whose positive roots are the stationary points of ``rc``:
    ``rho T^(1+p_n) + sum_j (j - p_n) alpha_j T^j``."""
    rho = rc.rho if rho is None else rho
    return UnivariatePolynomial(stationarity_coefficients(rc.alpha, rc.p_n, rho)[0])


def rational_cost_values(alpha, T, p_n: int, rho: float) -> np.ndarray:
    """Evaluate ``rho T + T^-p_n sum alpha_j T^j`` row-wise.

    ``alpha`` is ``(M, p_d+1)``, ``T`` broadcasts against ``(M, k)``.
    """
    alpha = np.atleast_2d(alpha)
    T = np.asarray(T, dtype=float)
    T2 = T if T.ndim == 2 else T[:, None]
    num = np.zeros(T2.shape)
    for j in range(alpha.shape[1] - 1, -1, -1):
        num = num * T2 + alpha[:, j:j + 1]
    out = rho * T2 + num / T2 ** p_n
    return out if T.ndim == 2 else out[:, 0]


def stationary_points(alpha, config: ObjectiveConfig):
    """Positive stationary points of each row's rational cost (``nan``-padded)."""
    C = stationarity_coefficients(alpha, config.p_n, config.rho)
    return K.batch_positive_roots(np.ascontiguousarray(C), ROOT_REL_TOL)


def optimal_durations(stacked, config: ObjectiveConfig) -> np.ndarray:
    """Global minimizer over ``(0, inf)`` of every piece's cost.

    ``stacked`` is ``(M, N+1, 3)``.  All stationary points are compared and
    the cheapest wins, the smaller duration on ties.
    """
    alpha = rational_coefficients(stacked, config)
    roots, counts = stationary_points(alpha, config)
    if np.any(counts == 0):
        bad = np.flatnonzero(counts == 0)
        raise NumericalError(f"pieces {bad.tolist()} have no finite optimal duration")
    J = rational_cost_values(alpha, np.where(np.isnan(roots), 1.0, roots), config.p_n, config.rho)
    J = np.where(np.isnan(roots), np.inf, J)
    # argmin returns the first (smallest-T) index among equal minima
    best = np.argmin(J, axis=1)
    return roots[np.arange(roots.shape[0]), best]


def optimal_piece_duration(bc: BoundaryCondition, config: ObjectiveConfig) -> float:
    """``argmin_{T > 0} J_m(T)`` for a single boundary condition."""
    return float(optimal_durations(bc.stacked()[None], config)[0])
