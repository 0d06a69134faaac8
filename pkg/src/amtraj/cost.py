"""Time-regularized quadratic objective.

``J = rho * sum(T) + sum_i w_i * integral ||P^(i)(t)||^2 dt`` over penalized
orders ``i = d_min..d_max``.  Per piece the quadratic part is
``trace(d^T A(T)^-T Q(T) A(T)^-1 d)``; as a function of ``T`` alone it is
the rational function ``rho*T + T^-p_n * sum_j alpha_j T^j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionError
from .poly_core import _check_duration, falling_factorial, mapping_matrix_inverse, precompute_mapping_constants
from .trajectory import BoundaryCondition, Trajectory, assemble

__all__ = [
    "ObjectiveConfig",
    "RationalCost",
    "PartitionedQuadratic",
    "q_matrix",
    "piece_cost",
    "piece_cost_rational",
    "rational_coefficients",
    "piece_costs",
    "trajectory_cost",
    "total_cost",
    "partitioned_quadratic",
    "hessian_blocks",
]


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights of the objective.

    ``weights[k]`` multiplies the squared norm of derivative ``d_min + k``.
    """

    rho: float = 512.0
    d_min: int = 3
    d_max: int = 3
    weights: tuple[float, ...] = (1.0,)
    order: int = 5

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in np.atleast_1d(self.weights)))
        precompute_mapping_constants(self.order)
        if not 1 <= self.d_min <= self.d_max <= self.order:
            raise ValueError(f"need 1 <= d_min <= d_max <= N, got {self.d_min}, {self.d_max}")
        if len(self.weights) != self.d_max - self.d_min + 1:
            raise ValueError("one weight per penalized order is required")
        if any(w < 0 for w in self.weights) or not any(w > 0 for w in self.weights):
            raise ValueError("weights must be nonnegative with at least one positive")
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def p_n(self) -> int:
        return 2 * self.d_max - 1

    @property
    def p_d(self) -> int:
        return 2 * (self.d_max - self.d_min) + self.order - 1

    def penalized(self):
        return zip(range(self.d_min, self.d_max + 1), self.weights)


@dataclass(frozen=True, eq=False)
class RationalCost:
    """``J(T) = rho*T + T^-p_n * sum_{j<=p_d} alpha_j T^j`` for one piece."""

    alpha: np.ndarray
    p_n: int
    p_d: int
    rho: float

    def __call__(self, T):
        T = np.asarray(T, dtype=float)
        return self.rho * T + np.polynomial.polynomial.polyval(T, self.alpha) / T ** self.p_n

    def derivative(self, T):
        T = np.asarray(T, dtype=float)
        j = np.arange(self.alpha.size)
        return self.rho + np.polynomial.polynomial.polyval(T, (j - self.p_n) * self.alpha) / T ** (1 + self.p_n)


@lru_cache(maxsize=None)
def _q_terms(config: ObjectiveConfig):
    """Per penalized order: (constant matrix, exponent matrix) with
    ``Q(T) = sum coeff * T**expo``."""
    n = config.order + 1
    k = np.arange(n)
    terms = []
    for i, w in config.penalized():
        ff = np.array([falling_factorial(int(kk), i) for kk in k], dtype=float)
        expo = k[:, None] + k[None, :] - 2 * i + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = np.where((k[:, None] >= i) & (k[None, :] >= i),
                             w * ff[:, None] * ff[None, :] / expo, 0.0)
        terms.append((coeff, np.where(coeff != 0, expo, 0).astype(float)))
    return terms


def q_matrix(config: ObjectiveConfig, T) -> np.ndarray:
    """``Q(T) = sum_i w_i int_0^T beta^(i) beta^(i)T dt`` (closed form).

    ``T`` may be an array of durations, giving shape ``(M, N+1, N+1)``.
    """
    _check_duration(T)
    T = np.asarray(T, dtype=float)[..., None, None]
    return sum(c * T ** e for c, e in _q_terms(config))


@lru_cache(maxsize=None)
def _alpha_maps(config: ObjectiveConfig):
    """Constant matrices for the symbolic alpha accumulation.

    Returns ``(a, qc, scatter)`` where ``a = A(1)^-1``, ``qc`` stacks the
    constant parts of the ``Q_i`` and ``scatter`` maps ``(i, o, o')`` to the
    power ``2(d_max - i) + o + o'`` of the numerator.
    """
    consts = precompute_mapping_constants(config.order)
    S = consts.S
    qc = np.stack([c for c, _ in _q_terms(config)])
    orders = list(range(config.d_min, config.d_max + 1))
    scatter = np.zeros((len(orders), S, S, config.p_d + 1))
    for r, i in enumerate(orders):
        for o in range(S):
            for o2 in range(S):
                scatter[r, o, o2, 2 * (config.d_max - i) + o + o2] = 1.0
    return consts.ainv_coeff, qc, scatter.reshape(-1, config.p_d + 1)


def rational_coefficients(stacked, config: ObjectiveConfig) -> np.ndarray:
    """Alpha coefficients for a stack of boundary conditions.

    ``stacked`` has shape ``(..., N+1, 3)`` (start block over end block); the
    result has shape ``(..., p_d + 1)``.
    """
    a, qc, scatter = _alpha_maps(config)
    stacked = np.asarray(stacked, dtype=float)
    S = (config.order + 1) // 2
    if stacked.shape[-2] != 2 * S:
        raise DimensionError(f"boundary condition needs {2 * S} rows")
    start, end = stacked[..., :S, :], stacked[..., S:, :]
    # B[k, o] collects the coefficient of T^(o - k) in c_k
    B = a[:, :S, None] * start[..., None, :, :] + a[:, S:, None] * end[..., None, :, :]
    X = np.moveaxis(B, -1, -3)[..., None, :, :]
    # sum over axes of B^T Q_i B, shape (..., i, o, o')
    Mx = (np.swapaxes(X, -1, -2) @ (qc @ X)).sum(axis=-4)
    return Mx.reshape(*Mx.shape[:-3], -1) @ scatter


def piece_cost_rational(bc: BoundaryCondition, config: ObjectiveConfig) -> RationalCost:
    """Exact rational form of ``piece_cost(bc, T, config)`` in ``T``."""
    alpha = rational_coefficients(bc.stacked(), config)
    return RationalCost(alpha, config.p_n, config.p_d, config.rho)


def piece_cost(bc: BoundaryCondition, T: float, config: ObjectiveConfig) -> float:
    """``rho*T + trace(c^T Q(T) c)`` with ``c = A(T)^-1 d``."""
    consts = precompute_mapping_constants(config.order)
    c = mapping_matrix_inverse(consts, T) @ bc.stacked()
    return float(config.rho * T + np.einsum("ka,kl,la->", c, q_matrix(config, T), c))


def piece_costs(traj: Trajectory, config: ObjectiveConfig) -> np.ndarray:
    """Cost of every piece of ``traj`` (time term included)."""
    c = traj.coefficients
    Q = q_matrix(config, traj.durations)
    return config.rho * traj.durations + np.einsum("mka,mkl,mla->m", c, Q, c)


def trajectory_cost(traj: Trajectory, config: ObjectiveConfig) -> float:
    return float(piece_costs(traj, config).sum())


def total_cost(fixed, free, durations, fixed_mask, config: ObjectiveConfig) -> float:
    """``J(D_P, T)`` as the sum of per-piece costs."""
    traj = assemble(fixed, free, durations, fixed_mask, config.order, validate=False)
    return trajectory_cost(traj, config)


def hessian_blocks(durations, config: ObjectiveConfig) -> np.ndarray:
    """``A(T_m)^-T Q(T_m) A(T_m)^-1`` for every piece, shape ``(M, N+1, N+1)``."""
    consts = precompute_mapping_constants(config.order)
    Ainv = mapping_matrix_inverse(consts, np.asarray(durations, dtype=float))
    return np.swapaxes(Ainv, -1, -2) @ q_matrix(config, durations) @ Ainv


def axis_quadratic(durations, config: ObjectiveConfig, sparse: bool = False):
    """Per-axis ``R(T)`` over all waypoint blocks (size ``(M+1)S``).

    Piece ``m`` couples the contiguous index range ``[mS, mS + 2S)``.
    """
    H = hessian_blocks(durations, config)
    M = H.shape[0]
    S = H.shape[1] // 2
    n = (M + 1) * S
    if sparse:
        idx = np.arange(M)[:, None] * S + np.arange(2 * S)[None, :]
        rows = np.broadcast_to(idx[:, :, None], H.shape)
        cols = np.broadcast_to(idx[:, None, :], H.shape)
        return sp.csc_matrix((H.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))
    R = np.zeros((n, n))
    for m in range(M):
        R[m * S:m * S + 2 * S, m * S:m * S + 2 * S] += H[m]
    return R


@dataclass(frozen=True, eq=False)
class PartitionedQuadratic:
    """Blocks of ``R(T)`` over the flattened (waypoint, order, axis) ordering.

    ``fixed_index``/``free_index`` locate ``D_F``/``D_P`` entries in that
    ordering; the permutation itself is never formed.
    """

    R_FF: sp.csr_matrix
    R_FP: sp.csr_matrix
    R_PF: sp.csr_matrix
    R_PP: sp.csr_matrix
    fixed_index: np.ndarray = field(repr=False)
    free_index: np.ndarray = field(repr=False)

    def quadratic_form(self, fixed, free) -> float:
        f = np.asarray(fixed, dtype=float)
        p = np.asarray(free, dtype=float)
        return float(f @ (self.R_FF @ f) + 2.0 * p @ (self.R_PF @ f) + p @ (self.R_PP @ p))


def partitioned_quadratic(durations, fixed_mask, config: ObjectiveConfig) -> PartitionedQuadratic:
    mask = np.asarray(fixed_mask, dtype=bool)
    T = np.asarray(durations, dtype=float)
    if mask.shape[0] != T.size + 1:
        raise DimensionError("fixed_mask must cover M+1 waypoints")
    R_axis = axis_quadratic(T, config, sparse=True)
    R = sp.kron(R_axis, sp.identity(mask.shape[2]), format="csr")
    flat = mask.ravel()
    fi = np.flatnonzero(flat)
    pi = np.flatnonzero(~flat)
    return PartitionedQuadratic(R[fi][:, fi], R[fi][:, pi], R[pi][:, fi], R[pi][:, pi], fi, pi)
