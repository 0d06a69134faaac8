"""Monomial basis and the boundary-condition <-> coefficient mapping.

A piece of odd order ``N`` is ``p(t) = c^T beta(t)`` with
``beta(t) = (1, t, ..., t^N)``.  Stacking the derivatives of orders
``0..S-1`` (``S = (N+1)/2``) at ``t = 0`` and ``t = T`` gives the square
mapping ``(d_start; d_end) = A(T) c``.  Every entry of ``A(T)`` and of its
inverse is a constant times a single power of ``T``, so both are assembled
from a few constant ``S x S`` matrices computed once per order.

Coefficients are stored in ascending powers of ``t`` everywhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import prod

import numpy as np

from .exceptions import InvalidDurationError, InvalidOrderError

__all__ = [
    "MappingConstants",
    "precompute_mapping_constants",
    "eval_basis",
    "mapping_matrix",
    "mapping_matrix_inverse",
    "falling_factorial",
]


def falling_factorial(k: int, i: int) -> int:
    """``k (k-1) ... (k-i+1)``, the factor produced by ``d^i/dt^i t^k``."""
    if i > k:
        return 0
    return prod(range(k - i + 1, k + 1))


def _exact_inverse(matrix: list[list[int]]) -> list[list[Fraction]]:
    """Gauss-Jordan over the rationals; ``matrix`` must be square and nonsingular."""
    n = len(matrix)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True, eq=False)
class MappingConstants:
    """Constant matrices for one odd order ``N``.

    ``E, F, G, U, V, W`` are the ``S x S`` blocks such that

    ``A(T)    = [[E, 0], [F_ij T^(j-i), G_ij T^(S-i+j)]]``
    ``A(T)^-1 = [[U, 0], [V_ij T^(j-i-S), W_ij T^(j-i-S)]]``

    (1-based ``i, j``).  The full-size ``*_coeff``/``*_expo`` arrays hold the
    same information flattened so that ``A(T) = a_coeff * T**a_expo``.
    """

    N: int
    S: int
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    a_coeff: np.ndarray = field(repr=False)
    a_expo: np.ndarray = field(repr=False)
    ainv_coeff: np.ndarray = field(repr=False)
    ainv_expo: np.ndarray = field(repr=False)
    # per-row derivative order of the stacked boundary vector (0..S-1, 0..S-1)
    bc_orders: np.ndarray = field(repr=False)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def precompute_mapping_constants(N: int) -> MappingConstants:
    """Build the mapping constants for odd order ``N >= 3``.

    ``W = G^-1`` is computed exactly over the rationals and only then
    converted to floating point.
    """
    if not isinstance(N, (int, np.integer)) or N < 3 or N % 2 == 0:
        raise InvalidOrderError(f"polynomial order must be odd and >= 3, got {N!r}")
    N = int(N)
    if N > 9:
        warnings.warn(f"order N={N} is experimental; powers of T are badly conditioned",
                      stacklevel=2)
    S = (N + 1) // 2
    idx = range(1, S + 1)
    E = [[prod(range(1, i)) if i == j else 0 for j in idx] for i in idx]
    F = [[prod(range(j - i + 1, j)) if i <= j else 0 for j in idx] for i in idx]
    G = [[prod(range(S - i + j + 1, S + j)) for j in idx] for i in idx]
    U = [[Fraction(1, prod(range(1, i))) if i == j else Fraction(0) for j in idx] for i in idx]
    W = _exact_inverse(G)
    FU = [[sum(F[i][k] * U[k][j] for k in range(S)) for j in range(S)] for i in range(S)]
    V = [[-sum(W[i][k] * FU[k][j] for k in range(S)) for j in range(S)] for i in range(S)]

    def to_array(m):
        return np.array([[float(v) for v in row] for row in m])

    E_, F_, G_, U_, V_, W_ = map(to_array, (E, F, G, U, V, W))

    n = N + 1
    i1 = np.arange(1, S + 1)[:, None]
    j1 = np.arange(1, S + 1)[None, :]
    a_coeff = np.zeros((n, n))
    a_expo = np.zeros((n, n))
    a_coeff[:S, :S] = E_
    a_coeff[S:, :S] = F_
    a_coeff[S:, S:] = G_
    a_expo[S:, :S] = np.where(F_ != 0, j1 - i1, 0)
    a_expo[S:, S:] = S - i1 + j1

    ainv_coeff = np.zeros((n, n))
    ainv_expo = np.zeros((n, n))
    ainv_coeff[:S, :S] = U_
    ainv_coeff[S:, :S] = V_
    ainv_coeff[S:, S:] = W_
    ainv_expo[S:, :S] = j1 - i1 - S
    ainv_expo[S:, S:] = j1 - i1 - S

    bc_orders = np.concatenate([np.arange(S), np.arange(S)])
    return MappingConstants(
        N, S, *map(_readonly, (E_, F_, G_, U_, V_, W_)),
        a_coeff=_readonly(a_coeff), a_expo=_readonly(a_expo),
        ainv_coeff=_readonly(ainv_coeff), ainv_expo=_readonly(ainv_expo),
        bc_orders=_readonly(bc_orders),
    )


def eval_basis(N: int, i: int, t: float) -> np.ndarray:
    """Return ``beta^(i)(t)``; entry ``k`` is ``d^i/dt^i t^k`` at ``t``."""
    if i < 0:
        raise ValueError("derivative order must be nonnegative")
    out = np.zeros(N + 1)
    for k in range(i, N + 1):
        out[k] = falling_factorial(k, i) * float(t) ** (k - i)
    return out


def _check_duration(T) -> None:
    T = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(T)) or np.any(T <= 0.0):
        raise InvalidDurationError(f"durations must be finite and positive, got {T}")


def mapping_matrix(constants: MappingConstants, T: float) -> np.ndarray:
    """``A(T)``: maps coefficients to the stacked boundary derivatives."""
    _check_duration(T)
    return constants.a_coeff * float(T) ** constants.a_expo


def mapping_matrix_inverse(constants: MappingConstants, T) -> np.ndarray:
    """Analytic ``A(T)^-1``.

    ``T`` may be a scalar or a 1-D array of durations; in the latter case a
    stack of inverses with shape ``(M, N+1, N+1)`` is returned.
    """
    _check_duration(T)
    T = np.asarray(T, dtype=float)
    return constants.ainv_coeff * T[..., None, None] ** constants.ainv_expo
