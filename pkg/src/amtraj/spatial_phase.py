"""Closed-form minimization of the objective over the free derivatives."""

from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .cost import ObjectiveConfig, axis_quadratic, partitioned_quadratic
from .exceptions import DimensionError, SingularSystemError

__all__ = ["optimal_free_derivatives", "DENSE_LIMIT"]

# per-axis systems smaller than this are solved densely
DENSE_LIMIT = 200


def _solve(A, B):
    try:
        if isinstance(A, np.ndarray):
            X = la.solve(A, B, assume_a="pos", check_finite=False)
        else:
            X = spla.splu(A.tocsc(), permc_spec="COLAMD").solve(np.asarray(B, dtype=float))
    except (la.LinAlgError, RuntimeError, ValueError) as exc:
        raise SingularSystemError(f"free-derivative system is singular: {exc}") from exc
    if not np.all(np.isfinite(X)):
        raise SingularSystemError("free-derivative system is singular")
    return X


def optimal_free_derivatives(fixed, durations, fixed_mask, config: ObjectiveConfig) -> np.ndarray:
    """``D_P* = argmin J(D_P, T)`` for fixed durations.

    Solves ``R_PP X = -R_PF D_F``.  When every axis shares the same fixed
    pattern, ``R_PP`` is axis independent and one factorization serves all
    three right-hand sides.
    """
    mask = np.asarray(fixed_mask, dtype=bool)
    fixed = np.asarray(fixed, dtype=float).reshape(-1)
    T = np.asarray(durations, dtype=float)
    if fixed.size != mask.sum() or mask.shape[0] != T.size + 1:
        raise DimensionError("fixed values, mask and durations disagree")
    n_free = mask.size - fixed.size
    if n_free == 0:
        return np.zeros(0)

    dim = mask.shape[2]
    if all(np.array_equal(mask[..., 0], mask[..., a]) for a in range(1, dim)):
        flat = mask[..., 0].ravel()
        n_axis = int((~flat).sum())
        R = axis_quadratic(T, config, sparse=n_axis >= DENSE_LIMIT)
        fi = np.flatnonzero(flat)
        pi = np.flatnonzero(~flat)
        if isinstance(R, np.ndarray):
            R_PP = R[np.ix_(pi, pi)]
            R_PF = R[np.ix_(pi, fi)]
        else:
            R = R.tocsr()
            R_PP = R[pi][:, pi]
            R_PF = R[pi][:, fi]
        rhs = -(R_PF @ fixed.reshape(-1, dim))
        return _solve(R_PP, rhs).reshape(-1)

    pq = partitioned_quadratic(T, mask, config)
    R_PP = pq.R_PP.toarray() if n_free < DENSE_LIMIT else pq.R_PP
    return _solve(R_PP, -(pq.R_PF @ fixed)).reshape(-1)
