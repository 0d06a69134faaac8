"""Piecewise polynomial trajectory parametrized by waypoint derivatives and durations.

Waypoint ``m`` carries an ``S x 3`` block of derivatives (orders ``0..S-1``,
one column per axis).  Piece ``m`` runs from waypoint ``m`` to ``m+1`` so
adjacent pieces share a block and orders ``0..S-1`` are continuous by
construction.

Each block entry is either fixed (part of ``D_F``) or free (part of
``D_P``).  Both vectors list entries waypoint-major, then derivative order,
then axis, i.e. the C-order flattening of the ``(M+1, S, 3)`` block array
restricted to the mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DimensionError, InvalidDurationError, InvalidProblemError, OutOfRangeError
from .poly_core import MappingConstants, falling_factorial, mapping_matrix_inverse, precompute_mapping_constants

__all__ = [
    "WaypointDerivatives",
    "BoundaryCondition",
    "Trajectory",
    "default_fixed_mask",
    "piece_coefficients",
    "eval_piece",
    "eval_trajectory",
    "assemble",
    "disassemble",
    "check_distinct_waypoints",
]

DIM = 3


@dataclass(frozen=True, eq=False)
class WaypointDerivatives:
    """Derivatives of orders ``0..S-1`` at one waypoint and their fixed flags."""

    values: np.ndarray
    fixed_mask: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.fixed_mask.shape or self.values.ndim != 2:
            raise DimensionError("values and fixed_mask must share an (S, 3) shape")
        if not self.fixed_mask[0].all():
            raise InvalidProblemError("waypoint positions must be fixed")


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Start and end derivative blocks (each ``S x 3``) of a single piece."""

    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.atleast_2d(np.asarray(self.start, dtype=float)))
        object.__setattr__(self, "end", np.atleast_2d(np.asarray(self.end, dtype=float)))
        if self.start.shape != self.end.shape:
            raise DimensionError("start and end blocks differ in shape")

    @property
    def S(self) -> int:
        return self.start.shape[0]

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.start, self.end], axis=0)

    @classmethod
    def rest_to_rest(cls, start, end, S: int) -> "BoundaryCondition":
        """Boundary condition with all nonzero-order derivatives zero."""
        start = np.asarray(start, dtype=float).reshape(1, -1)
        end = np.asarray(end, dtype=float).reshape(1, -1)
        pad = np.zeros((S - 1, start.shape[1]))
        return cls(np.vstack([start, pad]), np.vstack([end, pad]))


def default_fixed_mask(num_pieces: int, S: int) -> np.ndarray:
    """Mask with every block of the first and last waypoint fixed and only
    positions fixed at interior waypoints."""
    if num_pieces < 1:
        raise DimensionError("a trajectory needs at least one piece")
    mask = np.zeros((num_pieces + 1, S, DIM), dtype=bool)
    mask[:, 0, :] = True
    mask[0] = True
    mask[-1] = True
    return mask


def check_distinct_waypoints(derivatives: np.ndarray, fixed_mask: np.ndarray) -> None:
    """Reject consecutive waypoints that no fixed entry tells apart.

    Two neighbours are rejected when their positions coincide and either both
    blocks are fully fixed and identical, or every higher-order entry of both
    blocks is free or zero.  Either way the piece between them can shrink to
    zero duration.
    """
    for m in range(derivatives.shape[0] - 1):
        a, b = derivatives[m], derivatives[m + 1]
        if not np.array_equal(a[0], b[0]):
            continue
        identical = fixed_mask[m].all() and fixed_mask[m + 1].all() and np.array_equal(a, b)
        idle = not np.any(a[1:][fixed_mask[m][1:]]) and not np.any(b[1:][fixed_mask[m + 1][1:]])
        if identical or idle:
            raise InvalidProblemError(
                f"waypoints {m} and {m + 1} are repeated with identical boundary conditions")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """``M`` pieces given by ``(M+1, S, 3)`` waypoint derivatives and ``M`` durations."""

    order: int
    derivatives: np.ndarray
    durations: np.ndarray
    fixed_mask: np.ndarray

    def __post_init__(self):
        constants = precompute_mapping_constants(self.order)
        d = np.array(self.derivatives, dtype=float)
        T = np.array(self.durations, dtype=float).reshape(-1)
        mask = np.array(self.fixed_mask, dtype=bool)
        if d.ndim != 3 or d.shape[1:] != (constants.S, DIM):
            raise DimensionError(f"derivatives must have shape (M+1, {constants.S}, 3), got {d.shape}")
        if mask.shape != d.shape:
            raise DimensionError("fixed_mask shape must match derivatives")
        if T.size < 1 or T.size != d.shape[0] - 1:
            raise DimensionError(f"expected {d.shape[0] - 1} durations, got {T.size}")
        if not np.all(np.isfinite(T)) or np.any(T <= 0.0):
            raise InvalidDurationError(f"durations must be finite and positive, got {T}")
        if not mask[:, 0, :].all():
            raise InvalidProblemError("waypoint positions must be fixed")
        for a in (d, T, mask):
            a.setflags(write=False)
        object.__setattr__(self, "derivatives", d)
        object.__setattr__(self, "durations", T)
        object.__setattr__(self, "fixed_mask", mask)

    @property
    def constants(self) -> MappingConstants:
        return precompute_mapping_constants(self.order)

    @property
    def num_pieces(self) -> int:
        return self.durations.size

    @property
    def total_duration(self) -> float:
        return float(self.cumulative_times[-1])

    @cached_property
    def cumulative_times(self) -> np.ndarray:
        """Piece start times followed by the end time (length ``M+1``)."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Coefficient matrices of all pieces, shape ``(M, N+1, 3)``."""
        stacked = np.concatenate([self.derivatives[:-1], self.derivatives[1:]], axis=1)
        return mapping_matrix_inverse(self.constants, self.durations) @ stacked

    def waypoint(self, m: int) -> WaypointDerivatives:
        return WaypointDerivatives(self.derivatives[m], self.fixed_mask[m])

    def boundary_condition(self, m: int) -> BoundaryCondition:
        return BoundaryCondition(self.derivatives[m], self.derivatives[m + 1])

    def fixed_values(self) -> np.ndarray:
        return self.derivatives[self.fixed_mask]

    def with_durations(self, durations) -> "Trajectory":
        return Trajectory(self.order, self.derivatives, durations, self.fixed_mask)


def piece_coefficients(bc: BoundaryCondition, T: float, constants: MappingConstants) -> np.ndarray:
    """Coefficient matrix ``c = A(T)^-1 (d_start; d_end)`` of one piece."""
    stacked = bc.stacked()
    if stacked.shape[0] != constants.N + 1:
        raise DimensionError(f"boundary condition has {bc.S} rows, order needs {constants.S}")
    return mapping_matrix_inverse(constants, T) @ stacked


def _eval_coeffs(c: np.ndarray, tau: float, i: int) -> np.ndarray:
    n = c.shape[0]
    out = np.zeros(c.shape[1:])
    for k in range(n - 1, i - 1, -1):
        out = out * tau + falling_factorial(k, i) * c[k]
    return out


def eval_piece(traj: Trajectory, m: int, tau: float, i: int = 0) -> np.ndarray:
    """Derivative ``i`` of piece ``m`` at local time ``tau``."""
    return _eval_coeffs(traj.coefficients[m], tau, i)


def eval_trajectory(traj: Trajectory, t: float, i: int = 0) -> np.ndarray:
    """Derivative ``i`` of the trajectory at global time ``t``.

    At a waypoint the later piece is used.
    """
    cum = traj.cumulative_times
    if not (0.0 <= t <= cum[-1]):
        raise OutOfRangeError(f"t={t} outside [0, {cum[-1]}]")
    m = min(int(np.searchsorted(cum, t, side="right")) - 1, traj.num_pieces - 1)
    return _eval_coeffs(traj.coefficients[m], t - cum[m], i)


def _as_mask(fixed_mask) -> np.ndarray:
    mask = np.asarray(fixed_mask, dtype=bool)
    if mask.ndim != 3 or mask.shape[2] != DIM:
        raise DimensionError("fixed_mask must have shape (M+1, S, 3)")
    return mask


def assemble(fixed, free, durations, fixed_mask, order: int | None = None,
             validate: bool = True) -> Trajectory:
    """Scatter fixed and free values into waypoint blocks (``Phi``).

    ``fixed_mask`` has shape ``(M+1, S, 3)``; ``order`` defaults to ``2S-1``.
    """
    mask = _as_mask(fixed_mask)
    S = mask.shape[1]
    order = 2 * S - 1 if order is None else order
    fixed = np.asarray(fixed, dtype=float).reshape(-1)
    free = np.asarray(free, dtype=float).reshape(-1)
    n_fixed = int(mask.sum())
    if fixed.size != n_fixed or free.size != mask.size - n_fixed:
        raise DimensionError(
            f"expected {n_fixed} fixed and {mask.size - n_fixed} free values, "
            f"got {fixed.size} and {free.size}")
    d = np.empty(mask.shape)
    d[mask] = fixed
    d[~mask] = free
    traj = Trajectory(order, d, durations, mask)
    if validate:
        check_distinct_waypoints(d, mask)
    return traj


def disassemble(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Free values and durations of ``traj`` (``Phi^-1``)."""
    return traj.derivatives[~traj.fixed_mask].copy(), traj.durations.copy()
