"""Sampling-free feasibility check of polynomial pieces.

A constraint reads derivative ``i`` of a piece and is a multivariate
polynomial ``G(a, b, c) = sum d_c a^e1 b^e2 c^e3``.  Substituting the three
axis polynomials gives a univariate ``G(t)``; the piece satisfies
``G < epsilon`` on ``[0, T]`` iff both endpoint values do and ``G - epsilon``
has no root inside, which a Sturm count decides.  Composition happens in
the normalized time ``s = t / T`` so every check runs on ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import _kernels as K
from .poly_core import precompute_mapping_constants
from .trajectory import Trajectory
from .univar_roots import UnivariatePolynomial

__all__ = [
    "ConstraintSpec",
    "FeasibilityVerdict",
    "builtin_speed_constraint",
    "builtin_accel_constraint",
    "builtin_obstacle_constraint",
    "compose_constraint_polynomial",
    "check_piece",
    "check_trajectory",
    "trajectory_feasible",
    "piece_violations",
    "piece_tightness",
    "boundary_violations",
    "bisect_feasible_durations",
    "DEFAULT_EPSILON",
    "TIGHT_REL_TOL",
]

DEFAULT_EPSILON = 1e-6
TIGHT_REL_TOL = 1e-4
ENDPOINT_TOL = 1e-10


@dataclass(frozen=True)
class ConstraintSpec:
    """``G(p^(i)(t)) < epsilon`` on every piece.

    ``epsilon = 0`` gives the strict form ``G < 0``; a positive value is the
    usual encoding of ``G <= 0``.  ``kind`` and ``bound`` are informational
    (used by the initial time allocation and by file IO).
    """

    derivative_order: int
    terms: tuple[tuple[float, tuple[int, int, int]], ...]
    epsilon: float = DEFAULT_EPSILON
    kind: str = "custom"
    bound: float | None = None

    def __post_init__(self):
        terms = tuple((float(c), tuple(int(e) for e in ex)) for c, ex in self.terms)
        if not terms:
            raise ValueError("constraint needs at least one term")
        for _, ex in terms:
            if len(ex) != 3 or min(ex) < 0:
                raise ValueError(f"bad exponent tuple {ex}")
        if self.derivative_order < 0:
            raise ValueError("derivative order must be nonnegative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        object.__setattr__(self, "terms", terms)

    @property
    def d_g(self) -> int:
        return max(sum(ex) for _, ex in self.terms)

    @property
    def scale(self) -> float:
        return max(abs(c) for c, _ in self.terms) or 1.0

    @property
    def tight_tolerance(self) -> float:
        return TIGHT_REL_TOL * self.scale

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Term coefficients ``(n,)`` and exponents ``(n, 3)`` as arrays."""
        coef = np.array([c for c, _ in self.terms], dtype=float)
        expo = np.array([ex for _, ex in self.terms], dtype=np.int64).reshape(-1, 3)
        return coef, expo

    def evaluate(self, values) -> np.ndarray:
        """``G`` at points given as an array whose last axis holds (a, b, c)."""
        v = np.asarray(values, dtype=float)
        out = np.zeros(v.shape[:-1])
        for c, (e1, e2, e3) in self.terms:
            out = out + c * v[..., 0] ** e1 * v[..., 1] ** e2 * v[..., 2] ** e3
        return out


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    violated_constraint: int | None = None
    tight: bool = False


def _positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value}")


def _norm_constraint(order, bound, kind, epsilon):
    _positive(bound, kind)
    terms = (
        (1.0, (2, 0, 0)),
        (1.0, (0, 2, 0)),
        (1.0, (0, 0, 2)),
        (-float(bound) ** 2, (0, 0, 0)),
    )
    return ConstraintSpec(order, terms, epsilon, kind, float(bound))


def builtin_speed_constraint(v_max: float, epsilon: float = DEFAULT_EPSILON) -> ConstraintSpec:
    """``|p'(t)|^2 - v_max^2``."""
    return _norm_constraint(1, v_max, "speed", epsilon)


def builtin_accel_constraint(a_max: float, epsilon: float = DEFAULT_EPSILON) -> ConstraintSpec:
    """``|p''(t)|^2 - a_max^2``."""
    return _norm_constraint(2, a_max, "acceleration", epsilon)


def builtin_obstacle_constraint(center, r_safe: float,
                                epsilon: float = DEFAULT_EPSILON) -> ConstraintSpec:
    """``r_safe^2 - |p(t) - center|^2``, expanded into monomials."""
    _positive(r_safe, "r_safe")
    center = np.asarray(center, dtype=float).reshape(3)
    unit = np.eye(3, dtype=int)
    terms = [(-1.0, tuple(2 * unit[a])) for a in range(3)]
    terms += [(2.0 * center[a], tuple(unit[a])) for a in range(3) if center[a] != 0.0]
    terms.append((float(r_safe) ** 2 - float(center @ center), (0, 0, 0)))
    return ConstraintSpec(0, tuple(terms), epsilon, "obstacle", float(r_safe))


def _compose(spec: ConstraintSpec, coeffs: np.ndarray, T=None) -> np.ndarray:
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    T = np.ones(coeffs.shape[0]) if T is None else np.broadcast_to(
        np.asarray(T, dtype=float), coeffs.shape[:1]).copy()
    return K.batch_compose(coeffs, T, spec.derivative_order, *spec.arrays)


def compose_constraint_polynomial(spec: ConstraintSpec, coeffs, T: float | None = None
                                  ) -> UnivariatePolynomial:
    """``G(p_1^(i)(t), p_2^(i)(t), p_3^(i)(t))`` as a polynomial in ``t``.

    ``coeffs`` is one piece's ``(N+1, 3)`` coefficient matrix; ``T`` only
    documents the domain and does not change the result.
    """
    return UnivariatePolynomial(_compose(spec, np.asarray(coeffs, dtype=float)[None])[0])


@lru_cache(maxsize=128)
def _packed(constraints: tuple, tight: bool):
    """Flat arrays describing ``constraints`` for the compiled kernels."""
    orders = np.array([c.derivative_order for c in constraints], dtype=np.int64)
    sizes = [len(c.terms) for c in constraints]
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    coef = np.concatenate([c.arrays[0] for c in constraints] or [np.zeros(0)])
    expo = np.concatenate([c.arrays[1] for c in constraints] or [np.zeros((0, 3), np.int64)])
    shifts = np.array([c.tight_tolerance if tight else -c.epsilon for c in constraints])
    return orders, starts, coef, np.ascontiguousarray(expo, dtype=np.int64), shifts


@lru_cache(maxsize=128)
def _scales(constraints: tuple) -> np.ndarray:
    return np.array([c.scale for c in constraints])


def _prepare(coeffs, durations):
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    T = np.broadcast_to(np.asarray(durations, dtype=float), coeffs.shape[:1]).copy()
    return coeffs, T


def piece_violations(coeffs, durations, constraints: Sequence[ConstraintSpec],
                     stop_early: bool = False) -> np.ndarray:
    """Per piece: True if some constraint is violated somewhere on it.

    With ``stop_early`` the scan stops at the first violation and later
    entries are left False.
    """
    coeffs, T = _prepare(coeffs, durations)
    return K.multi_violations(coeffs, T, *_packed(tuple(constraints), False),
                              ENDPOINT_TOL, stop_early)


def piece_tightness(coeffs, durations, constraints: Sequence[ConstraintSpec]) -> np.ndarray:
    """Per piece: True if the maximum of some ``G`` lies within its tight
    tolerance below zero (feasibility is not re-checked here)."""
    coeffs, T = _prepare(coeffs, durations)
    return K.multi_violations(coeffs, T, *_packed(tuple(constraints), True),
                              ENDPOINT_TOL, False)


def trajectory_feasible(coeffs, durations, constraints: Sequence[ConstraintSpec]) -> bool:
    if not constraints:
        return True
    return not piece_violations(coeffs, durations, constraints, stop_early=True).any()


def boundary_violations(stacked, durations, constraints: Sequence[ConstraintSpec],
                        order: int) -> np.ndarray:
    """``piece_violations`` for pieces given by stacked boundary conditions."""
    consts = precompute_mapping_constants(order)
    stacked, T = _prepare(stacked, durations)
    return K.bc_violations(stacked, T, consts.ainv_coeff, consts.ainv_expo,
                           *_packed(tuple(constraints), False), ENDPOINT_TOL)


def bisect_feasible_durations(stacked, feasible, infeasible,
                              constraints: Sequence[ConstraintSpec], order: int,
                              rel_tol: float) -> np.ndarray:
    """Per row, search between a feasible and an infeasible duration for a
    feasible one at which some constraint is tight.

    Every returned duration passes the exact check.  The search stops once
    the feasible end is within half the tight tolerance of the bound and the
    bracket is close to the feasibility boundary, or when the bracket has
    relative width ``rel_tol``.
    """
    consts = precompute_mapping_constants(order)
    stacked = np.ascontiguousarray(stacked, dtype=float)
    cons = tuple(constraints)
    orders, starts, coef, expo, shifts = _packed(cons, False)
    return K.bisect_durations(stacked, np.asarray(feasible, dtype=float),
                              np.asarray(infeasible, dtype=float), float(rel_tol),
                              0.5 * TIGHT_REL_TOL, consts.ainv_coeff, consts.ainv_expo,
                              orders, starts, coef, expo, shifts, _scales(cons), ENDPOINT_TOL)


def _verdicts(coeffs, durations, constraints) -> list[FeasibilityVerdict]:
    coeffs, T = _prepare(coeffs, durations)
    Kp = coeffs.shape[0]
    violated = [None] * Kp
    tight = np.zeros(Kp, dtype=bool)
    for j, spec in enumerate(constraints):
        bad = K.multi_violations(coeffs, T, *_packed((spec,), False), ENDPOINT_TOL, False)
        tight |= K.multi_violations(coeffs, T, *_packed((spec,), True), ENDPOINT_TOL, False)
        for m in np.flatnonzero(bad):
            if violated[m] is None:
                violated[m] = j
    return [FeasibilityVerdict(violated[m] is None, violated[m],
                               bool(tight[m]) and violated[m] is None) for m in range(Kp)]


def check_piece(coeffs, T: float, constraints: Sequence[ConstraintSpec]) -> FeasibilityVerdict:
    """Verdict for one piece with coefficient matrix ``coeffs`` and duration ``T``."""
    if not (np.isfinite(T) and T > 0):
        raise ValueError(f"duration must be positive, got {T}")
    if not constraints:
        return FeasibilityVerdict(True)
    return _verdicts(np.asarray(coeffs, dtype=float)[None], np.array([T]), constraints)[0]


def check_trajectory(traj: Trajectory, constraints: Sequence[ConstraintSpec]
                     ) -> list[FeasibilityVerdict]:
    if not constraints:
        return [FeasibilityVerdict(True) for _ in range(traj.num_pieces)]
    return _verdicts(traj.coefficients, traj.durations, constraints)
