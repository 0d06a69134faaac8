"""Alternating minimization drivers.

``optimize_unconstrained`` alternates the closed-form spatial update with the
exact per-piece duration update.  ``optimize_constrained`` keeps every
iterate feasible: the spatial step is a feasibility line search toward the
unconstrained optimum, the duration step compares feasible stationary points
with boundary durations found by bisection, and pieces stuck on an active
constraint are split off and the remainder re-optimized recursively.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cost import ObjectiveConfig, rational_coefficients
from .exceptions import ConstructionError, DimensionError, InfeasibleInitialError, NumericalError
from .feasibility import (
    ConstraintSpec,
    bisect_feasible_durations,
    boundary_violations,
    piece_tightness,
    trajectory_feasible,
)
from .poly_core import mapping_matrix_inverse, precompute_mapping_constants
from .spatial_phase import optimal_free_derivatives
from .temporal_phase import optimal_durations, rational_cost_values, stationary_points
from .trajectory import DIM, Trajectory, default_fixed_mask

__all__ = [
    "SolverConfig",
    "SolveReport",
    "optimize_unconstrained",
    "optimize_constrained",
    "line_search_lambda",
    "optimal_piece_duration_constrained",
    "initial_feasible_trajectory",
]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    The loop stops once ``|J_l - J_c| < stop_threshold`` (times ``|J_l|``
    when ``relative``) or after ``max_iterations`` sweeps.  ``bisection_tol``
    is the final width of the line-search interval in ``lambda``;
    ``duration_tol`` is the relative width of duration bisections.
    """

    max_iterations: int = 1000
    stop_threshold: float = 1e-9
    relative: bool = False
    bisection_tol: float = 1e-4
    duration_tol: float = 1e-6
    recursion_depth_limit: int = 8
    max_duration: float = 1e6
    keep_iterates: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for name in ("stop_threshold", "bisection_tol", "duration_tol", "max_duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.recursion_depth_limit < 0:
            raise ValueError("recursion_depth_limit must be nonnegative")

    @classmethod
    def benchmark(cls, **kw) -> "SolverConfig":
        """Relative 0.001 stopping rule used by the benchmark harness."""
        kw.setdefault("stop_threshold", 1e-3)
        return cls(relative=True, **kw)


@dataclass
class SolveReport:
    """Outcome of a solver run.

    ``history`` holds the objective after the initialization and after every
    half-step (spatial, then temporal).  ``tight`` lists 0-based indices of
    pieces with an active constraint on the returned trajectory.
    """

    trajectory: Trajectory
    history: list[float]
    iterations: int
    termination: str
    tight: tuple[int, ...] = ()
    recursion: list[dict] = field(default_factory=list)
    iterates: list[Trajectory] = field(default_factory=list)

    @property
    def cost(self) -> float:
        return self.history[-1]


# -- array-level helpers ----------------------------------------------------

def _stack(d: np.ndarray) -> np.ndarray:
    return np.concatenate([d[:-1], d[1:]], axis=1)


def _coeffs(stacked, T, order) -> np.ndarray:
    return mapping_matrix_inverse(precompute_mapping_constants(order), np.asarray(T)) @ stacked


def _piece_costs(alpha, T, config) -> np.ndarray:
    return rational_cost_values(alpha, T, config.p_n, config.rho)


def _cost(d, T, config) -> float:
    return float(_piece_costs(rational_coefficients(_stack(d), config), T, config).sum())


def _spatial(d, T, mask, config) -> np.ndarray:
    """Blocks with the free entries replaced by the unconstrained optimum."""
    out = d.copy()
    if (~mask).any():
        out[~mask] = optimal_free_derivatives(d[mask], T, mask, config)
    return out


def _converged(J_l, J_c, solver) -> bool:
    gap = abs(J_l - J_c)
    return gap < solver.stop_threshold * (abs(J_l) if solver.relative else 1.0)


def _guard(T, solver):
    if np.any(T > solver.max_duration):
        raise NumericalError(
            f"durations diverged past {solver.max_duration:g}; the objective has an "
            "unbounded sublevel set for this fixed/free split")


def _check_state(fixed, free, durations, mask, order):
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 3 or mask.shape[2] != DIM:
        raise DimensionError("fixed_mask must have shape (M+1, S, 3)")
    d = np.empty(mask.shape)
    d[mask] = np.asarray(fixed, dtype=float).reshape(-1)
    d[~mask] = np.asarray(free, dtype=float).reshape(-1)
    T = None if durations is None else np.array(durations, dtype=float).reshape(-1)
    # constructing a Trajectory runs every structural check
    Trajectory(order, d, np.ones(mask.shape[0] - 1) if T is None else T, mask)
    return d, T, mask


# -- unconstrained ----------------------------------------------------------

def optimize_unconstrained(fixed, free0, fixed_mask, objective: ObjectiveConfig,
                           solver: SolverConfig | None = None) -> SolveReport:
    """Spatial-temporal alternating minimization without constraints.

    ``free0`` is the initial ``D_P``; the initial durations are the exact
    per-piece optimum for it.  Returns the latest iterate.
    """
    solver = solver or SolverConfig()
    from .trajectory import check_distinct_waypoints

    d, _, mask = _check_state(fixed, free0, None, fixed_mask, objective.order)
    check_distinct_waypoints(d, mask)
    T = optimal_durations(_stack(d), objective)
    _guard(T, solver)
    alpha = rational_coefficients(_stack(d), objective)
    J_l = float(_piece_costs(alpha, T, objective).sum())
    history = [J_l]
    iterates = []
    keep = solver.keep_iterates
    termination = "max_iterations"
    k = 0
    while k < solver.max_iterations:
        d_new = _spatial(d, T, mask, objective)
        alpha_new = rational_coefficients(_stack(d_new), objective)
        J_half = float(_piece_costs(alpha_new, T, objective).sum())
        if J_half <= history[-1]:
            d, alpha = d_new, alpha_new
        else:
            J_half = history[-1]
        history.append(J_half)

        T_new = optimal_durations(_stack(d), objective)
        _guard(T_new, solver)
        # per piece, never accept a duration that is worse than the old one
        old = _piece_costs(alpha, T, objective)
        new = _piece_costs(alpha, T_new, objective)
        T = np.where(new <= old, T_new, T)
        J_c = float(np.minimum(new, old).sum())
        history.append(J_c)
        k += 1
        if keep:
            iterates.append(Trajectory(objective.order, d, T, mask))
        if _converged(J_l, J_c, solver):
            termination = "threshold"
            break
        J_l = J_c
    traj = Trajectory(objective.order, d, T, mask)
    return SolveReport(traj, history, k, termination, iterates=iterates)


# -- constrained building blocks --------------------------------------------

def _lambda_search(d, d_opt, T, mask, constraints, order, tol) -> float:
    stacked0 = _stack(d)
    step = _stack(d_opt) - stacked0
    Ainv = mapping_matrix_inverse(precompute_mapping_constants(order), T)
    c0 = Ainv @ stacked0
    dc = Ainv @ step
    if not np.any(step):
        return 1.0
    if trajectory_feasible(c0 + dc, T, constraints):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if trajectory_feasible(c0 + mid * dc, T, constraints):
            lo = mid
        else:
            hi = mid
    return lo


def line_search_lambda(current, target, durations, fixed, fixed_mask,
                       constraints: Sequence[ConstraintSpec], order: int = 5,
                       solver: SolverConfig | None = None) -> float:
    """Largest feasible ``lambda`` in ``[0, 1]`` on the segment from ``current``
    to ``target`` free values, up to ``bisection_tol``.

    Returns 1 whenever ``target`` itself is feasible.
    """
    solver = solver or SolverConfig()
    d, T, mask = _check_state(fixed, current, durations, fixed_mask, order)
    d_opt, _, _ = _check_state(fixed, target, durations, fixed_mask, order)
    if not trajectory_feasible(_coeffs(_stack(d), T, order), T, constraints):
        raise InfeasibleInitialError("line search started from an infeasible point")
    return _lambda_search(d, d_opt, T, mask, constraints, order, solver.bisection_tol)


def _constrained_durations(stacked, T_prev, constraints, config, solver):
    """Per piece: cheapest feasible duration among stationary points,
    boundary durations next to infeasible ones, and ``T_prev``."""
    order = config.order
    M = stacked.shape[0]
    alpha = rational_coefficients(stacked, config)
    roots, counts = stationary_points(alpha, config)
    pts = np.concatenate([roots, T_prev[:, None]], axis=1)
    valid = ~np.isnan(pts)
    rows, cols = np.nonzero(valid[:, :-1])
    feasible = np.zeros(pts.shape, dtype=bool)
    feasible[:, -1] = True
    if rows.size:
        cand = pts[rows, cols]
        feasible[rows, cols] = ~boundary_violations(stacked[rows], cand, constraints, order)
    J = np.where(valid, _piece_costs(alpha, np.where(valid, pts, 1.0), config), np.inf)
    best_J = np.where(feasible, J, np.inf).min(axis=1)
    best_T = pts[np.arange(M), np.where(feasible, J, np.inf).argmin(axis=1)]

    # bisection tasks: each infeasible stationary point toward its nearest
    # feasible neighbour (in sorted order) on either side
    t_idx, t_feas, t_inf = [], [], []
    for m in np.flatnonzero((valid & ~feasible).any(axis=1)):
        sel = np.flatnonzero(valid[m])
        order_ = sel[np.argsort(pts[m, sel])]
        p = pts[m, order_]
        f = feasible[m, order_]
        Jm = J[m, order_]
        for r in np.flatnonzero(~f):
            for step in (-1, 1):
                q = r + step
                while 0 <= q < p.size and not f[q]:
                    q += step
                if not 0 <= q < p.size:
                    continue
                # J is monotone between adjacent points, so the boundary
                # cannot beat the feasible end when J(e) >= J(f)
                if abs(q - r) == 1 and Jm[r] >= Jm[q]:
                    continue
                t_idx.append(m)
                t_feas.append(p[q])
                t_inf.append(p[r])
    if t_idx:
        idx = np.array(t_idx)
        Tt = bisect_feasible_durations(stacked[idx], np.array(t_feas), np.array(t_inf),
                                       constraints, order, solver.duration_tol)
        Jt = _piece_costs(alpha[idx], Tt, config)
        for m, t_, j_ in zip(idx, Tt, Jt):
            if j_ < best_J[m]:
                best_J[m], best_T[m] = j_, t_
    return best_T, alpha


def optimal_piece_duration_constrained(bc, T_prev: float, constraints: Sequence[ConstraintSpec],
                                       config: ObjectiveConfig,
                                       solver: SolverConfig | None = None) -> float:
    """Cheapest feasible duration of one piece, never worse than ``T_prev``."""
    solver = solver or SolverConfig()
    stacked = bc.stacked()[None]
    T_prev = np.array([float(T_prev)])
    if boundary_violations(stacked, T_prev, constraints, config.order)[0]:
        raise InfeasibleInitialError("previous duration is infeasible for this piece")
    if not constraints:
        return float(optimal_durations(stacked, config)[0])
    T, _ = _constrained_durations(stacked, T_prev, constraints, config, solver)
    return float(T[0])


# -- constrained driver -----------------------------------------------------

class _Run:
    """Shared state of one constrained solve across recursion levels."""

    def __init__(self, d, T, mask, constraints, config, solver):
        self.d = d
        self.T = T
        self.mask = mask
        self.constraints = list(constraints)
        self.config = config
        self.solver = solver
        self.history = []
        self.iterates = []
        self.trace = []
        self.iterations = 0

    def snapshot(self):
        if self.solver.keep_iterates:
            self.iterates.append(Trajectory(self.config.order, self.d.copy(), self.T.copy(), self.mask))

    def full_cost(self):
        return _cost(self.d, self.T, self.config)


def _solve_range(run: _Run, lo: int, hi: int, mask: np.ndarray, depth: int):
    """Constrained AM on pieces ``lo..hi-1`` of ``run``; updates it in place."""
    cfg, solver, cons = run.config, run.solver, run.constraints
    d = run.d[lo:hi + 1]
    T = run.T[lo:hi]
    sub_mask = mask[lo:hi + 1]
    alpha = rational_coefficients(_stack(d), cfg)
    sub_J = float(_piece_costs(alpha, T, cfg).sum())
    offset = run.full_cost() - sub_J
    J_l = sub_J
    termination = "max_iterations"
    k = 0
    while k < solver.max_iterations:
        d_opt = _spatial(d, T, sub_mask, cfg)
        lam = _lambda_search(d, d_opt, T, sub_mask, cons, cfg.order, solver.bisection_tol)
        if lam > 0.0:
            d_new = d + lam * (d_opt - d)
            J_half = _cost(d_new, T, cfg)
            if J_half <= J_l:
                d[...] = d_new
            else:
                J_half = J_l
        else:
            J_half = J_l
        run.history.append(offset + J_half)

        T_new, alpha = _constrained_durations(_stack(d), T.copy(), cons, cfg, solver)
        _guard(T_new, solver)
        T[...] = T_new
        J_c = float(_piece_costs(alpha, T, cfg).sum())
        run.history.append(offset + J_c)
        k += 1
        run.iterations += 1
        run.snapshot()
        if _converged(J_l, J_c, solver):
            termination = "threshold"
            break
        J_l = J_c

    tight = piece_tightness(_coeffs(_stack(d), T, cfg.order), T, cons)
    entry = {"depth": depth, "pieces": (int(lo), int(hi)), "iterations": k,
             "termination": termination, "tight": [lo + int(i) for i in np.flatnonzero(tight)]}
    run.trace.append(entry)
    if not tight.any() or tight.all():
        return
    if depth >= solver.recursion_depth_limit:
        entry["termination"] = "depth_limit"
        return
    child_mask = mask.copy()
    for m in np.flatnonzero(tight):
        child_mask[lo + m] = True
        child_mask[lo + m + 1] = True
    # maximal runs of slack pieces; their durations stay free even when
    # every boundary block is fixed
    slack = np.concatenate([[False], ~tight, [False]])
    edges = np.flatnonzero(np.diff(slack.astype(int)))
    for a, b in zip(edges[::2], edges[1::2]):
        _solve_range(run, lo + a, lo + b, child_mask, depth + 1)


def optimize_constrained(initial: Trajectory, constraints: Sequence[ConstraintSpec],
                         objective: ObjectiveConfig,
                         solver: SolverConfig | None = None) -> SolveReport:
    """Constrained alternating minimization from a feasible trajectory.

    Every recorded iterate is feasible and the objective never increases.
    Pieces that end up with an active constraint are frozen (their boundary
    blocks fully fixed) and the slack runs between them are re-solved.
    """
    solver = solver or SolverConfig()
    if initial.order != objective.order:
        raise DimensionError("trajectory order differs from the objective order")
    cons = list(constraints)
    if not trajectory_feasible(initial.coefficients, initial.durations, cons):
        raise InfeasibleInitialError("initial trajectory violates a constraint")
    run = _Run(np.array(initial.derivatives), np.array(initial.durations),
               initial.fixed_mask, cons, objective, solver)
    run.history.append(run.full_cost())
    run.snapshot()
    _solve_range(run, 0, initial.num_pieces, np.array(initial.fixed_mask), 0)
    traj = Trajectory(objective.order, run.d, run.T, initial.fixed_mask)
    tight = piece_tightness(traj.coefficients, traj.durations, cons) if cons else np.zeros(0, bool)
    termination = run.trace[0]["termination"]
    return SolveReport(traj, run.history, run.iterations, termination,
                       tuple(int(i) for i in np.flatnonzero(tight)), run.trace, run.iterates)


def _bound(constraints, kind, default):
    vals = [c.bound for c in constraints if c.kind == kind and c.bound]
    return min(vals) if vals else default


def initial_feasible_trajectory(waypoints, constraints: Sequence[ConstraintSpec],
                                config: ObjectiveConfig, derivatives=None, fixed_mask=None,
                                max_doublings: int = 30) -> Trajectory:
    """Conservative feasible starting trajectory.

    Durations start at ``2 max(L / v_max, sqrt(L / a_max))`` per segment with
    all free derivatives zero, then double until every piece is feasible.
    ``derivatives``/``fixed_mask`` default to rest-to-rest with free interior
    higher derivatives.
    """
    from .trajectory import check_distinct_waypoints

    wp = np.asarray(waypoints, dtype=float)
    if wp.ndim != 2 or wp.shape[1] != DIM or wp.shape[0] < 2:
        raise DimensionError("waypoints must be an (M+1, 3) array with M >= 1")
    S = (config.order + 1) // 2
    M = wp.shape[0] - 1
    mask = default_fixed_mask(M, S) if fixed_mask is None else np.array(fixed_mask, dtype=bool)
    if derivatives is None:
        d = np.zeros((M + 1, S, DIM))
    else:
        d = np.array(derivatives, dtype=float)
    d[:, 0, :] = wp
    d[~mask] = 0.0
    check_distinct_waypoints(d, mask)
    v = _bound(constraints, "speed", 1.0)
    a = _bound(constraints, "acceleration", 1.0)
    L = np.linalg.norm(np.diff(wp, axis=0), axis=1)
    L = np.where(L > 0, L, 1.0)
    T = 2.0 * np.maximum(L / v, np.sqrt(L / a))
    cons = list(constraints)
    for _ in range(max_doublings + 1):
        traj = Trajectory(config.order, d, T, mask)
        if trajectory_feasible(traj.coefficients, T, cons):
            return traj
        T = 2.0 * T
    raise ConstructionError(
        f"no feasible time allocation after {max_doublings} doublings; constraints may contradict")
