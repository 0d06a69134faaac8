"""Random-walk benchmark harness and problem-level solve helpers."""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .am_solver import (
    SolveReport,
    SolverConfig,
    initial_feasible_trajectory,
    optimize_constrained,
    optimize_unconstrained,
)
from .exceptions import AmTrajError
from .io import ProblemFile, random_walk_problem

__all__ = [
    "solve_problem",
    "run_benchmark",
    "DEFAULT_PIECES",
    "SOFT_TIME_LIMIT",
    "PAPER_TIME",
]

DEFAULT_PIECES = (5, 10, 20, 30, 40, 50, 60)
# wall-time flags for the 60-piece constrained solve (seconds)
PAPER_TIME = 0.005
SOFT_TIME_LIMIT = 0.050


def solve_problem(problem: ProblemFile, constrained: bool,
                  solver: SolverConfig | None = None) -> tuple[SolveReport, float]:
    """Solve ``problem`` and return the report with the solver wall time.

    The unconstrained solve starts from zero free derivatives; the
    constrained one from the conservative feasible allocation.  Only the
    solver call is timed.
    """
    solver = solver or problem.solver_config()
    objective = problem.objective
    d, mask = problem.boundary()
    if constrained:
        cons = problem.constraints()
        init = initial_feasible_trajectory(problem.waypoints, cons, objective, d, mask)
        t0 = time.perf_counter()
        report = optimize_constrained(init, cons, objective, solver)
    else:
        free0 = np.zeros(int((~mask).sum()))
        t0 = time.perf_counter()
        report = optimize_unconstrained(d[mask], free0, mask, objective, solver)
    return report, time.perf_counter() - t0


def _timed(problem, constrained, solver, repeat):
    times = []
    for _ in range(repeat):
        report, dt = solve_problem(problem, constrained, solver)
        times.append(dt)
    return report, float(np.median(times))


def _stats(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"mean": None, "std": None, "min": None, "max": None}
    return {"mean": float(v.mean()), "std": float(v.std()), "min": float(v.min()),
            "max": float(v.max())}


def run_benchmark(piece_counts: Sequence[int] = DEFAULT_PIECES, trials: int = 10,
                  seed: int = 0, repeat: int = 1, progress=None) -> dict:
    """Benchmark both solvers on random-walk problems.

    Every instance is solved with the relative 0.001 stopping rule.  Costs
    are normalized by the unconstrained cost of the same instance.  Failures
    are recorded per instance and do not stop the run.  ``repeat > 1`` times
    each solve that many times and keeps the median.
    """
    if trials < 1 or any(int(m) < 1 for m in piece_counts):
        raise ValueError("piece counts and trials must be positive")
    solver = SolverConfig.benchmark()
    # load compiled kernels before anything is timed
    warm = random_walk_problem(2, seed)
    solve_problem(warm, False, solver)
    solve_problem(warm, True, solver)
    sizes = []
    flags = []
    for M in piece_counts:
        M = int(M)
        rows = {"t_unc": [], "t_con": [], "J_unc": [], "J_con": [], "ratio": []}
        failures = []
        for trial in range(trials):
            inst_seed = seed * 1_000_003 + M * 10_007 + trial
            problem = random_walk_problem(M, inst_seed)
            try:
                ru, tu = _timed(problem, False, solver, repeat)
                rc, tc = _timed(problem, True, solver, repeat)
            except AmTrajError as exc:
                failures.append({"trial": trial, "seed": inst_seed,
                                 "error": f"{type(exc).__name__}: {exc}"})
                continue
            rows["t_unc"].append(tu)
            rows["t_con"].append(tc)
            rows["J_unc"].append(ru.cost)
            rows["J_con"].append(rc.cost)
            rows["ratio"].append(rc.cost / ru.cost)
            if progress is not None:
                progress(M, trial)
        entry = {
            "pieces": M,
            "trials": trials,
            "completed": len(rows["ratio"]),
            "unconstrained": {"time": _stats(rows["t_unc"]), "cost": _stats(rows["J_unc"]),
                              "normalized_cost": _stats(np.ones(len(rows["J_unc"])))},
            "constrained": {"time": _stats(rows["t_con"]), "cost": _stats(rows["J_con"]),
                            "normalized_cost": _stats(rows["ratio"])},
            "failures": failures,
        }
        t_mean = entry["constrained"]["time"]["mean"]
        if M == 60 and t_mean is not None:
            if t_mean > SOFT_TIME_LIMIT:
                flags.append(f"60-piece constrained mean {1e3 * t_mean:.1f} ms exceeds "
                             f"{1e3 * SOFT_TIME_LIMIT:.0f} ms")
            elif t_mean > PAPER_TIME:
                flags.append(f"60-piece constrained mean {1e3 * t_mean:.1f} ms is above "
                             f"the {1e3 * PAPER_TIME:.0f} ms reference")
        sizes.append(entry)
    return {"seed": seed, "trials": trials, "stop_rule": "relative 0.001",
            "sizes": sizes, "flags": flags}
