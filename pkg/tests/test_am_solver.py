import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amtraj import (
    BoundaryCondition,
    ConstructionError,
    InfeasibleInitialError,
    InvalidProblemError,
    NumericalError,
    ObjectiveConfig,
    SolverConfig,
    Trajectory,
    builtin_accel_constraint,
    builtin_obstacle_constraint,
    builtin_speed_constraint,
    check_trajectory,
    initial_feasible_trajectory,
    line_search_lambda,
    optimal_piece_duration,
    optimal_piece_duration_constrained,
    optimize_constrained,
    optimize_unconstrained,
    piece_cost,
    piece_cost_rational,
)
from amtraj.io import random_walk_problem
from amtraj.trajectory import default_fixed_mask
from reference import full_gradient, two_minimum_pieces

CFG = ObjectiveConfig(rho=512.0)


def rest(d=1.0):
    return BoundaryCondition.rest_to_rest([0, 0, 0], [d, 0, 0], 3)


def unc_solve(problem, solver):
    d, mask = problem.boundary()
    return optimize_unconstrained(d[mask], np.zeros((~mask).sum()), mask, problem.objective, solver)


def test_solver_config_validation():
    for kw in ({"max_iterations": 0}, {"stop_threshold": 0.0}, {"bisection_tol": -1.0},
               {"duration_tol": 0.0}, {"recursion_depth_limit": -1}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    b = SolverConfig.benchmark()
    assert b.relative and b.stop_threshold == 1e-3


# -- unconstrained -----------------------------------------------------------

def test_single_fixed_piece_reduces_to_duration_optimum():
    cfg = ObjectiveConfig(rho=3600.0)
    mask = default_fixed_mask(1, 3)
    bc = rest()
    d = np.stack([bc.start, bc.end])
    r = optimize_unconstrained(d[mask], [], mask, cfg)
    assert r.trajectory.durations[0] == pytest.approx(optimal_piece_duration(bc, cfg), rel=1e-12)
    assert r.trajectory.durations[0] == pytest.approx(1.0, abs=1e-6)
    assert r.iterations == 1 and r.termination == "threshold"


@given(seed=st.integers(0, 10_000), M=st.integers(1, 8))
@settings(max_examples=15)
def test_unconstrained_history_monotone(seed, M):
    prob = random_walk_problem(M, seed)
    r = unc_solve(prob, SolverConfig(stop_threshold=1e-6))
    h = np.array(r.history)
    assert np.all(np.diff(h) <= 1e-9)
    assert r.iterations <= 1000
    if r.termination == "threshold":
        assert abs(h[-3] - h[-1]) < 1e-6


def test_unconstrained_stationarity():
    prob = random_walk_problem(4, 3)
    r = unc_solve(prob, SolverConfig(stop_threshold=1e-8, max_iterations=20_000))
    cfg = prob.objective
    g, J = full_gradient(r.trajectory, cfg.rho, range(cfg.d_min, cfg.d_max + 1), cfg.weights)
    assert J == pytest.approx(r.cost, rel=1e-9)
    assert np.linalg.norm(g) < 1e-4 * (1 + J)


def test_unconstrained_iteration_cap():
    prob = random_walk_problem(6, 1)
    r = unc_solve(prob, SolverConfig(max_iterations=3, stop_threshold=1e-12))
    assert r.iterations == 3 and r.termination == "max_iterations"
    assert len(r.history) == 1 + 2 * 3


def test_divergence_guard():
    prob = random_walk_problem(3, 0)
    with pytest.raises(NumericalError):
        unc_solve(prob, SolverConfig(max_duration=1e-3))


def test_repeated_waypoints_rejected():
    mask = default_fixed_mask(2, 3)
    d = np.zeros((3, 3, 3))
    d[2, 0] = [1, 1, 1]
    with pytest.raises(InvalidProblemError):
        optimize_unconstrained(d[mask], np.zeros((~mask).sum()), mask, CFG)


# -- line search -------------------------------------------------------------

def lambda_setup():
    mask = default_fixed_mask(2, 3)
    d = np.zeros((3, 3, 3))
    d[:, 0, 0] = [0.0, 1.0, 2.0]
    cur = np.zeros((~mask).sum())
    tgt = cur.copy()
    tgt[0] = 6.0  # middle x velocity; the speed bound 3 is hit at lambda = 0.5
    return d[mask], cur, tgt, np.array([1.0, 1.0]), mask


def test_line_search_half():
    fixed, cur, tgt, T, mask = lambda_setup()
    cons = [builtin_speed_constraint(3.0, epsilon=0.0)]
    solver = SolverConfig(bisection_tol=1e-4)
    lam = line_search_lambda(cur, tgt, T, fixed, mask, cons, solver=solver)
    assert 0.5 - 1e-4 <= lam <= 0.5
    d = np.empty(mask.shape)
    d[mask] = fixed
    d[~mask] = cur + lam * (tgt - cur)
    assert all(v.feasible for v in check_trajectory(Trajectory(5, d, T, mask), cons))


def test_line_search_trivial_cases():
    fixed, cur, tgt, T, mask = lambda_setup()
    cons = [builtin_speed_constraint(100.0)]
    assert line_search_lambda(cur, tgt, T, fixed, mask, cons) == 1.0
    assert line_search_lambda(cur, cur, T, fixed, mask, [builtin_speed_constraint(3.0)]) == 1.0
    with pytest.raises(InfeasibleInitialError):
        line_search_lambda(cur, tgt, T, fixed, mask, [builtin_speed_constraint(1.0)])


# -- constrained duration ----------------------------------------------------

def test_constrained_duration_reduces_without_active_constraints():
    cfg = ObjectiveConfig(rho=3600.0)
    loose = [builtin_speed_constraint(1e3), builtin_accel_constraint(1e3)]
    assert optimal_piece_duration_constrained(rest(), 3.0, loose, cfg) == pytest.approx(1.0, abs=1e-6)
    assert optimal_piece_duration_constrained(rest(), 3.0, [], cfg) == pytest.approx(1.0, abs=1e-6)


def test_constrained_duration_tight_speed(frozen):
    cfg = ObjectiveConfig(rho=3600.0)
    v_max = 1.0
    cons = [builtin_speed_constraint(v_max)]
    T_prev = 4.0
    T = optimal_piece_duration_constrained(rest(), T_prev, cons, cfg)
    boundary = float(frozen["min_jerk"]["peak_speed_T1"]) / v_max  # 15 d / (8 v_max)
    assert T == pytest.approx(boundary, rel=1e-4)
    pieces = [Trajectory(5, np.stack([rest().start, rest().end]), [x], np.ones((2, 3, 3), bool))
              for x in (T, 0.99 * T)]
    assert check_trajectory(pieces[0], cons)[0].feasible
    assert check_trajectory(pieces[0], cons)[0].tight
    assert not check_trajectory(pieces[1], cons)[0].feasible
    assert piece_cost(rest(), T, cfg) <= piece_cost(rest(), T_prev, cfg)


def test_constrained_duration_requires_feasible_previous():
    with pytest.raises(InfeasibleInitialError):
        optimal_piece_duration_constrained(rest(), 0.1, [builtin_speed_constraint(1.0)], CFG)


@pytest.mark.parametrize("which,T_prev", [(0, 8.0), (1, 0.8)])
def test_constrained_duration_escapes_poor_minimum(which, T_prev):
    from reference import grid_minima

    stacked = two_minimum_pieces()[which]
    bc = BoundaryCondition(stacked[:3], stacked[3:])
    cfg = ObjectiveConfig(rho=1.0)
    Tm, Jm, _, _ = grid_minima(stacked, 1.0)
    poor, good = Tm[np.argmax(Jm)], Tm[np.argmin(Jm)]
    assert abs(T_prev - poor) < abs(T_prev - good)
    loose = [builtin_speed_constraint(1e3), builtin_accel_constraint(1e3)]
    T = optimal_piece_duration_constrained(bc, T_prev, loose, cfg)
    assert T == pytest.approx(good, rel=2e-3)
    rc = piece_cost_rational(bc, cfg)
    assert rc(T) < rc(poor)


# -- constrained driver ------------------------------------------------------

def con_solve(problem, solver, cons=None):
    cons = problem.constraints() if cons is None else cons
    d, mask = problem.boundary()
    init = initial_feasible_trajectory(problem.waypoints, cons, problem.objective, d, mask)
    return optimize_constrained(init, cons, problem.objective, solver), cons


@given(seed=st.integers(0, 10_000), M=st.integers(1, 8))
@settings(max_examples=15)
def test_constrained_invariants(seed, M):
    prob = random_walk_problem(M, seed)
    solver = SolverConfig(stop_threshold=1e-4, keep_iterates=True)
    r, cons = con_solve(prob, solver)
    h = np.array(r.history)
    assert np.all(np.diff(h) <= 1e-9)
    assert r.iterations <= solver.max_iterations * (1 + len(r.recursion))
    for it in r.iterates + [r.trajectory]:
        assert all(v.feasible for v in check_trajectory(it, cons))
    verdicts = check_trajectory(r.trajectory, cons)
    assert all(verdicts[m].tight for m in r.tight)
    assert set(r.tight) <= set(range(M))
    from amtraj import trajectory_cost
    assert trajectory_cost(r.trajectory, prob.objective) == pytest.approx(r.cost, rel=1e-9)


def test_constrained_matches_unconstrained_when_loose():
    for seed in range(3):
        prob = random_walk_problem(6, seed)
        loose = [builtin_speed_constraint(500.0), builtin_accel_constraint(350.0)]
        solver = SolverConfig(stop_threshold=1e-9)
        rc, _ = con_solve(prob, solver, loose)
        ru = unc_solve(prob, solver)
        assert rc.cost == pytest.approx(ru.cost, rel=1e-6)


def test_infeasible_initial_rejected():
    prob = random_walk_problem(3, 0)
    d, mask = prob.boundary()
    T = np.full(3, 0.01)
    bad = Trajectory(5, d, T, mask)
    with pytest.raises(InfeasibleInitialError):
        optimize_constrained(bad, prob.constraints(), prob.objective)


def test_recursion_pins_tight_middle_piece():
    cfg = ObjectiveConfig(rho=10.0)
    wp = np.array([[0, 0, 0], [1, 0, 0], [11, 0, 0], [12, 0, 0.0]])
    cons = [builtin_speed_constraint(2.0)]
    init = initial_feasible_trajectory(wp, cons, cfg)
    r = optimize_constrained(init, cons, cfg, SolverConfig(stop_threshold=1e-10))
    assert r.tight == (1,)
    assert any(e["depth"] == 1 for e in r.recursion)
    verdicts = check_trajectory(r.trajectory, cons)
    assert verdicts[1].feasible and verdicts[1].tight
    # the outer pieces are stationary in their own sub-problems, where only
    # their durations remain free
    from reference import ref_total_cost

    d = np.array(r.trajectory.derivatives)
    T0 = np.array(r.trajectory.durations)
    J = ref_total_cost(d, T0, cfg.rho, [3], [1.0], 5)
    for m in (0, 2):
        h = 1e-6 * T0[m]
        Tp, Tm = T0.copy(), T0.copy()
        Tp[m] += h
        Tm[m] -= h
        g = (ref_total_cost(d, Tp, cfg.rho, [3], [1.0], 5) - ref_total_cost(d, Tm, cfg.rho, [3], [1.0], 5)) / (2 * h)
        assert abs(g) < 1e-4 * (1 + J)


def test_recursion_depth_limit():
    cfg = ObjectiveConfig(rho=10.0)
    wp = np.array([[0, 0, 0], [1, 0, 0], [11, 0, 0], [12, 0, 0.0]])
    cons = [builtin_speed_constraint(2.0)]
    init = initial_feasible_trajectory(wp, cons, cfg)
    r = optimize_constrained(init, cons, cfg, SolverConfig(recursion_depth_limit=0))
    assert r.termination == "depth_limit"
    assert all(e["depth"] == 0 for e in r.recursion)


def test_binding_acceleration_lengthens_trajectory():
    prob = random_walk_problem(8, 5)
    cons = [builtin_speed_constraint(50.0), builtin_accel_constraint(1.0)]
    solver = SolverConfig(stop_threshold=1e-6)
    rc, _ = con_solve(prob, solver, cons)
    ru = unc_solve(prob, solver)
    assert rc.trajectory.total_duration > ru.trajectory.total_duration
    assert rc.cost >= ru.cost


# -- initial allocation ------------------------------------------------------

def test_initial_collinear_first_try():
    wp = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [4, 0, 0.0]])
    cons = [builtin_speed_constraint(1.0), builtin_accel_constraint(100.0)]
    traj = initial_feasible_trajectory(wp, cons, CFG)
    L = np.array([1.0, 1.0, 2.0])
    np.testing.assert_allclose(traj.durations, 2 * np.maximum(L / 1.0, np.sqrt(L / 100.0)))


def test_initial_slower_bound_longer():
    prob = random_walk_problem(5, 2)
    fast = initial_feasible_trajectory(prob.waypoints, [builtin_speed_constraint(5.0)], CFG)
    slow = initial_feasible_trajectory(prob.waypoints, [builtin_speed_constraint(0.5)], CFG)
    assert np.all(slow.durations > fast.durations)
    cons = [builtin_speed_constraint(0.5)]
    assert all(v.feasible for v in check_trajectory(slow, cons))


def test_initial_rejects_repeated_and_contradictory():
    with pytest.raises(InvalidProblemError):
        initial_feasible_trajectory(np.zeros((2, 3)), [], CFG)
    wp = np.array([[0, 0, 0], [5, 0, 0.0]])
    blocker = builtin_obstacle_constraint([0, 0, 0], 1.0)
    with pytest.raises(ConstructionError):
        initial_feasible_trajectory(wp, [blocker], CFG, max_doublings=3)
