import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amtraj import (
    ConstraintSpec,
    Trajectory,
    builtin_accel_constraint,
    builtin_obstacle_constraint,
    builtin_speed_constraint,
    check_piece,
    check_trajectory,
    compose_constraint_polynomial,
)
from amtraj.feasibility import TIGHT_REL_TOL, piece_violations
from amtraj.trajectory import default_fixed_mask
from reference import dense_constraint_max, random_piece, ref_coeffs

T2 = np.zeros((6, 3))
T2[2, 0] = 1.0  # p(t) = (t^2, 0, 0)


def test_builtin_terms():
    v = builtin_speed_constraint(5.0)
    assert v.derivative_order == 1 and v.d_g == 2
    assert set(v.terms) == {(1.0, (2, 0, 0)), (1.0, (0, 2, 0)), (1.0, (0, 0, 2)), (-25.0, (0, 0, 0))}
    a = builtin_accel_constraint(3.5)
    assert a.derivative_order == 2
    assert (-12.25, (0, 0, 0)) in a.terms
    o = builtin_obstacle_constraint([0, 0, 0], 1.0)
    assert o.derivative_order == 0
    assert set(o.terms) == {(-1.0, (2, 0, 0)), (-1.0, (0, 2, 0)), (-1.0, (0, 0, 2)), (1.0, (0, 0, 0))}


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
def test_builtin_rejects_bad_bounds(bad):
    for f in (builtin_speed_constraint, builtin_accel_constraint):
        with pytest.raises(ValueError):
            f(bad)
    with pytest.raises(ValueError):
        builtin_obstacle_constraint([0, 0, 0], bad)


def test_spec_validation():
    with pytest.raises(ValueError):
        ConstraintSpec(1, ())
    with pytest.raises(ValueError):
        ConstraintSpec(1, ((1.0, (1, 0)),))
    with pytest.raises(ValueError):
        ConstraintSpec(-1, ((1.0, (0, 0, 0)),))
    with pytest.raises(ValueError):
        ConstraintSpec(1, ((1.0, (0, 0, 0)),), epsilon=-1.0)


@given(center=st.lists(st.floats(-5, 5), min_size=3, max_size=3), r=st.floats(0.1, 3),
       pts=st.lists(st.lists(st.floats(-10, 10), min_size=3, max_size=3), min_size=1, max_size=5))
def test_obstacle_expansion_matches_definition(center, r, pts):
    spec = builtin_obstacle_constraint(center, r)
    pts = np.array(pts)
    want = r * r - ((pts - np.array(center)) ** 2).sum(axis=1)
    np.testing.assert_allclose(spec.evaluate(pts), want, atol=1e-9 * (1 + np.abs(want).max()))


def test_compose_examples(frozen):
    g = compose_constraint_polynomial(builtin_speed_constraint(2.0), T2)
    np.testing.assert_allclose(g.coefficients, frozen["composed_speed_t2_vmax2"], atol=1e-12)
    np.testing.assert_allclose(g.coefficients, [-4, 0, 4], atol=1e-12)
    z = compose_constraint_polynomial(builtin_speed_constraint(3.0), np.zeros((6, 3)))
    np.testing.assert_allclose(z.coefficients, [-9.0])


@given(seed=st.integers(0, 2**32 - 1))
def test_compose_degree_and_values(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(6, 3))
    for spec in (builtin_speed_constraint(2.0), builtin_accel_constraint(1.0),
                 builtin_obstacle_constraint(rng.normal(size=3), 1.0),
                 ConstraintSpec(1, ((1.0, (1, 1, 1)), (-2.0, (0, 3, 0)), (0.5, (0, 0, 0))))):
        g = compose_constraint_polynomial(spec, c)
        assert g.degree <= spec.d_g * (5 - spec.derivative_order)
        ts = np.linspace(0, 2, 9)
        i = spec.derivative_order
        vals = np.stack([np.polynomial.polynomial.polyval(ts, np.polynomial.polynomial.polyder(c[:, a], i))
                         for a in range(3)], axis=-1)
        want = spec.evaluate(vals)
        np.testing.assert_allclose(g(ts), want, rtol=1e-10, atol=1e-10 * (1 + np.abs(want).max()))


def test_check_piece_examples():
    spec = [builtin_speed_constraint(2.0)]
    assert check_piece(T2, 0.5, spec).feasible
    bad = check_piece(T2, 2.0, spec)
    assert not bad.feasible and bad.violated_constraint == 0 and not bad.tight
    near = check_piece(T2, 0.99999, spec)
    assert near.feasible and near.tight
    with pytest.raises(ValueError):
        check_piece(T2, 0.0, spec)


def test_violation_at_start():
    c = np.zeros((6, 3))
    c[1, 0] = 10.0  # speed 10 from t = 0
    v = check_piece(c, 1.0, [builtin_speed_constraint(1.0)])
    assert not v.feasible


def test_interior_violation_found():
    # speed peaks in the middle and is below the bound at both ends
    c = np.zeros((6, 3))
    c[:4, 0] = [0.0, 0.0, 3.0, -2.0]  # p' = 6t - 6t^2, peak 1.5 at t = 0.5
    assert not check_piece(c, 1.0, [builtin_speed_constraint(1.4)]).feasible
    assert check_piece(c, 1.0, [builtin_speed_constraint(1.6)]).feasible


def test_zero_trajectory_feasible():
    traj = Trajectory(5, np.zeros((3, 3, 3)), [1.0, 2.0], np.ones((3, 3, 3), bool))
    cons = [builtin_speed_constraint(1.0), builtin_accel_constraint(1.0)]
    assert all(v.feasible for v in check_trajectory(traj, cons))


def test_hot_piece_is_identified():
    M = 4
    d = np.zeros((M + 1, 3, 3))
    d[:, 0, 0] = np.arange(M + 1, dtype=float)
    T = np.full(M, 2.0)
    T[2] = 0.2
    traj = Trajectory(5, d, T, default_fixed_mask(M, 3))
    verdicts = check_trajectory(traj, [builtin_speed_constraint(2.0)])
    assert [m for m, v in enumerate(verdicts) if not v.feasible] == [2]


def test_tight_implies_feasible(rng):
    spec = [builtin_speed_constraint(2.0), builtin_accel_constraint(3.0)]
    for _ in range(200):
        stacked, T = random_piece(rng)
        v = check_piece(ref_coeffs(stacked, T, 5), T, spec)
        assert v.feasible or not v.tight


def test_sampling_oracle_agreement(rng):
    cons = [builtin_speed_constraint(5.0), builtin_accel_constraint(3.5)]
    for _ in range(300):
        stacked, T = random_piece(rng)
        c = ref_coeffs(stacked, T, 5)
        v = check_piece(c, T, cons)
        gmax = [dense_constraint_max(s, c, T) for s in cons]
        if any(g >= 0 for g in gmax):
            assert not v.feasible
        if not v.feasible:
            j = v.violated_constraint
            # the continuous maximum lies within sampling resolution of the bound
            assert gmax[j] > -cons[j].epsilon - 1e-3 * cons[j].scale
        if v.tight:
            assert max(g + TIGHT_REL_TOL * s.scale for g, s in zip(gmax, cons)) > -1e-3


@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(1e-9, 1.0))
def test_epsilon_monotonicity(seed, eps):
    rng = np.random.default_rng(seed)
    stacked, T = random_piece(rng)
    c = ref_coeffs(stacked, T, 5)
    strict = check_piece(c, T, [builtin_speed_constraint(4.0, epsilon=0.0)])
    loose = check_piece(c, T, [builtin_speed_constraint(4.0, epsilon=eps)])
    if strict.feasible:
        assert loose.feasible


def test_resolution_independence_timing():
    """Same polynomial degrees, very different durations: comparable cost."""
    rng = np.random.default_rng(3)
    cons = [builtin_speed_constraint(1e6), builtin_accel_constraint(1e6)]
    times = {}
    for T in (0.1, 100.0):
        pieces = []
        for _ in range(200):
            stacked, _ = random_piece(rng)
            pieces.append(ref_coeffs(stacked, T, 5))
        C = np.stack(pieces)
        piece_violations(C, T, cons)
        best = np.inf
        for _ in range(5):
            t0 = time.perf_counter()
            piece_violations(C, T, cons)
            best = min(best, time.perf_counter() - t0)
        times[T] = best
    ratio = max(times.values()) / min(times.values())
    assert ratio < 2.0 or max(times.values()) < 2e-4
