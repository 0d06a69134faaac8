import numpy as np
import pytest
from hypothesis import given, strategies as st

from amtraj import ObjectiveConfig, optimal_free_derivatives, partitioned_quadratic, total_cost
from amtraj.spatial_phase import DENSE_LIMIT
from amtraj.trajectory import default_fixed_mask
from reference import fd_gradient, ref_total_cost

CFG = ObjectiveConfig(rho=512.0)


def problem(rng, M, cfg=CFG):
    S = (cfg.order + 1) // 2
    mask = default_fixed_mask(M, S)
    d = np.zeros((M + 1, S, 3))
    d[:, 0] = np.cumsum(rng.uniform(-3, 8, (M + 1, 3)), axis=0)
    T = rng.uniform(0.5, 3.0, M)
    return d[mask], T, mask


def ref_J(fixed, free, T, mask, cfg=CFG):
    d = np.empty(mask.shape)
    d[mask] = fixed
    d[~mask] = free
    return ref_total_cost(d, T, cfg.rho, range(cfg.d_min, cfg.d_max + 1), cfg.weights, cfg.order)


def test_finite_difference_stationarity(rng):
    for _ in range(10):
        fixed, T, mask = problem(rng, 5)
        x = optimal_free_derivatives(fixed, T, mask, CFG)
        J = ref_J(fixed, x, T, mask)
        g = fd_gradient(lambda y: ref_J(fixed, y, T, mask), x, 1e-4)
        assert np.linalg.norm(g) < 1e-5 * (1 + abs(J))
        for k in range(x.size):
            for s in (1e-4, -1e-4):
                y = x.copy()
                y[k] += s
                assert total_cost(fixed, y, T, mask, CFG) > total_cost(fixed, x, T, mask, CFG)


def test_symmetric_middle_acceleration_is_zero():
    cfg = ObjectiveConfig(rho=1.0)
    mask = default_fixed_mask(2, 3)
    d = np.zeros((3, 3, 3))
    d[:, 0, 0] = [0.0, 1.0, 2.0]
    x = optimal_free_derivatives(d[mask], [1.0, 1.0], mask, cfg)
    blocks = np.empty_like(d)
    blocks[mask] = d[mask]
    blocks[~mask] = x
    assert abs(blocks[1, 2, 0]) < 1e-12
    # and the cost grows when the acceleration is nudged either way
    for s in (1e-3, -1e-3):
        y = blocks.copy()
        y[1, 2, 0] += s
        assert total_cost(d[mask], y[~mask], [1, 1], mask, cfg) > total_cost(d[mask], x, [1, 1], mask, cfg)


def test_no_free_variables():
    mask = default_fixed_mask(1, 3)
    fixed = np.zeros(mask.sum())
    fixed[9] = 1.0
    assert optimal_free_derivatives(fixed, [1.0], mask, CFG).size == 0


@given(seed=st.integers(0, 2**32 - 1), M=st.integers(2, 8))
def test_optimality_linearity_residual(seed, M):
    rng = np.random.default_rng(seed)
    fixed, T, mask = problem(rng, M)
    x = optimal_free_derivatives(fixed, T, mask, CFG)
    J = total_cost(fixed, x, T, mask, CFG)
    for _ in range(100):
        alt = x + rng.normal(scale=rng.choice([1e-3, 1e-1, 3.0]), size=x.size)
        assert J <= total_cost(fixed, alt, T, mask, CFG) * (1 + 1e-12)
    a = float(rng.uniform(-4, 4))
    np.testing.assert_allclose(optimal_free_derivatives(a * fixed, T, mask, CFG), a * x,
                               rtol=1e-9, atol=1e-9 * max(1.0, abs(a) * np.abs(x).max()))
    pq = partitioned_quadratic(T, mask, CFG)
    rhs = pq.R_PF @ fixed
    res = pq.R_PP @ x + rhs
    assert np.linalg.norm(res) < 1e-8 * np.linalg.norm(rhs)


def test_sparse_path_matches_dense(rng):
    M = DENSE_LIMIT // 2 + 5
    fixed, T, mask = problem(rng, M)
    x = optimal_free_derivatives(fixed, T, mask, CFG)
    pq = partitioned_quadratic(T, mask, CFG)
    x_dense = np.linalg.solve(pq.R_PP.toarray(), -(pq.R_PF @ fixed))
    np.testing.assert_allclose(x, x_dense, rtol=1e-7, atol=1e-9)


def test_axis_dependent_mask(rng):
    fixed_full, T, mask = problem(rng, 4)
    d = np.zeros(mask.shape)
    d[mask] = fixed_full
    mask2 = mask.copy()
    mask2[2, 1, 1] = True
    d[2, 1, 1] = 0.7
    x = optimal_free_derivatives(d[mask2], T, mask2, CFG)
    g = fd_gradient(lambda y: ref_J(d[mask2], y, T, mask2), x, 1e-4)
    assert np.linalg.norm(g) < 1e-5 * (1 + total_cost(d[mask2], x, T, mask2, CFG))
