import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings

from disteer.selftest.solver import LmiBlock, solve_lmi

from conftest import seeds


def _block(f0, mats):
    n = f0.shape[0]
    p = sp.csr_matrix(np.stack([m.ravel() for m in mats], axis=1)) if mats else sp.csr_matrix((n * n, 0))
    return LmiBlock(np.asarray(f0, float), p)


def test_toy_two_by_two():
    # minimize x s.t. [[1, x], [x, 1]] >= 0
    blk = _block(np.eye(2), [np.array([[0.0, 1.0], [1.0, 0.0]])])
    res = solve_lmi(np.array([1.0]), [blk])
    assert res.status == "optimal"
    assert abs(res.value + 1) < 1e-7
    assert res.gap < 1e-6
    assert res.min_eig > -1e-7


def test_block_shape_validation():
    with pytest.raises(ValueError):
        LmiBlock(np.eye(2), sp.csr_matrix((3, 1)))
    blk = _block(np.eye(2), [np.eye(2)])
    with pytest.raises(ValueError):
        solve_lmi(np.zeros(2), [blk])


def test_max_eigenvalue_problem():
    # min t s.t. t I - A >= 0 gives lambda_max(A)
    rng = np.random.default_rng(4)
    g = rng.normal(size=(5, 5))
    a = (g + g.T) / 2
    res = solve_lmi(np.array([1.0]), [_block(-a, [np.eye(5)])])
    assert res.status == "optimal"
    assert abs(res.value - np.linalg.eigvalsh(a)[-1]) < 1e-7


def test_iteration_cap_is_reported():
    blk = _block(np.eye(2), [np.array([[0.0, 1.0], [1.0, 0.0]])])
    res = solve_lmi(np.array([1.0]), [blk], max_iter=2)
    assert res.iterations == 2
    assert res.status == "max_iter"


def test_deterministic():
    rng = np.random.default_rng(5)
    mats = [(lambda g: (g + g.T) / 2)(rng.normal(size=(4, 4))) for _ in range(3)]
    blocks = [_block(np.eye(4), mats), _block(np.eye(3), [np.diag(r) for r in rng.normal(size=(3, 3))])]
    c = rng.normal(size=3)
    r1, r2 = solve_lmi(c, blocks), solve_lmi(c, blocks)
    assert r1.value == r2.value and np.array_equal(r1.z, r2.z)


def _random_box_lmi(seed, n=5, m=4):
    rng = np.random.default_rng(seed)
    mats = [(lambda g: (g + g.T) / 2)(rng.normal(size=(n, n))) for _ in range(m)]
    box = [np.diag(v) for v in np.vstack([np.eye(m), -np.eye(m)]).T]
    blocks = [_block(np.eye(n), mats), _block(np.eye(2 * m), box)]
    return rng.normal(size=m), blocks, mats


@settings(max_examples=8)
@given(seeds)
def test_agrees_with_cvxpy(seed):
    cp = pytest.importorskip("cvxpy")
    c, blocks, mats = _random_box_lmi(seed)
    res = solve_lmi(c, blocks)
    assert res.status == "optimal"
    z = cp.Variable(len(c))
    lmi = np.eye(5) + sum(z[k] * mats[k] for k in range(len(c)))
    prob = cp.Problem(cp.Minimize(c @ z), [lmi >> 0, z <= 1, z >= -1])
    prob.solve(solver=cp.CLARABEL)
    assert abs(res.value - prob.value) < 1e-5
