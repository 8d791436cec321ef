import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disteer.linalg import (
    as_operator,
    hermitian_eig,
    is_density,
    is_hermitian,
    ket,
    kron,
    partial_trace,
    projector,
    state_fidelity,
    trace_distance,
    trace_norm,
)
from disteer.quantum import I2, SX, SY, SZ, bell_phi_plus, psi_minus, tau_input, werner

from conftest import random_density, random_hermitian, random_unit_vector, seeds


def test_kron_examples():
    assert np.allclose(kron(I2, I2), np.eye(4))
    zz = kron(SZ, SZ)
    e00 = np.array([1, 0, 0, 0])
    assert np.allclose(zz @ e00, e00)
    assert abs(np.trace(kron(SX, SY))) < 1e-15


@given(seeds)
def test_kron_associative_and_bilinear(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, 2) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)
    assert np.allclose(kron(a + 2 * b, c), kron(a, c) + 2 * kron(b, c), atol=1e-12)
    assert kron(a, b, c).shape == (8, 8)


def _ptrace_oracle(m, dims, keep):
    # independent route: explicit sum over basis vectors of traced factors
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    out = np.zeros((dk, dk), dtype=complex)
    for idx in np.ndindex(*[dims[i] for i in traced]):
        factors = []
        t = dict(zip(traced, idx))
        for i in range(n):
            if i in t:
                e = np.zeros((1, dims[i]))
                e[0, t[i]] = 1
                factors.append(e)
            else:
                factors.append(np.eye(dims[i]))
        p = kron(*factors)
        out += p @ m @ p.conj().T
    return out


def test_partial_trace_examples():
    phi = projector(bell_phi_plus())
    assert np.allclose(partial_trace(phi, [2, 2], [0]), I2 / 2)
    rng = np.random.default_rng(1)
    ra, rb = random_density(rng, 2), random_density(rng, 3)
    assert np.allclose(partial_trace(kron(ra, rb), [2, 3], [0]), ra, atol=1e-12)
    for b in (1, -1):
        for j in (1, 2, 3):
            tau = tau_input(b, j)
            out = partial_trace(kron(I2, tau) @ phi, [2, 2], [0])
            assert np.allclose(out, tau.T / 2, atol=1e-12)


@given(seeds, st.sampled_from([(2, 2), (2, 3, 2), (3, 2), (2, 2, 2, 2)]), st.data())
def test_partial_trace_matches_oracle(seed, dims, data):
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    rho = random_density(rng, d)
    keep = data.draw(st.sets(st.integers(0, len(dims) - 1), min_size=1))
    keep = sorted(keep)
    got = partial_trace(rho, dims, keep)
    assert np.allclose(got, _ptrace_oracle(rho, dims, keep), atol=1e-12)
    assert abs(np.trace(got) - 1) < 1e-10


@given(seeds)
def test_kron_then_trace_second_factor(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 4)
    assert np.allclose(partial_trace(kron(a, b), [2, 4], [0]), a * np.trace(b), atol=1e-10)


def test_partial_trace_keep_all_and_errors():
    rho = random_density(np.random.default_rng(2), 4)
    assert np.allclose(partial_trace(rho, [2, 2], [0, 1]), rho)
    with pytest.raises(ValueError):
        partial_trace(rho, [2, 3], [0])
    with pytest.raises(ValueError):
        partial_trace(rho, [2, 2], [2])


def test_hermitian_eig_examples():
    w, _ = hermitian_eig(SZ)
    assert np.allclose(w, [-1, 1])
    # Delta_j has eigenvalues +-sqrt(1 - f)
    f = 0.99
    alpha = np.sqrt(f)
    psi = np.array([1, 0])
    perp = np.array([alpha, np.sqrt(1 - f)])
    delta = projector(psi) - projector(perp)
    w, _ = hermitian_eig(delta)
    assert np.allclose(w, [-0.1, 0.1], atol=1e-12)
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@given(seeds)
def test_hermitian_eig_reconstructs(seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, 4)
    w, v = hermitian_eig(a)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - a)) < 1e-10
    w, _ = hermitian_eig(random_density(rng, 4))
    assert w.min() >= -1e-10 and w.max() <= 1 + 1e-10


def test_trace_distance_examples():
    rho = random_density(np.random.default_rng(3), 4)
    assert trace_distance(rho, rho) < 1e-14
    p0, p1 = projector([1, 0]), projector([0, 1])
    assert abs(trace_distance(p0, p1) - 2) < 1e-14
    with pytest.raises(ValueError):
        trace_distance(p0, np.eye(4) / 4)


@given(seeds)
def test_trace_distance_pure_state_formula(seed):
    rng = np.random.default_rng(seed)
    u, v = random_unit_vector(rng, 4), random_unit_vector(rng, 4)
    f = abs(np.vdot(u, v)) ** 2
    # pure states: ||P_u - P_v||_1 = 2 sqrt(1 - f); check against sqrt(2(1 - sqrt f)) only at the level of the pure-vector norm
    assert abs(trace_distance(projector(u), projector(v)) - 2 * np.sqrt(1 - f)) < 1e-10
    phase = np.vdot(v, u) / abs(np.vdot(v, u))
    assert abs(np.linalg.norm(u - phase * v) - np.sqrt(2 * (1 - np.sqrt(f)))) < 1e-10


@given(seeds)
def test_trace_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng, 4) for _ in range(3))
    assert abs(trace_distance(a, b) - trace_distance(b, a)) < 1e-12
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-9
    assert trace_distance(a, b) <= trace_norm(a) + trace_norm(b) + 1e-12


def test_state_fidelity_examples():
    phi = bell_phi_plus()
    assert abs(state_fidelity(phi, projector(phi)) - 1) < 1e-14
    assert abs(state_fidelity(phi, np.eye(4) / 4) - 0.25) < 1e-14
    for v in (0.0, 0.3, 0.7015, 1.0):
        assert abs(state_fidelity(psi_minus(), werner(v)) - (v + (1 - v) / 4)) < 1e-14
    assert abs(state_fidelity(psi_minus(), werner(0.7015)) - 0.776125) < 1e-12
    with pytest.raises(ValueError):
        state_fidelity(phi, np.eye(2) / 2)


def test_structural_predicates():
    assert is_hermitian(SY)
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
    assert is_density(np.eye(2) / 2)
    assert not is_density(np.diag([1.5, -0.5]))
    assert not is_density(np.eye(2))
    with pytest.raises(ValueError):
        as_operator(np.zeros((2, 3)))
    assert np.allclose(ket([3, 4]), [0.6, 0.8])
    with pytest.raises(ValueError):
        ket([0, 0])
