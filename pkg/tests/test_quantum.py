import numpy as np
import pytest
from hypothesis import given

from disteer.linalg import kron, partial_trace, projector
from disteer.quantum import (
    I2,
    SX,
    SY,
    SZ,
    WAVEPLATE_TABLE,
    WAVEPLATE_CORRECTIONS,
    Observable,
    WaveplateSetting,
    bell_phi_plus,
    bob_chsh_observables,
    depolarized_phi_plus,
    ideal_selftest_observables,
    partial_bsm,
    pauli,
    psi_minus,
    table_target,
    tau_input,
    waveplate_observable,
    werner,
)

from conftest import random_density, random_hermitian, seeds


def test_pauli_algebra():
    for j in (1, 2, 3):
        p = pauli(j).matrix
        assert np.allclose(p @ p, I2)
        assert abs(np.trace(p)) < 1e-15
        assert pauli(j).is_dichotomic()
    assert np.allclose(pauli(1).matrix @ pauli(2).matrix, 1j * pauli(3).matrix)
    for bad in (0, 4):
        with pytest.raises(ValueError):
            pauli(bad)


def test_observable_projectors():
    o = pauli(3)
    assert np.allclose(o.projector(1), np.diag([1, 0]))
    assert np.allclose(o.projector(1) + o.projector(-1), I2)
    with pytest.raises(ValueError):
        o.projector(0)
    with pytest.raises(ValueError):
        Observable(np.array([[0, 1], [0, 0]]))


def test_bell_phi_plus():
    assert np.allclose(bell_phi_plus(2), np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(partial_trace(projector(bell_phi_plus()), [2, 2], [0]), I2 / 2)
    assert np.allclose(partial_trace(projector(bell_phi_plus(3)), [3, 3], [1]), np.eye(3) / 3)
    with pytest.raises(ValueError):
        bell_phi_plus(1)


@given(seeds)
def test_phi_plus_transpose_trick(seed):
    rng = np.random.default_rng(seed)
    for d in (2, 3):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        phi = bell_phi_plus(d)
        assert abs(phi.conj() @ kron(a, b.T) @ phi - np.trace(a @ b) / d) < 1e-12


def test_werner():
    assert np.allclose(werner(1), projector(psi_minus()))
    assert np.allclose(werner(0), np.eye(4) / 4)
    for v in (-0.1, 1.1):
        with pytest.raises(ValueError):
            werner(v)
    assert np.allclose(depolarized_phi_plus(1), projector(bell_phi_plus()))


def test_tau_input():
    assert np.allclose(tau_input(1, 3), np.diag([1, 0]))
    for j in (1, 2, 3):
        assert np.allclose(tau_input(1, j) + tau_input(-1, j), I2)
        for b in (1, -1):
            t = tau_input(b, j)
            assert np.allclose(t @ t, t)
            assert abs(np.trace(t @ pauli(j).matrix) - b) < 1e-14
            # steering identity
            out = 2 * partial_trace(kron(I2, t) @ projector(bell_phi_plus()), [2, 2], [0])
            assert np.max(np.abs(out - t.T)) < 1e-12
    with pytest.raises(ValueError):
        tau_input(0, 1)


def test_bob_chsh_observables():
    p, m = bob_chsh_observables(1, 3)
    assert np.allclose(p.matrix @ p.matrix, I2, atol=1e-10)
    for i, j in ((1, 2), (1, 3), (2, 3)):
        a, b = bob_chsh_observables(i, j)
        assert a.is_dichotomic() and b.is_dichotomic()
        assert np.allclose(a.matrix @ b.matrix + b.matrix @ a.matrix, 0, atol=1e-12)
        # CHSH on |Phi+> against Charlie's sigma_i, sigma_j
        rho = projector(bell_phi_plus())
        ci, cj = pauli(i).matrix, pauli(j).matrix

        def e(x, y):
            return np.real(np.trace(rho @ kron(x, y)))

        val = e(a.matrix, ci) + e(b.matrix, ci) + e(a.matrix, cj) - e(b.matrix, cj)
        assert abs(val - 2 * np.sqrt(2)) < 1e-12
    with pytest.raises(ValueError):
        bob_chsh_observables(2, 2)


@given(seeds)
def test_partial_bsm(seed):
    pov = partial_bsm(2)
    assert pov.labels == ("yes", "no")
    assert pov.is_valid()
    assert np.allclose(sum(pov.elements), np.eye(4))
    assert abs(np.trace(pov.elements[0]) - 1) < 1e-14
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, 2)
    tau = random_density(rng, 2)
    assert abs(np.trace(pov.elements[0] @ kron(a, tau.T)) - np.trace(a @ tau) / 2) < 1e-12
    assert partial_bsm(3).is_valid()
    with pytest.raises(ValueError):
        partial_bsm(1)


def test_waveplate_examples():
    assert np.allclose(waveplate_observable(WaveplateSetting(45, 22.5)).matrix, SX, atol=1e-12)
    assert np.allclose(waveplate_observable(WaveplateSetting(0, 0)).matrix, SZ, atol=1e-12)
    xz = waveplate_observable(WaveplateSetting(22.5, 11.25)).matrix
    assert np.allclose(xz, (SX + SZ) / np.sqrt(2), atol=1e-12)
    with pytest.raises(ValueError):
        WaveplateSetting(np.nan, 0)


def test_waveplate_angles_modulo_180():
    a = waveplate_observable(WaveplateSetting(22.5, 11.25)).matrix
    b = waveplate_observable(WaveplateSetting(202.5, 191.25)).matrix
    assert np.allclose(a, b, atol=1e-12)


def _row_distance(party, label, qwp, hwp):
    return np.max(np.abs(waveplate_observable(WaveplateSetting(qwp, hwp)).matrix - table_target(label)))


def test_table_rows_under_convention():
    for party, label, qwp, hwp in WAVEPLATE_TABLE:
        qwp, hwp = WAVEPLATE_CORRECTIONS.get((party, label), (qwp, hwp))
        assert _row_distance(party, label, qwp, hwp) < 1e-10, (party, label)


def test_table_printed_yz_row_is_flagged():
    printed = next(r for r in WAVEPLATE_TABLE if r[:2] == ("bob", "Y+Z"))
    assert printed[3] == 11.45
    assert _row_distance(*printed) > 1e-3
    assert set(WAVEPLATE_CORRECTIONS) == {("bob", "Y+Z")}


def test_y_row_is_minus_sigma_y():
    y = waveplate_observable(WaveplateSetting(0, 22.5)).matrix
    assert np.allclose(y, -SY, atol=1e-12)


def test_ideal_selftest_observables():
    bob, charlie = ideal_selftest_observables()
    assert len(bob) == 6 and len(charlie) == 3
    assert all(o.is_dichotomic() for o in bob + charlie)
    # transposed frame: sigma_y enters with a minus sign
    assert np.allclose(bob[0].matrix, (SX - SY) / np.sqrt(2))
    assert np.allclose(bob[3].matrix, (SX + SZ) / np.sqrt(2))
    rho = projector(bell_phi_plus())
    for o in bob:
        assert abs(np.trace(rho @ kron(o.matrix, np.eye(2)))) < 1e-14
