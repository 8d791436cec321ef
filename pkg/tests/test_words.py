import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from disteer.selftest import words as W
from disteer.selftest.relaxation import word_operator

from conftest import random_density, seeds

bob_seq = st.lists(st.integers(0, 5), max_size=6)
charlie_seq = st.lists(st.integers(0, 2), max_size=6)


def test_word_basics():
    w = W.Word.make((2, 3), (0, 2))
    assert str(w) == "B3B4C1C3"
    assert W.Word.parse("B3B4C1C3") == w
    assert str(W.IDENTITY) == "1" and W.Word.parse("1") == W.IDENTITY
    assert W.Word.make((1, 1, 2)) == W.Word((2,), ())
    assert w.degree == 4
    assert w.adjoint() == W.Word((3, 2), (2, 0))
    assert w.canonical() == w.adjoint().canonical()


@given(bob_seq, charlie_seq, bob_seq, charlie_seq)
def test_multiplication_and_adjoint(b1, c1, b2, c2):
    u, v = W.Word.make(b1, c1), W.Word.make(b2, c2)
    assert (u * v).adjoint() == v.adjoint() * u.adjoint()
    assert u * u.adjoint() == W.IDENTITY
    assert W.Word.parse(str(u)) == u


@given(seeds, bob_seq, charlie_seq, bob_seq, charlie_seq)
def test_word_algebra_matches_matrices(seed, b1, c1, b2, c2):
    rng = np.random.default_rng(seed)

    def dichotomic():
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        return v[0] * np.array([[0, 1], [1, 0]]) + v[1] * np.array([[0, -1j], [1j, 0]]) + v[2] * np.diag([1, -1])

    bob = [dichotomic() for _ in range(6)]
    charlie = [dichotomic() for _ in range(3)]
    u, v = W.Word.make(b1, c1), W.Word.make(b2, c2)
    lhs = word_operator(u * v, bob, charlie)
    rhs = word_operator(u, bob, charlie) @ word_operator(v, bob, charlie)
    assert np.allclose(lhs, rhs, atol=1e-10)
    rho = random_density(rng, 4)
    mu = np.trace(rho @ word_operator(u, bob, charlie))
    mu_adj = np.trace(rho @ word_operator(u.adjoint(), bob, charlie))
    assert abs(mu - np.conj(mu_adj)) < 1e-10


def test_polynomial_helpers():
    x, z = W.letter("B", 0), W.letter("B", 1)
    p = W.pmul(W.padd((1, W.const()), (1, z)), x)
    assert p == {W.Word((0,), ()): 1.0, W.Word((1, 0), ()): 1.0}
    adj = W.padjoint(p)
    assert W.Word((0, 1), ()) in adj
    herm = W.padd((1, p), (1, adj))
    can = W.canonicalize(herm)
    assert can == {W.Word((0,), ()): 2.0, W.Word((0, 1), ()): 2.0}
    val = W.evaluate(can, lambda w: 0.5)
    assert val == 2.0
    try:
        W.letter("A", 0)
    except ValueError:
        pass
    else:
        raise AssertionError("party A must be rejected")
