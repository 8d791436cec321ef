"""Swap-circuit extraction of the tested state onto trusted qubits B', C'.

Each party's circuit uses a pair of dichotomic operators (X, Z): with the
ancilla starting in |0>, branch 0 applies (I + Z) and branch 1 applies
X (I - Z), each with weight 1/2.  The output on B'C' is

    rho_data[(m,k),(n,l)] = 1/16 Tr[(KB_n^dag KB_m) (x) (M^dag KC_l^dag KC_k M) rho]

where M is Charlie's operator under test (identity for the bare state).
The same recipe is evaluated numerically here and symbolically in
:mod:`disteer.selftest.relaxation`.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..linalg import SPECTRAL_TOL, as_operator
from ..quantum import PAULIS, Observable, bell_phi_plus
from . import words as W


def _mat(op) -> np.ndarray:
    return op.matrix if isinstance(op, Observable) else as_operator(op)


def _check_dichotomic(m: np.ndarray, name: str) -> None:
    if not np.allclose(m, m.conj().T, atol=SPECTRAL_TOL) or not np.allclose(
        m @ m, np.eye(m.shape[0]), atol=SPECTRAL_TOL
    ):
        raise ValueError(f"{name} is not a dichotomic observable")


def _branches(x: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    one = np.eye(x.shape[0])
    return one + z, x @ (one - z)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


# Bob's swap uses his (X-Z)/sqrt2 and (X+Z)/sqrt2 settings as (X, Z); this
# fixed rotation on B' undoes the 45 degree frame tilt.
BOB_FRAME = ry(-np.pi / 4)


def swap_rho_data(rho_bc, xb, zb, xc, zc, mj=None, bob_frame=None) -> np.ndarray:
    """Two-qubit state left on B'C' after the swap circuit acts on M rho M^dag.

    ``bob_frame`` is an optional unitary V applied as (V^dag (x) I) . (V (x) I)
    to the output, for swap operators given in a rotated frame.
    """
    xb, zb, xc, zc = (_mat(o) for o in (xb, zb, xc, zc))
    for m, name in ((xb, "Xb"), (zb, "Zb"), (xc, "Xc"), (zc, "Zc")):
        _check_dichotomic(m, name)
    if xb.shape != zb.shape or xc.shape != zc.shape:
        raise ValueError("swap operators of one party must share a dimension")
    rho = as_operator(rho_bc)
    db, dc = xb.shape[0], xc.shape[0]
    if rho.shape[0] != db * dc:
        raise ValueError(f"state dimension {rho.shape[0]} != {db}*{dc}")
    mm = np.eye(dc) if mj is None else _mat(mj)
    if mm.shape[0] != dc:
        raise ValueError("M must act on Charlie's system")
    kb, kc = _branches(xb, zb), _branches(xc, zc)
    out = np.zeros((4, 4), dtype=complex)
    for m, n, k, l in itertools.product(range(2), repeat=4):
        op_b = kb[n].conj().T @ kb[m]
        op_c = mm.conj().T @ kc[l].conj().T @ kc[k] @ mm
        out[2 * m + k, 2 * n + l] = np.trace(np.kron(op_b, op_c) @ rho) / 16
    if bob_frame is not None:
        v = np.kron(as_operator(bob_frame), np.eye(2))
        out = v.conj().T @ out @ v
    return out


def target_state(j: int, y_sign: int = 1) -> np.ndarray:
    """sigma_j^{C'} |Phi+> (j = 0 gives |Phi+> itself); ``y_sign`` flips sigma_y."""
    if j not in (0, 1, 2, 3):
        raise ValueError(f"j must be 0..3, got {j}")
    if y_sign not in (1, -1):
        raise ValueError(f"y_sign must be +1 or -1, got {y_sign}")
    op = PAULIS[j] * (y_sign if j == 2 else 1)
    return np.kron(np.eye(2), op) @ bell_phi_plus(2)


def swap_fidelity(rho_data, j: int, y_sign: int = 1) -> float:
    """<Phi+| s_j^{C'} rho_data s_j^{C'} |Phi+>."""
    r = as_operator(rho_data)
    if r.shape != (4, 4):
        raise ValueError(f"rho_data must be 4x4, got {r.shape}")
    t = target_state(j, y_sign)
    return float(np.real(t.conj() @ r @ t))


def fidelity_to_trace_distance(f: float) -> float:
    """Trace distance sqrt(2(1 - sqrt f)) between the extracted and target pure states."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {f}")
    return float(np.sqrt(2 * (1 - np.sqrt(f))))


def trace_distance_to_fidelity(t: float) -> float:
    if not 0.0 <= t <= np.sqrt(2) + 1e-15:
        raise ValueError(f"trace distance must lie in [0, sqrt2], got {t}")
    return float((1 - t * t / 2) ** 2)


# --- symbolic route -------------------------------------------------------


def _branch_polys(x: W.Poly, z: W.Poly) -> tuple[W.Poly, W.Poly]:
    one = W.const()
    return W.padd((1, one), (1, z)), W.pmul(x, W.padd((1, one), (-1, z)))


def symbolic_rho_data(xb: W.Poly, zb: W.Poly, xc: W.Poly, zc: W.Poly, mj: W.Poly | None) -> np.ndarray:
    """4x4 object array of polynomials mirroring :func:`swap_rho_data`."""
    kb, kc = _branch_polys(xb, zb), _branch_polys(xc, zc)
    mm = W.const() if mj is None else mj
    out = np.empty((4, 4), dtype=object)
    for m, n, k, l in itertools.product(range(2), repeat=4):
        op_b = W.pmul(W.padjoint(kb[n]), kb[m])
        op_c = W.pmul(W.padjoint(mm), W.padjoint(kc[l]), kc[k], mm)
        out[2 * m + k, 2 * n + l] = {w: v / 16 for w, v in W.pmul(op_b, op_c).items()}
    return out


def symbolic_fidelity(rho_poly: np.ndarray, j: int, bob_frame=None, y_sign: int = 1) -> dict[W.Word, float]:
    """Fidelity polynomial t^dag rho t with t = (V (x) sigma_j)|Phi+>."""
    t = target_state(j, y_sign)
    if bob_frame is not None:
        t = np.kron(as_operator(bob_frame), np.eye(2)) @ t
    acc: W.Poly = {}
    for r in range(4):
        for c in range(4):
            coef = np.conj(t[r]) * t[c]
            if abs(coef) < 1e-15:
                continue
            acc = W.padd((1, acc), (coef, rho_poly[r, c]))
    return W.canonicalize(acc)
