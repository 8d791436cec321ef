"""Dense complex linear algebra for 2-, 4- and 16-dimensional quantum objects.

Operators are plain ``numpy`` complex arrays; kets are 1-d complex arrays.
The tolerance ladder below is shared by every module in the package.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-10
SDP_TOL = 1e-8


def as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def ket(amplitudes, normalize: bool = True) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).ravel()
    if normalize:
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / nrm
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def is_hermitian(a, tol: float = STRUCT_TOL) -> bool:
    m = as_operator(a)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_density(rho, tol: float = SPECTRAL_TOL) -> bool:
    m = as_operator(rho)
    if not is_hermitian(m):
        return False
    if abs(np.trace(m) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(m).min() >= -tol)


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def partial_trace(a, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every tensor factor of ``a`` whose index is not in ``keep``.

    ``dims`` lists the factor dimensions; the kept factors stay in their
    original order.
    """
    m = as_operator(a)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0]:
        raise ValueError(f"dims {dims} do not multiply to {m.shape[0]}")
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    # contract traced factors pairwise, highest index first so axes stay valid
    traced = [i for i in range(n) if i not in keep]
    cur = n
    for i in reversed(traced):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix."""
    m = as_operator(a)
    if not is_hermitian(m, tol=SPECTRAL_TOL):
        raise ValueError("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w, v


def trace_norm(a) -> float:
    w, _ = hermitian_eig(a)
    return float(np.sum(np.abs(w)))


def trace_distance(rho, sigma) -> float:
    """Unnormalized trace distance ||rho - sigma||_1."""
    r, s = as_operator(rho), as_operator(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch {r.shape} vs {s.shape}")
    return trace_norm(r - s)


def state_fidelity(psi, rho) -> float:
    """<psi|rho|psi> for a normalized ket and a density matrix."""
    v = np.asarray(psi, dtype=complex).ravel()
    m = as_operator(rho)
    if v.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch {v.shape[0]} vs {m.shape[0]}")
    return float(np.real(v.conj() @ m @ v))


def psd_min_eig(a) -> float:
    m = as_operator(a)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
