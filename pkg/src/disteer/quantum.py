"""Quantum states and the measurements the protocol uses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SPECTRAL_TOL, STRUCT_TOL, is_hermitian, projector

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
_LABELS = {1: "X", 2: "Y", 3: "Z"}


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    label: str = ""
    outcomes: tuple[int, int] = (1, -1)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not is_hermitian(m, tol=SPECTRAL_TOL):
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_dichotomic(self, tol: float = SPECTRAL_TOL) -> bool:
        return bool(np.allclose(self.matrix @ self.matrix, np.eye(self.dim), atol=tol))

    def projector(self, outcome: int) -> np.ndarray:
        """Spectral projector (I + outcome * O)/2 of a dichotomic observable."""
        if outcome not in (1, -1):
            raise ValueError(f"outcome must be +1 or -1, got {outcome}")
        return (np.eye(self.dim) + outcome * self.matrix) / 2


@dataclass(frozen=True)
class Povm:
    elements: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = field(default=())

    def is_valid(self, tol: float = SPECTRAL_TOL) -> bool:
        d = self.elements[0].shape[0]
        total = sum(self.elements)
        if not np.allclose(total, np.eye(d), atol=tol):
            return False
        return all(np.linalg.eigvalsh((e + e.conj().T) / 2).min() >= -tol for e in self.elements)


@dataclass(frozen=True)
class WaveplateSetting:
    qwp_angle: float
    hwp_angle: float

    def __post_init__(self):
        if not (np.isfinite(self.qwp_angle) and np.isfinite(self.hwp_angle)):
            raise ValueError("wave-plate angles must be finite")


def pauli(j: int) -> Observable:
    if j not in (1, 2, 3):
        raise ValueError(f"Pauli index must be 1, 2 or 3, got {j}")
    return Observable(PAULIS[j], label=_LABELS[j])


def bell_phi_plus(d: int = 2) -> np.ndarray:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[[k * d + k for k in range(d)]] = 1 / np.sqrt(d)
    return v


def psi_minus() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def werner(v: float) -> np.ndarray:
    """v |Psi-><Psi-| + (1 - v) I/4."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return v * projector(psi_minus()) + (1 - v) * np.eye(4) / 4


def depolarized_phi_plus(w: float) -> np.ndarray:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {w}")
    return w * projector(bell_phi_plus(2)) + (1 - w) * np.eye(4) / 4


def tau_input(b: int, j: int) -> np.ndarray:
    """Input state (I + b sigma_j)/2."""
    if b not in (1, -1):
        raise ValueError(f"b must be +1 or -1, got {b}")
    return pauli(j).projector(b)


def bob_chsh_observables(i: int, j: int, transpose: bool = True) -> tuple[Observable, Observable]:
    """Bob's pair (s_i + s_j)/sqrt2, (s_i - s_j)/sqrt2 for the CHSH line (i, j).

    With ``transpose`` the Paulis are taken in the transposed frame
    (sigma_y -> -sigma_y), which is what Bob must measure for the line to
    reach 2*sqrt2 on |Phi+> against Charlie's sigma_i, sigma_j.
    """
    if i == j or {i, j} - {1, 2, 3}:
        raise ValueError(f"need two distinct Pauli indices, got ({i}, {j})")
    si, sj = PAULIS[i], PAULIS[j]
    if transpose:
        si, sj = si.T, sj.T
    li, lj = _LABELS[i], _LABELS[j]
    return (
        Observable((si + sj) / np.sqrt(2), label=f"{li}+{lj}"),
        Observable((si - sj) / np.sqrt(2), label=f"{li}-{lj}"),
    )


def partial_bsm(d: int = 2) -> Povm:
    """Two-outcome measurement {|Phi+_d><Phi+_d|, I - |Phi+_d><Phi+_d|}; "yes" first."""
    b1 = projector(bell_phi_plus(d))
    return Povm((b1, np.eye(d * d) - b1), labels=("yes", "no"))


def half_wave_plate(theta_deg: float) -> np.ndarray:
    t = np.radians(2 * theta_deg)
    return np.array([[np.cos(t), np.sin(t)], [np.sin(t), -np.cos(t)]], dtype=complex)


def quarter_wave_plate(theta_deg: float) -> np.ndarray:
    t = np.radians(theta_deg)
    c, s = np.cos(t), np.sin(t)
    return np.exp(-1j * np.pi / 4) * np.array(
        [[c * c + 1j * s * s, (1 - 1j) * s * c], [(1 - 1j) * s * c, s * s + 1j * c * c]]
    )


def waveplate_observable(s: WaveplateSetting) -> Observable:
    """Observable measured by QWP, then HWP, then an H/V analyzer: U^dag sigma_z U."""
    u = half_wave_plate(s.hwp_angle) @ quarter_wave_plate(s.qwp_angle)
    m = u.conj().T @ SZ @ u
    m = (m + m.conj().T) / 2
    m[np.abs(m) < STRUCT_TOL] = 0
    return Observable(m, label=f"QWP{s.qwp_angle:g}/HWP{s.hwp_angle:g}")


# Wave-plate table for the self-testing stage, (party, label, qwp, hwp) as printed.
# The printed HWP angle for Bob's Y+Z row is 11.45; 11.25 is the value that
# reproduces the observable, see WAVEPLATE_CORRECTIONS.
WAVEPLATE_TABLE = (
    ("bob", "X+Z", 22.5, 11.25),
    ("bob", "X-Z", -22.5, -56.25),
    ("bob", "X+Y", 45.0, 33.75),
    ("bob", "X-Y", 45.0, 11.25),
    ("bob", "Y+Z", 0.0, 11.45),
    ("bob", "Y-Z", 0.0, -56.25),
    ("charlie", "X", 45.0, 22.5),
    ("charlie", "Z", 0.0, 0.0),
    ("charlie", "Y", 0.0, 22.5),
)
WAVEPLATE_CORRECTIONS = {("bob", "Y+Z"): (0.0, 11.25)}


def table_target(label: str, y_sign: int = -1) -> np.ndarray:
    """Nominal observable for a table label; "Y" is read as ``y_sign`` * sigma_y."""
    comps = {"X": SX, "Y": y_sign * SY, "Z": SZ}
    if len(label) == 1:
        return comps[label]
    a, op, b = label[0], label[1], label[2]
    sgn = 1 if op == "+" else -1
    return (comps[a] + sgn * comps[b]) / np.sqrt(2)


def ideal_selftest_observables() -> tuple[list[Observable], list[Observable]]:
    """Bob's six CHSH observables (y = 1..6) and Charlie's X, Y, Z (z = 1..3).

    The pairing follows the triple Bell operator: line (X,Y) uses y = 1, 2,
    line (X,Z) uses y = 3, 4 and line (Y,Z) uses y = 5, 6, each reaching
    2*sqrt2 on |Phi+>.
    """
    xy_p, xy_m = bob_chsh_observables(1, 2)
    xz_p, xz_m = bob_chsh_observables(1, 3)
    yz_p, yz_m = bob_chsh_observables(2, 3)
    bob = [xy_p, xy_m, xz_m, xz_p, yz_m, yz_p]
    return bob, [pauli(1), pauli(2), pauli(3)]
