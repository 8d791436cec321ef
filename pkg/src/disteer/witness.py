"""Steering witnesses, the noisy DI payoff, Bell-CHSH quantities and an LHS oracle.

Cell conventions shared with :mod:`disteer.protocol`: index 0 is the +1
outcome (or Bob's "yes") and index 1 the -1 outcome (or "no").  Settings are
0-based in arrays and 1-based in files and messages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .linalg import as_operator, is_density, kron, partial_trace
from .quantum import I2, PAULIS, bell_phi_plus, partial_bsm, pauli, tau_input

SQRT3 = np.sqrt(3.0)
SIGNS = np.array([1, -1])
TRIPLE_BELL_CAP = 6 * np.sqrt(2)
# (y, z, sign) per line, 1-based; lines (X,Y), (X,Z), (Y,Z)
CHSH_LINES = (
    ((1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 2, -1)),
    ((3, 1, 1), (4, 1, 1), (3, 3, -1), (4, 3, 1)),
    ((5, 2, 1), (6, 2, 1), (5, 3, -1), (6, 3, 1)),
)


def _sign(t: float) -> int:
    return 1 if t >= 0 else -1


@dataclass(frozen=True)
class WitnessReport:
    kind: str
    value: float
    threshold: float
    stderr: float | None = None
    components: tuple[float, ...] = field(default=(), compare=False)

    @property
    def violated(self) -> bool:
        return bool(self.value > self.threshold)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "threshold": self.threshold,
            "violated": self.violated,
            "stderr": self.stderr,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class Behavior:
    """Outcome statistics of the protocol.

    ``steer[x, z, a, bob, c]`` is P(a, bob, c | x, z) for Alice setting x,
    Charlie setting z and Bob's partial-BSM answer; ``chsh[y, z, b, c]`` is
    P(b, c | y, z) for the Bob-Charlie self-testing block.  Either table may
    be None when that part of the experiment is absent.
    """

    steer: np.ndarray | None = None
    chsh: np.ndarray | None = None
    steer_stderr: np.ndarray | None = None
    chsh_stderr: np.ndarray | None = None

    def __post_init__(self):
        for name, shape, axes in (("steer", (3, 3, 2, 2, 2), (2, 3, 4)), ("chsh", (6, 3, 2, 2), (2, 3))):
            t = getattr(self, name)
            if t is None:
                continue
            t = np.asarray(t, dtype=float)
            if t.shape != shape:
                raise ValueError(f"{name} table must have shape {shape}, got {t.shape}")
            if t.min() < -1e-12 or t.max() > 1 + 1e-12:
                raise ValueError(f"{name} probabilities outside [0, 1]")
            tot = t.sum(axis=axes)
            if np.max(np.abs(tot - 1)) > 1e-9:
                raise ValueError(f"{name} conditional distributions do not sum to 1")
            object.__setattr__(self, name, t)

    def _need(self, name: str) -> np.ndarray:
        t = getattr(self, name)
        if t is None:
            raise ValueError(f"behavior has no {name} table")
        return t

    def correlator(self, y: int, z: int) -> float:
        """E_{y,z} = sum_{b,c} b c P(b, c | y, z), settings 1-based."""
        t = self._need("chsh")
        return float(SIGNS @ t[y - 1, z - 1] @ SIGNS)

    def yes_correlator(self, j: int) -> float:
        """sum_{a,c} a c P(a, yes, c | x = z = j), 1-based."""
        t = self._need("steer")
        return float(SIGNS @ t[j - 1, j - 1, :, 0, :] @ SIGNS)

    def yes_mass(self, j: int) -> float:
        return float(self._need("steer")[j - 1, j - 1, :, 0, :].sum())

    def ac_mass(self, j: int) -> float:
        """sum_{a,c} P(a, c | j) with Bob's answer marginalized."""
        return float(self._need("steer")[j - 1, j - 1].sum())

    def to_dict(self) -> dict:
        out: dict = {}
        if self.steer is not None:
            out["cells"] = [
                {
                    "x": x + 1, "z": z + 1, "a": int(SIGNS[a]), "bob": ("yes", "no")[k], "c": int(SIGNS[c]),
                    "p": float(self.steer[x, z, a, k, c]),
                    "stderr": None if self.steer_stderr is None else float(self.steer_stderr[x, z, a, k, c]),
                }
                for x, z, a, k, c in np.ndindex(3, 3, 2, 2, 2)
            ]
        if self.chsh is not None:
            out["chsh_cells"] = [
                {
                    "y": y + 1, "z": z + 1, "b": int(SIGNS[b]), "c": int(SIGNS[c]),
                    "p": float(self.chsh[y, z, b, c]),
                    "stderr": None if self.chsh_stderr is None else float(self.chsh_stderr[y, z, b, c]),
                }
                for y, z, b, c in np.ndindex(6, 3, 2, 2)
            ]
        return out


def _two_qubit(rho) -> np.ndarray:
    r = as_operator(rho)
    if r.shape != (4, 4):
        raise ValueError(f"expected a two-qubit density matrix, got shape {r.shape}")
    if not is_density(r):
        raise ValueError("input is not a density matrix")
    return r


def pauli_correlators(rho) -> np.ndarray:
    r = _two_qubit(rho)
    return np.array([np.real(np.trace(r @ np.kron(PAULIS[j], PAULIS[j]))) for j in (1, 2, 3)])


def w_s_three_pauli(rho) -> WitnessReport:
    """Linear steering witness with three Pauli settings and optimal signs."""
    t = pauli_correlators(rho)
    value = sum(_sign(v) * v for v in t) - SQRT3
    return WitnessReport("W_S", float(value), 0.0, components=tuple(t))


def w_qrs(rho) -> WitnessReport:
    """Quantum-refereed witness from the contraction with Bob's partial BSM.

    Bob receives tau^T_{b,j}; weights are g_{b,j} = b.
    """
    r = _two_qubit(rho)
    b1 = partial_bsm(2).elements[0]
    value = 0.0
    corr = []
    for j in (1, 2, 3):
        sj = pauli(j)
        p = np.zeros((2, 2))  # [a, b]
        for ia, a in enumerate(SIGNS):
            for ib, b in enumerate(SIGNS):
                tau_t = tau_input(int(b), j).T
                op = np.kron(sj.projector(int(a)), b1)
                p[ia, ib] = np.real(np.trace(op @ np.kron(r, tau_t)))
        c = float(SIGNS @ p @ SIGNS)
        corr.append(c)
        value += _sign(c) * c - p.sum() / SQRT3
    return WitnessReport("W_QRS", float(value), 0.0, components=tuple(corr))


def w_di(rho) -> WitnessReport:
    """DI witness on rho_AB (x) |Phi+><Phi+|_{B0 C}, Charlie measuring sigma_j."""
    beh_tab = steering_table(rho)
    return w_di_from_behavior(Behavior(steer=beh_tab))


def steering_table(rho_ab, rho_bc=None) -> np.ndarray:
    """Born-rule table P(a, bob, c | x, z) for rho_AB (x) rho_{B0 C}.

    Party order in the joint state is A, B, B0, C; Bob's partial BSM acts on
    (B, B0).  Alice and Charlie measure sigma_x and sigma_z.
    """
    r = _two_qubit(rho_ab)
    s = np.outer(bell_phi_plus(2), bell_phi_plus(2).conj()) if rho_bc is None else _two_qubit(rho_bc)
    joint = np.kron(r, s)
    bsm = partial_bsm(2).elements
    out = np.zeros((3, 3, 2, 2, 2))
    for x, z in np.ndindex(3, 3):
        pa = [pauli(x + 1).projector(int(a)) for a in SIGNS]
        pc = [pauli(z + 1).projector(int(c)) for c in SIGNS]
        for ia, ik, ic in np.ndindex(2, 2, 2):
            op = kron(pa[ia], bsm[ik], pc[ic])
            out[x, z, ia, ik, ic] = np.real(np.trace(op @ joint))
    return np.clip(out, 0.0, 1.0)


def w_di_from_behavior(beh: Behavior) -> WitnessReport:
    value = 0.0
    corr = []
    for j in (1, 2, 3):
        c = beh.yes_correlator(j)
        corr.append(c)
        value += _sign(c) * c - beh.yes_mass(j) / SQRT3
    return WitnessReport("W_DI", float(value), 0.0, components=tuple(corr))


def _check_f(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (3,):
        raise ValueError(f"need three fidelities, got shape {f.shape}")
    if np.any(f < 0) or np.any(f > 1) or not np.all(np.isfinite(f)):
        raise ValueError(f"fidelities must lie in [0, 1], got {f}")
    return f


def fidelity_penalty(f) -> float:
    return float(np.sum(np.sqrt(1 - _check_f(f))))


def payoff_eq7(beh: Behavior, f) -> WitnessReport:
    """Noisy DI payoff in its x4 normalization (the canonical form).

    4 sum_j [s_j sum_{a,c} a c P(a,yes,c|j,j) - sum_{a,c} P(a,c|j)/sqrt3] - sum_j sqrt(1-f_j),
    with P(a,c|j) unconditioned on Bob's answer and s_j the sign of the
    yes-correlator.
    """
    pen = fidelity_penalty(f)
    value = 0.0
    for j in (1, 2, 3):
        c = beh.yes_correlator(j)
        value += 4 * _sign(c) * c - beh.ac_mass(j) / SQRT3
    return WitnessReport("payoff", float(value - pen), 0.0)


def noisy_di_witness(beh: Behavior, f, scale: str = "quarter") -> WitnessReport:
    """W_DI minus the self-testing penalty, quarter or full weight.

    ``"quarter"`` subtracts sum sqrt(1-f_j)/4, which is payoff_eq7 / 4 on
    exact behaviors; ``"full"`` subtracts the unscaled sum.
    """
    factors = {"quarter": 0.25, "full": 1.0}
    if scale not in factors:
        raise ValueError(f"scale must be one of {sorted(factors)}, got {scale!r}")
    w = w_di_from_behavior(beh).value
    return WitnessReport("W_DI_noisy", float(w - factors[scale] * fidelity_penalty(f)), 0.0)


def werner_payoff(v: float, f=(1.0, 1.0, 1.0)) -> float:
    """Closed-form payoff 3v - sqrt3 - sum sqrt(1-f_j) for Werner states."""
    return float(3 * v - SQRT3 - fidelity_penalty(f))


def noisy_threshold(f) -> float:
    """Least Werner visibility certified by the noisy witness."""
    return float((SQRT3 + fidelity_penalty(f)) / 3)


def boundary_fidelity(v: float) -> float:
    """Common fidelity f at which the Werner payoff at visibility v crosses zero."""
    s = (3 * v - SQRT3) / 3
    if s < 0:
        raise ValueError(f"v={v} is below the ideal threshold; no fidelity certifies it")
    return float(1 - s * s)


def chsh_lines(beh: Behavior) -> tuple[float, float, float]:
    return tuple(
        float(sum(s * beh.correlator(y, z) for y, z, s in line)) for line in CHSH_LINES
    )


def triple_bell(beh: Behavior) -> WitnessReport:
    """Sum of the three CHSH lines; threshold 6 is the local bound, 6 sqrt2 the quantum cap."""
    lines = chsh_lines(beh)
    return WitnessReport("triple_bell", float(sum(lines)), 6.0, components=lines)


def chsh_of_werner(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return float(2 * np.sqrt(2) * v)


def optimal_chsh(rho) -> float:
    """Maximal CHSH value of a two-qubit state, 2 sqrt(t1^2 + t2^2)."""
    r = _two_qubit(rho)
    t = np.array([[np.real(np.trace(r @ np.kron(PAULIS[i], PAULIS[j]))) for j in (1, 2, 3)] for i in (1, 2, 3)])
    s = np.sort(np.linalg.svd(t, compute_uv=False))[::-1]
    return float(2 * np.sqrt(s[0] ** 2 + s[1] ** 2))


# --- comparison with DI entanglement certification --------------------------------


def _unit(name: str, val: float) -> None:
    if not 0.0 <= val <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {val}")


def bowles_comparison(v: float, eta: float, f: float) -> tuple[float, float, bool]:
    """Both sides of the DI entanglement-witness condition; certified iff lhs <= rhs."""
    for name, val in (("v", v), ("eta", eta), ("f", f)):
        _unit(name, val)
    lhs = ((1 - 3 * v) * eta**2 + 2 * eta * (1 - eta) + 0.25 * (1 - eta) ** 2) / 16
    s = np.sqrt(f)
    t = np.sqrt(max(0.0, 1 - s))
    u = 2 * t - 2 * s + 2
    rhs = -12 * (u * u - 2 * s + 2 * t + 2)
    return float(lhs), float(rhs), bool(lhs <= rhs)


def bowles_min_fidelity(v: float, eta: float = 1.0, xtol: float = 1e-14) -> float:
    """Smallest f certifying entanglement, by bisection (the rhs increases with f)."""
    lhs, rhs1, ok1 = bowles_comparison(v, eta, 1.0)
    if not ok1:
        raise ValueError(f"v={v}, eta={eta} is not certified even at f=1")
    if bowles_comparison(v, eta, 0.0)[2]:
        return 0.0
    g = lambda f: bowles_comparison(v, eta, f)[1] - lhs  # noqa: E731
    return float(bisect(g, 0.0, 1.0, xtol=xtol))


# --- local hidden state oracle -------------------------------------------------


@dataclass(frozen=True)
class LhsModel:
    weights: np.ndarray  # p(lambda), shape (8,)
    responses: np.ndarray  # deterministic outcome index per (lambda, x), shape (8, 3)
    states: np.ndarray  # rho_lambda, shape (8, 2, 2)

    def __post_init__(self):
        w = np.asarray(self.weights)
        if np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
            raise ValueError("LHS weights must be a probability vector")

    def assemblage(self) -> np.ndarray:
        """sigma_{a|x} = sum_lambda p(lambda) delta(a, a_x(lambda)) rho_lambda, shape (3, 2, 2, 2)."""
        out = np.zeros((3, 2, 2, 2), dtype=complex)
        for lam in range(len(self.weights)):
            for x in range(3):
                out[x, self.responses[lam, x]] += self.weights[lam] * self.states[lam]
        return out


@dataclass(frozen=True)
class LhsVerdict:
    feasible: bool
    residual: float
    model: LhsModel | None


def assemblage_from_state(rho, observables=None) -> np.ndarray:
    """Bob's unnormalized conditional states Tr_A[(Pi_{a|x} (x) I) rho], shape (3, 2, 2, 2)."""
    r = _two_qubit(rho)
    obs = observables or [pauli(j) for j in (1, 2, 3)]
    out = np.zeros((len(obs), 2, 2, 2), dtype=complex)
    for x, o in enumerate(obs):
        for ia, a in enumerate(SIGNS):
            out[x, ia] = partial_trace(np.kron(o.projector(int(a)), I2) @ r, [2, 2], keep=[1])
    return out


def _bloch4(m: np.ndarray) -> np.ndarray:
    """(Tr m, Tr m sx, Tr m sy, Tr m sz) for a Hermitian 2x2 m."""
    return np.real([np.trace(m @ p) for p in PAULIS])


def _project_soc(v: np.ndarray) -> np.ndarray:
    """Project rows (q, u) onto the cone |u| <= q."""
    q, u = v[..., 0], v[..., 1:]
    nu = np.linalg.norm(u, axis=-1)
    out = v.copy()
    inside = nu <= q
    below = nu <= -q
    mid = ~(inside | below)
    out[below] = 0.0
    scale = (q + nu) / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        out[..., 0] = np.where(mid, scale, out[..., 0])
        factor = np.where(mid, scale / np.where(nu > 0, nu, 1.0), 1.0)
    out[..., 1:] = np.where(mid[..., None], u * factor[..., None], out[..., 1:])
    return out


def lhs_brute_force(
    rho,
    observables=None,
    *,
    restarts: int = 64,
    tol: float = 1e-6,
    max_iter: int = 20000,
    seed: int = 0,
) -> LhsVerdict:
    """Search an LHS model over the 8 deterministic Alice strategies.

    Hidden states are parameterized by unnormalized Bloch vectors (q, u) with
    |u| <= q; accelerated projected gradient with adaptive restart minimizes
    the squared mismatch to the assemblage from random starting points.
    Feasible iff the best max-abs residual is below ``tol``.
    """
    target = assemblage_from_state(rho, observables)
    nx = target.shape[0]
    strategies = np.array(list(np.ndindex(*(2,) * nx)))  # (8, nx) outcome indices
    nl = strategies.shape[0]
    # d[x, a, lam] = 1 if strategy lam answers a for x
    d = np.zeros((nx, 2, nl))
    for lam, s in enumerate(strategies):
        for x in range(nx):
            d[x, s[x], lam] = 1.0
    t = np.array([[_bloch4(target[x, a]) for a in range(2)] for x in range(nx)])  # (nx, 2, 4)
    dm = d.reshape(nx * 2, nl)
    tm = t.reshape(nx * 2, 4)
    lip = np.linalg.norm(dm, 2) ** 2
    rng = np.random.default_rng(seed)
    v = rng.random((restarts, nl, 4))
    v[..., 1:] -= 0.5
    v = _project_soc(v)
    y = v.copy()
    mom = np.ones(restarts)

    def resid(w):
        return np.einsum("kl,rlc->rkc", dm, w) - tm[None]

    obj = np.sum(resid(v) ** 2, axis=(1, 2))
    checkpoint = obj.min()
    for it in range(1, max_iter + 1):
        g = np.einsum("kl,rkc->rlc", dm, resid(y))
        vnew = _project_soc(y - g / lip)
        objn = np.sum(resid(vnew) ** 2, axis=(1, 2))
        momn = (1 + np.sqrt(1 + 4 * mom * mom)) / 2
        restart = objn > obj
        beta = np.where(restart, 0.0, (mom - 1) / momn)
        mom = np.where(restart, 1.0, momn)
        y = vnew + beta[:, None, None] * (vnew - v)
        v, obj = vnew, objn
        if np.sqrt(obj.min()) < tol * 0.1:
            break
        if it % 500 == 0:
            # plateau well above tolerance: the assemblage has no LHS model
            if obj.min() > 1e-6 and obj.min() > 0.999 * checkpoint:
                break
            checkpoint = obj.min()
    r = resid(v)
    maxres = np.abs(r).max(axis=(1, 2)) / 2  # Bloch components carry a factor 2
    k = int(np.argmin(maxres))
    res = float(maxres[k])
    model = None
    if res < tol:
        q = np.clip(v[k, :, 0], 0.0, None)
        total = q.sum()
        states = np.array(
            [
                (v[k, lam, 0] * I2 + sum(v[k, lam, i] * PAULIS[i] for i in (1, 2, 3))) / (2 * q[lam])
                if q[lam] > 1e-15 else I2 / 2
                for lam in range(nl)
            ]
        )
        model = LhsModel(weights=q / total, responses=strategies, states=states)
    return LhsVerdict(feasible=res < tol, residual=res, model=model)
