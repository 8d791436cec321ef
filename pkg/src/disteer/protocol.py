"""Exact and finite-statistics behaviors of the four-photon protocol.

Alice and Bob share rho_AB (a Werner state), Bob and Charlie share rho_BC
(|Phi+>, optionally depolarized).  Alice and Charlie measure Paulis, Bob
applies the partial BSM to his two photons.  The self-testing block has Bob
measure his six CHSH observables against Charlie's three Paulis on rho_BC.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .quantum import bell_phi_plus, depolarized_phi_plus, ideal_selftest_observables, psi_minus, werner
from .linalg import projector
from .witness import SIGNS, Behavior, WitnessReport, fidelity_penalty, steering_table

SQRT3 = np.sqrt(3.0)
STEER_SHAPE = (3, 3, 2, 2, 2)
CHSH_SHAPE = (6, 3, 2, 2)
NOISE_MODELS = ("werner", "alice_flip")


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol parameters; defaults give the ideal protocol with a pure singlet.

    ``noise_model`` "werner" prepares the Werner state directly, "alice_flip"
    prepares the singlet and flips Alice's outcome with probability (1-v)/2.
    ``yes_efficiency`` thins Bob's "yes" events (fair sampling).
    """

    v: float = 1.0
    bc_visibility: float = 1.0
    noise_model: str = "werner"
    yes_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("v", "bc_visibility"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if not 0.0 < self.yes_efficiency <= 1.0:
            raise ValueError(f"yes_efficiency must lie in (0, 1], got {self.yes_efficiency}")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"noise_model must be one of {NOISE_MODELS}, got {self.noise_model!r}")

    @property
    def flip_probability(self) -> float:
        return (1 - self.v) / 2 if self.noise_model == "alice_flip" else 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        known = {k: d[k] for k in ("v", "bc_visibility", "noise_model", "yes_efficiency") if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)


def chsh_table(rho_bc, bob_obs=None, charlie_obs=None) -> np.ndarray:
    """P(b, c | y, z) for Bob's six and Charlie's three observables."""
    if bob_obs is None or charlie_obs is None:
        bob_obs, charlie_obs = ideal_selftest_observables()
    out = np.zeros(CHSH_SHAPE)
    for y, z in np.ndindex(6, 3):
        for ib, ic in np.ndindex(2, 2):
            op = np.kron(bob_obs[y].projector(int(SIGNS[ib])), charlie_obs[z].projector(int(SIGNS[ic])))
            out[y, z, ib, ic] = np.real(np.trace(op @ rho_bc))
    return np.clip(out, 0.0, 1.0)


def _apply_yes_efficiency(steer: np.ndarray, eta: float) -> np.ndarray:
    if eta == 1.0:
        return steer
    t = steer.copy()
    t[:, :, :, 0, :] *= eta
    return t / t.sum(axis=(2, 3, 4), keepdims=True)


def exact_behavior(cfg: ProtocolConfig = ProtocolConfig()) -> Behavior:
    rho_bc = depolarized_phi_plus(cfg.bc_visibility)
    if cfg.noise_model == "werner":
        steer = steering_table(werner(cfg.v), rho_bc)
    else:
        steer = steering_table(projector(psi_minus()), rho_bc)
    beh = Behavior(steer=_apply_yes_efficiency(steer, cfg.yes_efficiency), chsh=chsh_table(rho_bc))
    if cfg.flip_probability > 0:
        beh = apply_alice_flip(beh, cfg.flip_probability)
    return beh


def apply_alice_flip(beh: Behavior, p_flip: float) -> Behavior:
    """Flip Alice's outcome label with probability p_flip, independently per event."""
    if not 0.0 <= p_flip <= 0.5:
        raise ValueError(f"p_flip must lie in [0, 1/2], got {p_flip}")
    t = beh._need("steer")
    flipped = (1 - p_flip) * t + p_flip * t[:, :, ::-1]
    return Behavior(steer=flipped, chsh=beh.chsh)


def blue_curve_chsh(v: float) -> float:
    """Optimal CHSH value of the Alice-Bob Werner state (the two-setting baseline)."""
    from .witness import optimal_chsh

    return optimal_chsh(werner(v))


# --- finite statistics ----------------------------------------------------------


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@dataclass
class CountsRecord:
    steer: np.ndarray | None
    chsh: np.ndarray | None
    seed: int
    config: dict = field(default_factory=dict)
    n_per_setting: int | None = None
    n_chsh: int | None = None

    def __post_init__(self):
        for name, shape in (("steer", STEER_SHAPE), ("chsh", CHSH_SHAPE)):
            t = getattr(self, name)
            if t is None:
                continue
            t = np.asarray(t)
            if t.shape != shape:
                raise ValueError(f"{name} counts must have shape {shape}, got {t.shape}")
            if not np.issubdtype(t.dtype, np.integer):
                if np.any(t != np.round(t)):
                    raise ValueError(f"{name} counts must be integers")
                t = t.astype(np.int64)
            if np.any(t < 0):
                bad = tuple(int(i) for i in np.argwhere(t < 0)[0])
                raise ValueError(f"negative {name} count at cell {bad}")
            setattr(self, name, t)
        for name, budget, axes in (("steer", self.n_per_setting, (2, 3, 4)), ("chsh", self.n_chsh, (2, 3))):
            t = getattr(self, name)
            if t is None or budget is None:
                continue
            tot = t.sum(axis=axes)
            if np.any(tot != budget):
                bad = tuple(int(i) + 1 for i in np.argwhere(tot != budget)[0])
                raise ValueError(f"{name} setting {bad} holds {int(tot[tuple(i - 1 for i in bad)])} events, budget is {budget}")

    def to_dict(self) -> dict:
        out = {"config": self.config, "seed": int(self.seed), "counts": [], "chsh_counts": []}
        if self.n_per_setting is not None or self.n_chsh is not None:
            out["budget"] = {"steer": self.n_per_setting, "chsh": self.n_chsh}
        if self.steer is not None:
            out["counts"] = [
                {"x": x + 1, "z": z + 1, "a": int(SIGNS[a]), "c": int(SIGNS[c]), "bob": ("yes", "no")[k], "n": int(self.steer[x, z, a, k, c])}
                for x, z, a, k, c in np.ndindex(*STEER_SHAPE)
            ]
        if self.chsh is not None:
            out["chsh_counts"] = [
                {"y": y + 1, "z": z + 1, "b": int(SIGNS[b]), "c": int(SIGNS[c]), "n": int(self.chsh[y, z, b, c])}
                for y, z, b, c in np.ndindex(*CHSH_SHAPE)
            ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "CountsRecord":
        for key in ("seed", "counts"):
            if key not in d:
                raise ValueError(f"counts file lacks the {key!r} field")
        idx = {1: 0, -1: 1}
        steer = None
        if d["counts"]:
            steer = np.full(STEER_SHAPE, -1, dtype=np.int64)
            for i, cell in enumerate(d["counts"]):
                try:
                    pos = (cell["x"] - 1, cell["z"] - 1, idx[cell["a"]], {"yes": 0, "no": 1}[cell["bob"]], idx[cell["c"]])
                    if min(pos) < 0 or pos[0] > 2 or pos[1] > 2:
                        raise KeyError
                    n = cell["n"]
                except (KeyError, TypeError):
                    raise ValueError(f"malformed counts cell #{i}: {cell}") from None
                if not isinstance(n, int) or n < 0:
                    raise ValueError(f"count at cell {cell} must be a nonnegative integer")
                steer[pos] = n
            if np.any(steer < 0):
                miss = tuple(int(v) for v in np.argwhere(steer < 0)[0])
                raise ValueError(f"counts file misses cell (x,z,a,bob,c) index {miss}")
        chsh = None
        if d.get("chsh_counts"):
            chsh = np.full(CHSH_SHAPE, -1, dtype=np.int64)
            for i, cell in enumerate(d["chsh_counts"]):
                try:
                    pos = (cell["y"] - 1, cell["z"] - 1, idx[cell["b"]], idx[cell["c"]])
                    if min(pos) < 0 or pos[0] > 5 or pos[1] > 2:
                        raise KeyError
                    n = cell["n"]
                except (KeyError, TypeError):
                    raise ValueError(f"malformed chsh_counts cell #{i}: {cell}") from None
                if not isinstance(n, int) or n < 0:
                    raise ValueError(f"count at chsh cell {cell} must be a nonnegative integer")
                chsh[pos] = n
            if np.any(chsh < 0):
                miss = tuple(int(v) for v in np.argwhere(chsh < 0)[0])
                raise ValueError(f"counts file misses chsh cell (y,z,b,c) index {miss}")
        budget = d.get("budget") or {}
        return cls(
            steer=steer,
            chsh=chsh,
            seed=int(d["seed"]),
            config=d.get("config", {}),
            n_per_setting=budget.get("steer"),
            n_chsh=budget.get("chsh"),
        )

    @classmethod
    def from_json(cls, text: str) -> "CountsRecord":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"counts file is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ValueError("counts file must hold a JSON object")
        return cls.from_dict(d)


def sample_counts(beh: Behavior, n_per_setting: int, seed: int, n_chsh: int | None = None, config: dict | None = None) -> CountsRecord:
    """Multinomial draw per setting; streams are keyed by (seed, setting index).

    ``n_per_setting`` events go to each (x, z) pair and ``n_chsh`` (default
    the same) to each (y, z) pair of the self-testing block.
    """
    if n_per_setting < 1:
        raise ValueError(f"n_per_setting must be >= 1, got {n_per_setting}")
    n_chsh = n_per_setting if n_chsh is None else n_chsh
    if n_chsh < 1:
        raise ValueError(f"n_chsh must be >= 1, got {n_chsh}")
    steer = None
    if beh.steer is not None:
        steer = np.zeros(STEER_SHAPE, dtype=np.int64)
        for k, (x, z) in enumerate(np.ndindex(3, 3)):
            p = beh.steer[x, z].ravel()
            steer[x, z] = _stream(seed, k).multinomial(n_per_setting, p / p.sum()).reshape(2, 2, 2)
    chsh = None
    if beh.chsh is not None:
        chsh = np.zeros(CHSH_SHAPE, dtype=np.int64)
        for k, (y, z) in enumerate(np.ndindex(6, 3)):
            p = beh.chsh[y, z].ravel()
            chsh[y, z] = _stream(seed, 9 + k).multinomial(n_chsh, p / p.sum()).reshape(2, 2)
    return CountsRecord(
        steer=steer,
        chsh=chsh,
        seed=seed,
        config=dict(config or {}),
        n_per_setting=n_per_setting if steer is not None else None,
        n_chsh=n_chsh if chsh is not None else None,
    )


def _normalize(counts: np.ndarray, axes: tuple[int, ...], what: str) -> tuple[np.ndarray, np.ndarray]:
    tot = counts.sum(axis=axes, keepdims=True)
    if np.any(tot == 0):
        bad = tuple(int(v) for v in np.argwhere(tot.squeeze(axis=axes) == 0)[0])
        raise ValueError(f"{what} setting {tuple(i + 1 for i in bad)} has no events")
    return counts / tot, tot


def estimate_behavior(counts: CountsRecord, yes_efficiency: float = 1.0) -> Behavior:
    """Relative frequencies with cellwise standard errors sqrt(p(1-p)/n).

    With ``yes_efficiency`` < 1 the "yes" frequencies are rescaled by 1/eta
    and renormalized, undoing the fair-sampling thinning.
    """
    steer = steer_err = chsh = chsh_err = None
    if counts.steer is not None:
        c = counts.steer.astype(float)
        if yes_efficiency != 1.0:
            if not 0.0 < yes_efficiency <= 1.0:
                raise ValueError(f"yes_efficiency must lie in (0, 1], got {yes_efficiency}")
            c = c.copy()
            c[:, :, :, 0, :] /= yes_efficiency
        steer, tot = _normalize(c, (2, 3, 4), "steering")
        steer_err = np.sqrt(steer * (1 - steer) / tot)
    if counts.chsh is not None:
        chsh, tot = _normalize(counts.chsh.astype(float), (2, 3), "CHSH")
        chsh_err = np.sqrt(chsh * (1 - chsh) / tot)
    return Behavior(steer=steer, chsh=chsh, steer_stderr=steer_err, chsh_stderr=chsh_err)


def _payoff_batch(steer: np.ndarray, pen: float) -> np.ndarray:
    """payoff_eq7 over a leading batch axis of steering tables."""
    value = np.zeros(steer.shape[0])
    for j in range(3):
        cell = steer[:, j, j]  # (R, a, bob, c)
        corr = np.einsum("a,rac,c->r", SIGNS, cell[:, :, 0, :], SIGNS)
        value += 4 * np.abs(corr) - cell.sum(axis=(1, 2, 3)) / SQRT3
    return value - pen


def _poisson(counts: np.ndarray, resamples: int, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 1_000_003])).poisson(
        counts.astype(float), size=(resamples,) + counts.shape
    ).astype(float)


def bootstrap_witness(counts: CountsRecord, f, resamples: int = 1000, seed: int = 0, yes_efficiency: float = 1.0) -> WitnessReport:
    """Poisson bootstrap of payoff_eq7: mean and standard deviation over resamples."""
    if resamples < 100:
        raise ValueError(f"need at least 100 resamples, got {resamples}")
    if counts.steer is None:
        raise ValueError("counts record has no steering counts")
    pen = fidelity_penalty(f)
    draws = _poisson(counts.steer, resamples, seed)
    if yes_efficiency != 1.0:
        draws[..., 0, :] /= yes_efficiency
    tot = draws.sum(axis=(3, 4, 5), keepdims=True)
    if np.any(tot == 0):
        raise ValueError("a resample produced an empty setting; the counts are too sparse")
    vals = _payoff_batch(draws / tot, pen)
    return WitnessReport("payoff", float(vals.mean()), 0.0, stderr=float(vals.std(ddof=1)))


def bootstrap_chsh(counts: CountsRecord, resamples: int = 1000, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Bootstrap mean and standard deviation of the three CHSH lines."""
    from .witness import CHSH_LINES

    if resamples < 100:
        raise ValueError(f"need at least 100 resamples, got {resamples}")
    if counts.chsh is None:
        raise ValueError("counts record has no CHSH counts")
    draws = _poisson(counts.chsh, resamples, seed)
    tot = draws.sum(axis=(3, 4), keepdims=True)
    if np.any(tot == 0):
        raise ValueError("a resample produced an empty setting; the counts are too sparse")
    e = np.einsum("b,ryzbc,c->ryz", SIGNS, draws / tot, SIGNS)
    lines = np.stack([sum(s * e[:, y - 1, z - 1] for y, z, s in line) for line in CHSH_LINES], axis=1)
    return lines.mean(axis=0), lines.std(axis=0, ddof=1)


def ideal_phi_plus_fidelity(w: float) -> float:
    """Overlap of the depolarized |Phi+> with |Phi+>, (1 + 3w)/4."""
    return float(np.real(bell_phi_plus().conj() @ depolarized_phi_plus(w) @ bell_phi_plus()))
