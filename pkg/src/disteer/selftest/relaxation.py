"""Moment relaxation bounding the swap fidelity from the three CHSH line values.

Letters are the dichotomic observables B1..B6 (Bob) and C1..C3 (Charlie).
Moments are real: every objective and constraint is invariant under complex
conjugation of the realization, so the real part of a feasible complex
moment matrix stays feasible with the same value.  They are also invariant
under flipping the sign of every observable, which zeroes all odd-degree
moments and splits the moment matrix into an even-word and an odd-word block.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ..linalg import as_operator, psd_min_eig
from . import swap as S
from . import words as W
from .solver import LmiBlock

N_BOB, N_CHARLIE = 6, 3
CHSH_MAX = 2 * np.sqrt(2)

# (y, z, sign) terms of the three CHSH lines, 1-based settings
CHSH_LINES = (
    ((1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 2, -1)),
    ((3, 1, 1), (4, 1, 1), (3, 3, -1), (4, 3, 1)),
    ((5, 2, 1), (6, 2, 1), (5, 3, -1), (6, 3, 1)),
)

# swap operators, 0-based letters: Bob (X, Z) = (B3, B4), Charlie (X, Z) = (C1, C3)
BOB_SWAP = (2, 3)
CHARLIE_SWAP = (0, 2)


class RelaxationInfeasibleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BasisConfig:
    """Monomial basis: NPA level two plus products of short per-party words.

    ``products`` lists (bob_len, charlie_len) pairs; for each pair every
    reduced Bob word up to ``bob_len`` letters is multiplied with every
    reduced Charlie word up to ``charlie_len`` letters.  ``bob_letters``
    restricts the Bob alphabet used in those products.
    """

    products: tuple[tuple[int, int], ...] = ()
    bob_letters: tuple[int, ...] = tuple(range(N_BOB))
    name: str = "custom"


BASIS_PRESETS = {
    "local2": BasisConfig(name="local2"),
    "product12": BasisConfig(products=((1, 2),), name="product12"),
    "product13": BasisConfig(products=((1, 3),), name="product13"),
}


def _reduced_words(letters: Sequence[int], max_len: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    for n in range(1, max_len + 1):
        out += [t for t in itertools.product(letters, repeat=n) if all(a != b for a, b in zip(t, t[1:]))]
    return out


def level_two_words() -> list[W.Word]:
    words = [W.IDENTITY]
    words += [W.Word((i,), ()) for i in range(N_BOB)]
    words += [W.Word((), (k,)) for k in range(N_CHARLIE)]
    words += [W.Word((i, k), ()) for i in range(N_BOB) for k in range(N_BOB) if i != k]
    words += [W.Word((), (i, k)) for i in range(N_CHARLIE) for k in range(N_CHARLIE) if i != k]
    words += [W.Word((i,), (k,)) for i in range(N_BOB) for k in range(N_CHARLIE)]
    return words


def _split(w: W.Word) -> tuple[W.Word, W.Word]:
    kb, kc = (len(w.bob) + 1) // 2, (len(w.charlie) + 1) // 2
    s = W.Word(w.bob[:kb][::-1], w.charlie[:kc][::-1])
    t = W.Word(w.bob[kb:], w.charlie[kc:])
    return s, t


def _close_over(words: list[W.Word], targets: Iterable[W.Word]) -> list[W.Word]:
    """Append halves of every target word not already of the form s^dag t."""
    words = list(dict.fromkeys(words))
    reachable = {(s.adjoint() * t).canonical() for s in words for t in words}
    for w in targets:
        if w.canonical() in reachable:
            continue
        for u in _split(w):
            if u not in words:
                words.append(u)
                reachable |= {(u.adjoint() * t).canonical() for t in words}
                reachable |= {(t.adjoint() * u).canonical() for t in words}
    return words


def fidelity_polynomial(j: int, y_sign: int = 1) -> dict[W.Word, float]:
    """Swap fidelity f_j as a real polynomial in canonical moments."""
    B = lambda i: W.letter("B", i)  # noqa: E731
    C = lambda i: W.letter("C", i)  # noqa: E731
    mj = None if j == 0 else C(j - 1)
    rp = S.symbolic_rho_data(B(BOB_SWAP[0]), B(BOB_SWAP[1]), C(CHARLIE_SWAP[0]), C(CHARLIE_SWAP[1]), mj)
    return S.symbolic_fidelity(rp, j, S.BOB_FRAME, y_sign)


def objective_polynomial(objective, y_sign: int = 1) -> dict[W.Word, float]:
    if objective == "average":
        acc: dict[W.Word, float] = {}
        for j in (1, 2, 3):
            for w, v in fidelity_polynomial(j, y_sign).items():
                acc[w] = acc.get(w, 0.0) + v / 3
        return acc
    if objective in (0, 1, 2, 3):
        return fidelity_polynomial(int(objective), y_sign)
    raise ValueError(f"objective must be 'average' or 0..3, got {objective!r}")


def chsh_polynomials() -> list[dict[W.Word, float]]:
    return [
        {W.Word((y - 1,), (z - 1,)): float(s) for y, z, s in line}
        for line in CHSH_LINES
    ]


@dataclass
class MomentRelaxation:
    chsh: tuple[float, float, float]
    objective_mode: object
    basis: list[W.Word]
    moments: list[W.Word]
    blocks: list[np.ndarray]  # moment-index matrix per parity block
    block_words: list[list[int]]
    objective: dict[W.Word, float]
    constraints: list[tuple[dict[W.Word, float], float, str]]
    config: BasisConfig = field(default_factory=BasisConfig)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def moment_index(self) -> dict[W.Word, int]:
        return {w: i for i, w in enumerate(self.moments)}

    def gamma(self, y: np.ndarray) -> list[np.ndarray]:
        return [np.asarray(y)[idx] for idx in self.blocks]

    def objective_vector(self) -> np.ndarray:
        mi = self.moment_index
        c = np.zeros(len(self.moments))
        for w, v in self.objective.items():
            c[mi[w]] += v
        return c

    def moment_vector(self, values: dict[W.Word, float]) -> np.ndarray:
        """Moment vector from a canonical-word assignment (missing words raise)."""
        return np.array([values[w] for w in self.moments])

    def to_lmi(self):
        """Eliminate equalities; return (c, blocks, const, y0, N) with y = y0 + N z."""
        mi = self.moment_index
        nm = len(self.moments)
        pivots: dict[int, tuple[dict[int, float], float]] = {}
        ineqs = []
        for poly, val, kind in self.constraints:
            row = {mi[w]: v for w, v in poly.items()}
            if kind == "eq":
                piv = next(k for k in row if k not in pivots and k != 0)
                a = row.pop(piv)
                pivots[piv] = ({k: -v / a for k, v in row.items()}, val / a)
            else:
                ineqs.append((row, val))
        # pivots never appear in each other's rows: CHSH lines share no words
        free = [k for k in range(1, nm) if k not in pivots]
        col = {k: i for i, k in enumerate(free)}
        y0 = np.zeros(nm)
        y0[0] = 1.0
        rows, cols, vals = [], [], []
        for k in free:
            rows.append(k)
            cols.append(col[k])
            vals.append(1.0)
        for piv, (row, const) in pivots.items():
            y0[piv] = const
            for k, v in row.items():
                rows.append(piv)
                cols.append(col[k])
                vals.append(v)
        nmat = sp.csr_matrix((vals, (rows, cols)), shape=(nm, len(free)))
        cy = self.objective_vector()
        c = nmat.T @ cy
        const = float(cy @ y0)
        blocks = []
        for idx in self.blocks:
            n = idx.shape[0]
            flat = idx.ravel()
            f0 = y0[flat].reshape(n, n)
            blocks.append(LmiBlock(f0, nmat[flat].tocsr()))
        for row, val in ineqs:
            a = np.zeros(nm)
            for k, v in row.items():
                a[k] = v
            blocks.append(LmiBlock(np.array([[a @ y0 - val]]), sp.csr_matrix((nmat.T @ a)[None, :])))
        return np.asarray(c), blocks, const, y0, nmat

    def to_json(self) -> str:
        return json.dumps(
            {
                "chsh": list(self.chsh),
                "objective": str(self.objective_mode),
                "basis_config": self.config.name,
                "basis": [str(w) for w in self.basis],
                "block_sizes": [len(b) for b in self.block_words],
                "n_moments": len(self.moments),
                "constraints": [
                    {"terms": {str(w): v for w, v in p.items()}, "value": val, "kind": kind}
                    for p, val, kind in self.constraints
                ],
                "objective_terms": {str(w): v for w, v in self.objective.items()},
            },
            indent=2,
        )


def build_relaxation(
    chsh: Sequence[float],
    objective="average",
    config: BasisConfig | str = "local2",
    chsh_mode: str = "eq",
    y_sign: int = 1,
) -> MomentRelaxation:
    chsh = tuple(float(v) for v in chsh)
    if len(chsh) != 3 or not all(np.isfinite(chsh)):
        raise ValueError(f"need three finite CHSH values, got {chsh}")
    if chsh_mode not in ("eq", "geq"):
        raise ValueError(f"chsh_mode must be 'eq' or 'geq', got {chsh_mode!r}")
    if any(abs(v) > CHSH_MAX + 1e-12 for v in chsh):
        warnings.warn(
            f"CHSH values {chsh} exceed the quantum maximum 2*sqrt2; the relaxation is infeasible",
            RelaxationInfeasibleWarning,
            stacklevel=2,
        )
    if isinstance(config, str):
        if config not in BASIS_PRESETS:
            raise ValueError(f"unknown basis preset {config!r}; known: {sorted(BASIS_PRESETS)}")
        config = BASIS_PRESETS[config]
    obj = objective_polynomial(objective, y_sign)

    words = level_two_words()
    for lb, lc in config.products:
        for b in _reduced_words(config.bob_letters, lb):
            for cw in _reduced_words(range(N_CHARLIE), lc):
                words.append(W.Word(b, cw))
    words = _close_over(words, obj)

    block_words = [
        [i for i, w in enumerate(words) if w.degree % 2 == 0],
        [i for i, w in enumerate(words) if w.degree % 2 == 1],
    ]
    moments: dict[W.Word, int] = {W.IDENTITY: 0}
    blocks = []
    for bw in block_words:
        n = len(bw)
        idx = np.empty((n, n), dtype=np.int64)
        for a in range(n):
            sa = words[bw[a]].adjoint()
            for b in range(a, n):
                cw = (sa * words[bw[b]]).canonical()
                k = moments.setdefault(cw, len(moments))
                idx[a, b] = idx[b, a] = k
        blocks.append(idx)
    moment_list = list(moments)
    missing = [w for w in obj if w not in moments]
    if missing:
        raise RuntimeError(f"objective words not covered by the basis: {missing}")
    kind = "eq" if chsh_mode == "eq" else "geq"
    constraints = [(poly, val, kind) for poly, val in zip(chsh_polynomials(), chsh)]
    return MomentRelaxation(
        chsh=chsh,
        objective_mode=objective,
        basis=words,
        moments=moment_list,
        blocks=blocks,
        block_words=block_words,
        objective=obj,
        constraints=constraints,
        config=config,
    )


def word_operator(w: W.Word, bob_ops: Sequence, charlie_ops: Sequence) -> np.ndarray:
    """Matrix of a word on the Bob (x) Charlie space."""
    mats_b = [as_operator(getattr(o, "matrix", o)) for o in bob_ops]
    mats_c = [as_operator(getattr(o, "matrix", o)) for o in charlie_ops]
    ob = np.eye(mats_b[0].shape[0], dtype=complex)
    for i in w.bob:
        ob = ob @ mats_b[i]
    oc = np.eye(mats_c[0].shape[0], dtype=complex)
    for i in w.charlie:
        oc = oc @ mats_c[i]
    return np.kron(ob, oc)


def moments_from_realization(rel: MomentRelaxation, rho, bob_ops, charlie_ops) -> np.ndarray:
    """Real parts of Tr(rho w) for every moment of the relaxation."""
    r = as_operator(rho)
    return np.array([np.real(np.trace(r @ word_operator(w, bob_ops, charlie_ops))) for w in rel.moments])


def gamma_min_eig(rel: MomentRelaxation, y: np.ndarray) -> float:
    return min(psd_min_eig(g) for g in rel.gamma(y))
