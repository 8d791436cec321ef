"""Search two-qubit realizations that meet given CHSH line values with low swap fidelity.

Any sound device-independent lower bound on f_j must sit at or below the
fidelity of every such realization, so the output caps what a relaxation can
certify.  Writes a JSON fixture consumed by the test suite.

    python scripts/find_counterexample.py --chsh 2.8241,2.8211,2.8189 --out tests/data/realizations.json
"""

from __future__ import annotations

import argparse
import json

import numpy as np
from scipy.optimize import minimize

from disteer.linalg import projector
from disteer.quantum import SX, SY, SZ, bell_phi_plus, ideal_selftest_observables
from disteer.selftest import swap as S
from disteer.selftest.relaxation import BOB_SWAP, CHARLIE_SWAP, CHSH_LINES


def bloch_obs(theta: float, phi: float) -> np.ndarray:
    return np.sin(theta) * (np.cos(phi) * SX + np.sin(phi) * SY) + np.cos(theta) * SZ


def angles(m: np.ndarray) -> list[float]:
    v = np.real([np.trace(m @ SX), np.trace(m @ SY), np.trace(m @ SZ)]) / 2
    return [float(np.arccos(np.clip(v[2], -1, 1))), float(np.arctan2(v[1], v[0]))]


def unpack(p: np.ndarray):
    lo = np.zeros((4, 4), dtype=complex)
    lo[np.tril_indices(4)] = p[:10]
    lo[np.tril_indices(4, -1)] += 1j * p[10:16]
    rho = lo @ lo.conj().T
    rho /= np.trace(rho)
    q = p[16:]
    bob = [bloch_obs(q[2 * i], q[2 * i + 1]) for i in range(6)]
    charlie = [bloch_obs(q[12 + 2 * i], q[13 + 2 * i]) for i in range(3)]
    return rho, bob, charlie


def lines(rho, bob, charlie) -> np.ndarray:
    return np.array(
        [sum(s * np.real(np.trace(rho @ np.kron(bob[y - 1], charlie[z - 1]))) for y, z, s in ln) for ln in CHSH_LINES]
    )


def fidelities(rho, bob, charlie) -> np.ndarray:
    out = []
    for j in range(4):
        mj = None if j == 0 else charlie[j - 1]
        r = S.swap_rho_data(rho, bob[BOB_SWAP[0]], bob[BOB_SWAP[1]], charlie[CHARLIE_SWAP[0]], charlie[CHARLIE_SWAP[1]], mj, S.BOB_FRAME)
        out.append(S.swap_fidelity(r, j))
    return np.array(out)


def objective(p, which):
    f = fidelities(*unpack(p))
    return float(f[1:].mean()) if which == "average" else float(f[which])


def search(chsh, which, starts: int, seed: int):
    bob, charlie = ideal_selftest_observables()
    l0 = np.linalg.cholesky(projector(bell_phi_plus()) + 1e-3 * np.eye(4))
    p0 = np.concatenate(
        [np.real(l0[np.tril_indices(4)]), np.imag(l0[np.tril_indices(4, -1)]), sum((angles(o.matrix) for o in bob + charlie), [])]
    )
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        p = p0 + rng.normal(scale=0.02, size=p0.size)
        cons = {"type": "eq", "fun": lambda p: lines(*unpack(p)) - chsh}
        r = minimize(objective, p, args=(which,), constraints=[cons], method="SLSQP", options={"maxiter": 500, "ftol": 1e-13})
        if r.success and np.max(np.abs(lines(*unpack(r.x)) - chsh)) < 1e-9 and (best is None or r.fun < best.fun):
            best = r
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chsh", default="2.8241,2.8211,2.8189")
    ap.add_argument("--targets", default="average,1,2,3")
    ap.add_argument("--starts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="tests/data/realizations.json")
    args = ap.parse_args()
    chsh = np.array([float(v) for v in args.chsh.split(",")])
    records = []
    for t in args.targets.split(","):
        which = t if t == "average" else int(t)
        best = search(chsh, which, args.starts, args.seed)
        if best is None:
            print(f"{t}: no feasible realization found")
            continue
        rho, bob, charlie = unpack(best.x)
        f = fidelities(rho, bob, charlie)
        print(f"{t}: objective {best.fun:.6f}  fidelities {np.round(f, 6)}  lines {np.round(lines(rho, bob, charlie), 10)}")
        records.append(
            {
                "target": t,
                "rho_real": np.real(rho).tolist(),
                "rho_imag": np.imag(rho).tolist(),
                "bob_bloch": [np.real([np.trace(m @ P) / 2 for P in (SX, SY, SZ)]).tolist() for m in bob],
                "charlie_bloch": [np.real([np.trace(m @ P) / 2 for P in (SX, SY, SZ)]).tolist() for m in charlie],
                "fidelities": f.tolist(),
                "chsh": lines(rho, bob, charlie).tolist(),
            }
        )
    with open(args.out, "w") as fh:
        json.dump({"chsh": chsh.tolist(), "realizations": records}, fh, indent=1)


if __name__ == "__main__":
    main()
