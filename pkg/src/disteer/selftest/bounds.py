"""Device-independent fidelity bounds from the three CHSH line values."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..witness import noisy_threshold
from .relaxation import BasisConfig, build_relaxation, objective_polynomial
from .solver import SdpSolution, solve_sdp
from .swap import fidelity_to_trace_distance

DEFAULT_BASIS = "product12"
# dual equality residual below which the dual objective is a valid bound
CERT_TOL = 1e-9
# a stalled solve is kept only with nearly PSD moments and a small gap
MOMENT_TOL = 1e-7
GAP_TOL = 1e-4


class SolverError(RuntimeError):
    pass


def _same(p: dict, q: dict, tol: float = 1e-14) -> bool:
    keys = set(p) | set(q)
    return all(abs(p.get(k, 0.0) - q.get(k, 0.0)) <= tol for k in keys)


def solve_bound(
    chsh: Sequence[float],
    which="average",
    basis: BasisConfig | str = DEFAULT_BASIS,
    chsh_mode: str = "eq",
) -> SdpSolution:
    """Minimum over both sigma_y signs; identical objectives are solved once.

    A stalled solve ("inaccurate") is still usable: the reported value is the
    dual objective, which bounds the minimum from below whenever the dual
    point is feasible.
    """
    signs = [1]
    if which in ("average", 2) and not _same(objective_polynomial(which, 1), objective_polynomial(which, -1)):
        signs.append(-1)
    sols = []
    for s in signs:
        sol = solve_sdp(build_relaxation(chsh, which, basis, chsh_mode, y_sign=s))
        usable = sol.ok or (sol.status == "inaccurate" and sol.min_eig > -MOMENT_TOL and sol.gap < GAP_TOL)
        if not usable or sol.certificate_residual > CERT_TOL:
            raise SolverError(f"relaxation solve failed for chsh={tuple(chsh)}, objective={which}: {sol.status}")
        sols.append(sol)
    return min(sols, key=lambda s: s.value)


def fidelity_lower_bound(
    chsh: Sequence[float],
    which="average",
    basis: BasisConfig | str = DEFAULT_BASIS,
    chsh_mode: str = "eq",
) -> float:
    """Certified lower bound on the average or a single swap fidelity, clipped to [0, 1]."""
    return float(np.clip(solve_bound(chsh, which, basis, chsh_mode).value, 0.0, 1.0))


@dataclass(frozen=True)
class SelftestBounds:
    chsh: tuple[float, float, float]
    average: float
    per_j: tuple[float, float, float]
    trace_distances: tuple[float, float, float]
    threshold: float
    basis: str
    statuses: tuple[str, ...]

    def to_dict(self) -> dict:
        return asdict(self)


def selftest_bounds(chsh: Sequence[float], basis: BasisConfig | str = DEFAULT_BASIS) -> SelftestBounds:
    """Average bound plus an individually minimized bound for each Pauli.

    Each per-Pauli value is its own minimum, hence a valid lower bound on
    that fidelity; the noisy-witness threshold uses these.
    """
    chsh = tuple(float(v) for v in chsh)
    avg = solve_bound(chsh, "average", basis)
    per = [solve_bound(chsh, j, basis) for j in (1, 2, 3)]
    f = tuple(float(np.clip(s.value, 0.0, 1.0)) for s in per)
    name = basis if isinstance(basis, str) else basis.name
    return SelftestBounds(
        chsh=chsh,
        average=float(np.clip(avg.value, 0.0, 1.0)),
        per_j=f,
        trace_distances=tuple(fidelity_to_trace_distance(v) for v in f),
        threshold=noisy_threshold(f),
        basis=name,
        statuses=tuple(s.status for s in [avg, *per]),
    )
