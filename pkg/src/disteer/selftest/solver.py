"""Primal-dual interior-point solver for block-diagonal linear matrix inequalities.

Problem (the "dual" LMI form)::

    minimize   c^T z
    subject to F0_b + sum_k z_k F_bk  >= 0   for every block b

Each ``F_bk`` is symmetric and is stored column-wise in a sparse matrix
``P_b`` of shape (n_b**2, m): ``vec(sum_k z_k F_bk) = P_b @ z`` (row-major
vec).  The Lagrange dual is ``max -<F0, X>`` s.t. ``<F_k, X> = c_k``, X >= 0.

The iteration is the infeasible-start HKM direction with Mehrotra's
predictor-corrector.  The Schur complement M_kl = sum_b Tr(F_k X F_l Z^-1)
is assembled as P^T (Z^-1 (x) X) P in column chunks, so no n^2 x n^2
matrix is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..linalg import SDP_TOL


@dataclass(frozen=True)
class LmiBlock:
    f0: np.ndarray
    p: sp.csr_matrix

    def __post_init__(self):
        n = self.f0.shape[0]
        if self.f0.shape != (n, n) or self.p.shape[0] != n * n:
            raise ValueError("block data has inconsistent shapes")

    @property
    def n(self) -> int:
        return self.f0.shape[0]

    def affine(self, z: np.ndarray) -> np.ndarray:
        g = self.f0 + (self.p @ z).reshape(self.n, self.n)
        return (g + g.T) / 2


@dataclass
class LmiResult:
    z: np.ndarray
    value: float
    dual_value: float
    status: str
    iterations: int
    primal_infeasibility: float
    dual_infeasibility: float
    min_eig: float
    history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return abs(self.value - self.dual_value)


def _max_step(x_chol: np.ndarray, dx: np.ndarray, gamma: float) -> float:
    li = sla.solve_triangular(x_chol, np.eye(x_chol.shape[0]), lower=True)
    w = np.linalg.eigvalsh(li @ dx @ li.T)
    lo = w[0]
    return 1.0 if lo >= 0 else min(1.0, -gamma / lo)


class _SchurPlan:
    """Per-block sparsity data reused by every Schur assembly."""

    def __init__(self, block: LmiBlock, budget: int):
        self.n = block.n
        self.pt = block.p.T.tocsr()
        csc = block.p.tocsc()
        m = csc.shape[1]
        per_col = np.diff(csc.indptr)
        self.chunks = []
        start, acc = 0, 0
        for k in range(m):
            acc += per_col[k]
            if acc * self.n * self.n > budget or k == m - 1:
                sub = csc[:, start : k + 1]
                rows = np.unique(sub.indices)
                self.chunks.append((start, k + 1, rows, sub[rows, :].tocsr()))
                start, acc = k + 1, 0

    def assemble(self, x: np.ndarray, zinv: np.ndarray, out: np.ndarray) -> None:
        n = self.n
        for start, stop, rows, sub in self.chunks:
            if rows.size == 0:
                continue
            ip, iq = np.divmod(rows, n)
            cols = (x[:, ip][:, None, :] * zinv[:, iq][None, :, :]).reshape(n * n, rows.size)
            q = (sub.T @ cols.T).T
            out[:, start:stop] += self.pt @ q


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _merit(pinf: float, dinf: float, rgap: float) -> float:
    return max(pinf, dinf, rgap)


def solve_lmi(
    c: np.ndarray,
    blocks: list[LmiBlock],
    *,
    tol: float = SDP_TOL,
    accept_tol: float = 1e-6,
    max_iter: int = 500,
    init_scale: float = 10.0,
    schur_budget: int = 20_000_000,
    stall_iters: int = 8,
) -> LmiResult:
    """Solve the LMI; statuses are "optimal", "inaccurate", "max_iter" or "diverged".

    "optimal" means every residual and the relative gap are below ``tol``,
    or below ``accept_tol`` when progress stalls first.  The returned point
    is the best iterate seen.
    """
    c = np.asarray(c, dtype=float)
    m = c.size
    if any(b.p.shape[1] != m for b in blocks):
        raise ValueError("every block must have one column per variable")
    plans = [_SchurPlan(b, schur_budget) for b in blocks]
    ntot = sum(b.n for b in blocks)
    z = np.zeros(m)
    xs = [init_scale * np.eye(b.n) for b in blocks]
    zs = [init_scale * np.eye(b.n) for b in blocks]
    cnorm = 1 + np.linalg.norm(c)
    fnorm = 1 + max(np.linalg.norm(b.f0) for b in blocks)
    # Gram matrix of the constraint matrices, used to restore exact dual
    # feasibility of each X step lost to cancellation when Z is near singular
    gram = sum((b.p.T @ b.p).toarray() for b in blocks)
    gram[np.diag_indices_from(gram)] += 1e-14 * max(1.0, np.abs(gram).max())
    gram_fac = sla.cho_factor(gram, lower=True)
    history = []
    best = None
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        gs = [b.affine(z) for b in blocks]
        rd = [g - s for g, s in zip(gs, zs)]
        rp = c - sum(b.p.T @ x.ravel() for b, x in zip(blocks, xs))
        mu = sum(np.vdot(x, s) for x, s in zip(xs, zs)) / ntot
        pobj = float(c @ z)
        dobj = float(-sum(np.vdot(b.f0, x) for b, x in zip(blocks, xs)))
        pinf = float(np.linalg.norm(rp) / cnorm)
        dinf = float(max(np.linalg.norm(r) for r in rd) / fnorm)
        rgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        history.append((pobj, dobj, pinf, dinf, mu))
        merit = _merit(pinf, dinf, rgap)
        if best is None or merit < best[0]:
            best = (merit, it, z.copy(), [x.copy() for x in xs], [s.copy() for s in zs])
        if merit < tol:
            status = "optimal"
            break
        if not np.isfinite(mu) or mu > 1e12:
            status = "diverged"
            break
        if it - best[1] >= stall_iters:
            status = "stalled"
            break

        try:
            zchols = [np.linalg.cholesky(s) for s in zs]
            xchols = [np.linalg.cholesky(x) for x in xs]
        except np.linalg.LinAlgError:
            status = "numerical_error"
            break
        zinvs = [_sym(sla.cho_solve((lz, True), np.eye(lz.shape[0]))) for lz in zchols]
        mat = np.zeros((m, m))
        for plan, x, zi in zip(plans, xs, zinvs):
            plan.assemble(x, zi, mat)
        mat = _sym(mat)
        mat[np.diag_indices_from(mat)] += 1e-14 * max(1.0, np.abs(mat).max())
        try:
            fac = sla.cho_factor(mat, lower=True)
            base_solve = lambda v: sla.cho_solve(fac, v)  # noqa: E731
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(mat, hermitian=True)
            base_solve = lambda v: pinv @ v  # noqa: E731

        def msolve(v):
            d = base_solve(v)
            for _ in range(2):
                d = d + base_solve(v - mat @ d)
            return d

        def direction(sigma_mu, corr):
            rhs = -rp.copy()
            for k, (b, x, zi, r) in enumerate(zip(blocks, xs, zinvs, rd)):
                t = sigma_mu * zi - x - x @ r @ zi
                if corr is not None:
                    t = t - corr[k]
                rhs += b.p.T @ _sym(t).ravel()
            dz = msolve(rhs)
            dzs, dxs = [], []
            for k, (b, x, zi, r) in enumerate(zip(blocks, xs, zinvs, rd)):
                dzk = _sym(r + (b.p @ dz).reshape(b.n, b.n))
                dxk = sigma_mu * zi - x - x @ dzk @ zi
                if corr is not None:
                    dxk = dxk - corr[k]
                dzs.append(dzk)
                dxs.append(_sym(dxk))
            miss = rp - sum(b.p.T @ d.ravel() for b, d in zip(blocks, dxs))
            w = sla.cho_solve(gram_fac, miss)
            dxs = [_sym(d + (b.p @ w).reshape(b.n, b.n)) for b, d in zip(blocks, dxs)]
            return dz, dxs, dzs

        def steps(dxs, dzs, gamma):
            ap = min(_max_step(lx, d, gamma) for lx, d in zip(xchols, dxs))
            ad = min(_max_step(lz, d, gamma) for lz, d in zip(zchols, dzs))
            return ap, ad

        _, dxa, dza = direction(0.0, None)
        ap, ad = steps(dxa, dza, 1.0)
        mu_a = sum(np.vdot(x + ap * dx, s + ad * ds) for x, dx, s, ds in zip(xs, dxa, zs, dza)) / ntot
        sigma = float(np.clip((mu_a / mu) ** 3, 0.0, 1.0))
        corr = [dx @ ds @ zi for dx, ds, zi in zip(dxa, dza, zinvs)]
        dz, dxs, dzs = direction(sigma * mu, corr)
        gamma = 0.9 if it < 5 else 0.98
        ap, ad = steps(dxs, dzs, gamma)
        xs = [_sym(x + ap * d) for x, d in zip(xs, dxs)]
        zs = [_sym(s + ad * d) for s, d in zip(zs, dzs)]
        z = z + ad * dz

    merit, _, z, xs, zs = best
    if status in ("stalled", "numerical_error", "max_iter"):
        if merit < accept_tol:
            status = "optimal"
        elif status != "max_iter":
            status = "inaccurate"
    gs = [b.affine(z) for b in blocks]
    min_eig = min(float(np.linalg.eigvalsh(g)[0]) for g in gs)
    rp = c - sum(b.p.T @ x.ravel() for b, x in zip(blocks, xs))
    return LmiResult(
        z=z,
        value=float(c @ z),
        dual_value=float(-sum(np.vdot(b.f0, x) for b, x in zip(blocks, xs))),
        status=status,
        iterations=it,
        primal_infeasibility=float(np.linalg.norm(rp) / cnorm),
        dual_infeasibility=float(max(np.linalg.norm(g - s) for g, s in zip(gs, zs)) / fnorm),
        min_eig=min_eig,
        history=history,
    )


@dataclass
class SdpSolution:
    """Relaxation optimum.

    ``value`` is the dual objective: with X PSD and its equality residual
    ``certificate_residual`` at rounding level, weak duality makes it a
    certified lower bound on the relaxation minimum.  ``primal_value`` is
    the objective at the returned moments.
    """

    value: float
    primal_value: float
    moments: np.ndarray
    gap: float
    status: str
    iterations: int
    min_eig: float
    residual: float
    certificate_residual: float

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "primal_value": self.primal_value,
            "gap": self.gap,
            "status": self.status,
            "iterations": self.iterations,
            "min_eig": self.min_eig,
            "residual": self.residual,
            "certificate_residual": self.certificate_residual,
        }


def solve_sdp(rel, *, tol: float = SDP_TOL, max_iter: int = 500) -> SdpSolution:
    """Minimize the relaxation's objective over its moment matrices."""
    c, blocks, const, y0, nmat = rel.to_lmi()
    res = solve_lmi(c, blocks, tol=tol, max_iter=max_iter)
    y = y0 + nmat @ res.z
    resid = max(
        (abs(sum(v * y[rel.moment_index[w]] for w, v in p.items()) - val) for p, val, kind in rel.constraints if kind == "eq"),
        default=0.0,
    )
    return SdpSolution(
        value=res.dual_value + const,
        primal_value=res.value + const,
        moments=y,
        gap=res.gap,
        status=res.status,
        iterations=res.iterations,
        min_eig=res.min_eig,
        residual=float(resid),
        certificate_residual=res.primal_infeasibility,
    )
