"""
Primal-dual interior-point solver for linear SDPs over complex Hermitian cones.

Problems are stated as::

    minimize    sum_b <C_b, X_b>
    subject to  sum_b <A_ib, X_b>  (= | <= | >=)  rhs_i,   i = 1..m
                X_b PSD (Hermitian) or X_b >= 0 (non-negative vector)

Inequalities are converted to equalities with non-negative slack variables at
build time. The method is an infeasible-start path-following scheme with
Nesterov-Todd scaling and a Mehrotra predictor-corrector, run on a batch of
problems that share one structure (block sizes, constraint senses); each
batch member converges independently.

Coefficients whose off-diagonal part is zero are stored as vectors, which
keeps the Schur complement cheap for unit-diagonal and trace constraints.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from .numerics import InvalidInput, herm

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DUAL_INFEASIBLE = "dual-infeasible"
NUMERICAL_FAILURE = "numerical-failure"

SENSES = ("eq", "le", "ge")


@dataclass(frozen=True)
class Psd:
    dim: int


@dataclass(frozen=True)
class Nonneg:
    count: int


@dataclass
class Constraint:
    """One linear constraint; ``coeffs`` maps block index to a coefficient."""

    coeffs: dict
    sense: str
    rhs: float
    name: str = ""


@dataclass
class ConicProblem:
    blocks: list
    objective: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        for b in self.blocks:
            if isinstance(b, Psd) and b.dim < 1 or isinstance(b, Nonneg) and b.count < 1:
                raise InvalidInput(f"empty block {b}")
        for con in self.constraints:
            if con.sense not in SENSES:
                raise InvalidInput(f"unknown constraint sense {con.sense!r}")
            for k, a in con.coeffs.items():
                _check_coeff(self.blocks[k], a, con.name)
        for k, c in self.objective.items():
            _check_coeff(self.blocks[k], c, "objective")

    @property
    def n_constraints(self):
        return len(self.constraints)

    def structure(self):
        return (tuple(self.blocks), tuple(c.sense for c in self.constraints))


def _check_coeff(block, a, where):
    a = np.asarray(a)
    if isinstance(block, Psd):
        if a.shape != (block.dim, block.dim):
            raise InvalidInput(f"{where}: coefficient shape {a.shape} != {(block.dim,) * 2}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - np.conj(a.T))) > 1e-10 * scale:
            raise InvalidInput(f"{where}: PSD-block coefficient is not Hermitian")
    elif a.shape != (block.count,):
        raise InvalidInput(f"{where}: coefficient shape {a.shape} != {(block.count,)}")


@dataclass
class ConicSolution:
    status: str
    primal: list
    dual: np.ndarray
    dual_slack: list
    objective_value: float
    dual_objective: float
    duality_gap: float
    max_kkt_residual: float
    iterations: int
    slacks: np.ndarray = None
    certificate: np.ndarray = None

    @property
    def optimal(self):
        return self.status == OPTIMAL


STALL_ITERS = 6


@dataclass
class SolverOptions:
    max_iter: int = 200
    tol: float = 1e-10
    accept_tol: float = 1e-7
    step: float = 0.98
    infeas_tol: float = 1e-8


# --- standard form ---------------------------------------------------------


@dataclass
class _Std:
    """Batched equality-form data, rows normalised."""

    dims: list                # PSD block dimensions
    diag: list                # per PSD block: (B, m, n) real diagonal coefficients
    dense_idx: list           # per PSD block: constraint indices with dense coefficients
    dense: list               # per PSD block: (B, len(dense_idx), n, n)
    C: list                   # per PSD block: (B, n, n)
    A_lin: np.ndarray         # (B, m, n_lin)
    c_lin: np.ndarray         # (B, n_lin)
    b: np.ndarray             # (B, m)

    def take(self, idx):
        return _Std(
            self.dims,
            [d[idx] for d in self.diag],
            self.dense_idx,
            [d[idx] for d in self.dense],
            [c[idx] for c in self.C],
            self.A_lin[idx],
            self.c_lin[idx],
            self.b[idx],
        )

    @property
    def nu(self):
        return sum(self.dims) + self.A_lin.shape[2]

    def A(self, X, x):
        out = np.einsum("bmn,bn->bm", self.A_lin, x)
        for k in range(len(self.dims)):
            dX = np.real(np.diagonal(X[k], axis1=1, axis2=2))
            out += np.einsum("bmn,bn->bm", self.diag[k], dX)
            if self.dense_idx[k]:
                out[:, self.dense_idx[k]] += np.real(
                    np.einsum("bjpq,bpq->bj", np.conj(self.dense[k]), X[k])
                )
        return out

    def AT(self, y):
        mats = []
        for k, n in enumerate(self.dims):
            d = np.einsum("bmn,bm->bn", self.diag[k], y)
            M = np.zeros((y.shape[0], n, n), dtype=complex)
            idx = np.arange(n)
            M[:, idx, idx] = d
            if self.dense_idx[k]:
                M += np.einsum("bjpq,bj->bpq", self.dense[k], y[:, self.dense_idx[k]])
            mats.append(M)
        return mats, np.einsum("bmn,bm->bn", self.A_lin, y)

    def schur(self, Ws, d_lin):
        B, m = self.b.shape
        AL = self.A_lin
        M = (AL * d_lin[:, None, :]) @ np.swapaxes(AL, 1, 2)
        for k, n in enumerate(self.dims):
            W = Ws[k]
            D = self.diag[k]
            M += D @ (np.abs(W) ** 2) @ np.swapaxes(D, 1, 2)
            di = self.dense_idx[k]
            if di:
                nd = len(di)
                WAW = W[:, None] @ self.dense[k] @ W[:, None]
                flat_a = np.conj(self.dense[k]).reshape(B, nd, n * n)
                flat_w = WAW.reshape(B, nd, n * n)
                dd = np.real(flat_a @ np.swapaxes(flat_w, 1, 2))
                M[:, np.ix_(di, di)[0], np.ix_(di, di)[1]] += dd
                cross = D @ np.swapaxes(np.real(np.diagonal(WAW, axis1=2, axis2=3)), 1, 2)
                M[:, :, di] += cross
                M[:, di, :] += np.swapaxes(cross, 1, 2)
        return 0.5 * (M + np.swapaxes(M, 1, 2))


@dataclass
class StackedProblem:
    """A batch of problems with one structure, stored as stacked arrays.

    ``objective[k]`` and ``coeffs[i][k]`` carry a leading batch axis;
    ``rhs`` has shape ``(B, m)``. Missing keys mean zero coefficients.
    """

    blocks: list
    senses: tuple
    objective: dict
    coeffs: list
    rhs: np.ndarray

    def __post_init__(self):
        self.rhs = np.atleast_2d(np.asarray(self.rhs, dtype=float))
        if len(self.senses) != len(self.coeffs) or self.rhs.shape[1] != len(self.senses):
            raise InvalidInput("senses, coefficients and rhs disagree on the constraint count")
        for sense in self.senses:
            if sense not in SENSES:
                raise InvalidInput(f"unknown constraint sense {sense!r}")

    @property
    def batch(self):
        return self.rhs.shape[0]

    @property
    def n_constraints(self):
        return len(self.senses)

    def shape_of(self, k):
        b = self.blocks[k]
        return (b.dim, b.dim) if isinstance(b, Psd) else (b.count,)


def stack_problems(problems):
    """Stack :class:`ConicProblem` objects of identical structure."""
    p0 = problems[0]
    key = p0.structure()
    for p in problems[1:]:
        if p.structure() != key:
            raise InvalidInput("batched problems must share block and constraint structure")
    B = len(problems)

    def gather(getter, k):
        shape = (p0.blocks[k].dim,) * 2 if isinstance(p0.blocks[k], Psd) else (p0.blocks[k].count,)
        dtype = complex if isinstance(p0.blocks[k], Psd) else float
        out = np.zeros((B,) + shape, dtype=dtype)
        for bi, p in enumerate(problems):
            a = getter(p)
            if a is not None:
                out[bi] = a
        return out

    nb = len(p0.blocks)
    objective = {}
    for k in range(nb):
        if any(k in p.objective for p in problems):
            objective[k] = gather(lambda p: p.objective.get(k), k)
    coeffs = []
    for i in range(p0.n_constraints):
        row = {}
        for k in range(nb):
            if any(k in p.constraints[i].coeffs for p in problems):
                row[k] = gather(lambda p: p.constraints[i].coeffs.get(k), k)
        coeffs.append(row)
    rhs = np.array([[c.rhs for c in p.constraints] for p in problems], dtype=float).reshape(B, -1)
    return StackedProblem(list(p0.blocks), tuple(c.sense for c in p0.constraints), objective, coeffs, rhs)


def _build(problems):
    return _build_stacked(stack_problems(problems))


def _build_stacked(sp):
    """Normalised equality form of a :class:`StackedProblem`."""
    blocks = sp.blocks
    m = sp.n_constraints
    B = sp.batch
    psd_ids = [k for k, b in enumerate(blocks) if isinstance(b, Psd)]
    lin_ids = [k for k, b in enumerate(blocks) if isinstance(b, Nonneg)]
    lin_off = {}
    off = 0
    for k in lin_ids:
        lin_off[k] = off
        off += blocks[k].count
    n_user_lin = off
    slack_rows = [i for i, sense in enumerate(sp.senses) if sense != "eq"]
    n_lin = n_user_lin + len(slack_rows)

    dims = [blocks[k].dim for k in psd_ids]
    herm_c = {}
    dense_idx = []
    for k, n in zip(psd_ids, dims):
        rows = []
        off_mask = ~np.eye(n, dtype=bool)
        for i, row in enumerate(sp.coeffs):
            a = row.get(k)
            if a is None:
                continue
            a = np.asarray(a, dtype=complex)
            a = 0.5 * (a + herm(a))
            herm_c[i, k] = a
            if np.any(a[:, off_mask]):
                rows.append(i)
        dense_idx.append(rows)

    diag = [np.zeros((B, m, n)) for n in dims]
    dense = [np.zeros((B, len(di), n, n), dtype=complex) for di, n in zip(dense_idx, dims)]
    C = [np.zeros((B, n, n), dtype=complex) for n in dims]
    A_lin = np.zeros((B, m, n_lin))
    c_lin = np.zeros((B, n_lin))
    for j, k in enumerate(psd_ids):
        if k in sp.objective:
            c = np.asarray(sp.objective[k], dtype=complex)
            C[j] = 0.5 * (c + herm(c))
        pos = {i: r for r, i in enumerate(dense_idx[j])}
        for i in range(m):
            a = herm_c.get((i, k))
            if a is None:
                continue
            if i in pos:
                dense[j][:, pos[i]] = a
            else:
                diag[j][:, i] = np.real(np.diagonal(a, axis1=1, axis2=2))
    for k in lin_ids:
        sl = slice(lin_off[k], lin_off[k] + blocks[k].count)
        if k in sp.objective:
            c_lin[:, sl] = np.asarray(sp.objective[k], dtype=float)
        for i, row in enumerate(sp.coeffs):
            if k in row:
                A_lin[:, i, sl] = np.asarray(row[k], dtype=float)
    b = sp.rhs.copy()

    std = _Std(dims, diag, dense_idx, dense, C, A_lin, c_lin, b)

    # row normalisation (slacks excluded, so they stay unit coefficients and the
    # stored slack is the physical one divided by the row norm), then overall
    # scaling of b and C
    row = np.sum(A_lin**2, axis=2)
    for j in range(len(dims)):
        row += np.sum(diag[j] ** 2, axis=2)
        if dense_idx[j]:
            row[:, dense_idx[j]] += np.sum(np.abs(dense[j]) ** 2, axis=(2, 3))
    row = np.sqrt(row)
    row[row == 0.0] = 1.0
    for s_, i in enumerate(slack_rows):
        A_lin[:, i, n_user_lin + s_] = row[:, i] if sp.senses[i] == "le" else -row[:, i]
    std.A_lin = A_lin / row[:, :, None]
    std.diag = [d / row[:, :, None] for d in diag]
    std.dense = [d / row[:, di][:, :, None, None] for d, di in zip(dense, dense_idx)]
    std.b = b / row
    b_scale = np.maximum(1.0, np.linalg.norm(std.b, axis=1))
    c_norm = np.sqrt(
        np.sum(c_lin**2, axis=1) + sum(np.sum(np.abs(c) ** 2, axis=(1, 2)) for c in C)
    )
    c_scale = np.maximum(1.0, c_norm)
    std.b = std.b / b_scale[:, None]
    std.C = [c / c_scale[:, None, None] for c in C]
    std.c_lin = c_lin / c_scale[:, None]
    layout = dict(
        psd_ids=psd_ids,
        lin_ids=lin_ids,
        lin_off=lin_off,
        n_user_lin=n_user_lin,
        slack_rows=slack_rows,
        row=row,
        b_scale=b_scale,
        c_scale=c_scale,
    )
    return std, layout


# --- interior-point core ---------------------------------------------------


def _inner(Xs, Zs, x, z):
    s = np.einsum("bn,bn->b", x, z)
    for X, Z in zip(Xs, Zs):
        s = s + np.real(np.einsum("bpq,bpq->b", X, np.conj(Z)))
    return s


def _nt_scaling(X, Z):
    # X = G Lam G^H, Z = G^-H Lam G^-1 with Lam diagonal
    wx, vx = np.linalg.eigh(X)
    wx = np.clip(wx, 1e-300, None)
    xh = (vx * np.sqrt(wx)[:, None, :]) @ herm(vx)
    S = xh @ Z @ xh
    S = 0.5 * (S + herm(S))
    ws, q = np.linalg.eigh(S)
    lam = np.sqrt(np.clip(ws, 1e-300, None))
    G = xh @ q / np.sqrt(lam)[:, None, :]
    return G, lam


def _max_step(lam, D):
    # largest a <= 1 such that Lam + a D stays PSD (D in scaled space)
    s = 1.0 / np.sqrt(lam)
    T = s[:, :, None] * D * s[:, None, :]
    T = 0.5 * (T + herm(T))
    e = np.linalg.eigvalsh(T)[:, 0]
    out = np.full(e.shape, np.inf)
    neg = e < 0
    out[neg] = -1.0 / e[neg]
    return out


def _max_step_lin(x, dx):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(dx < 0, -x / dx, np.inf)
    return np.min(r, axis=1) if r.shape[1] else np.full(x.shape[0], np.inf)


def _solve_spd(M, r):
    try:
        L = np.linalg.cholesky(M)
        y = np.linalg.solve(L, r[..., None])
        return np.linalg.solve(herm(L), y)[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(r)
        for i in range(M.shape[0]):
            reg = 1e-14 * max(1.0, np.trace(M[i]) / M.shape[1])
            out[i] = np.linalg.lstsq(M[i] + reg * np.eye(M.shape[1]), r[i], rcond=None)[0]
        return out


def _ipm(std, opts):
    B, m = std.b.shape
    dims = std.dims
    n_lin = std.A_lin.shape[2]
    nblk = len(dims)

    # infeasible start, scaled identities
    a_norm = 1.0  # rows are normalised
    xi0 = np.maximum(10.0, np.sqrt(std.nu) * np.max(1.0 + np.abs(std.b), axis=1) / (1.0 + a_norm))
    c_norm = np.sqrt(
        np.sum(std.c_lin**2, axis=1) + sum(np.sum(np.abs(c) ** 2, axis=(1, 2)) for c in std.C)
    )
    zeta0 = np.maximum(10.0, np.maximum(np.sqrt(std.nu), c_norm))
    X = [xi0[:, None, None] * np.eye(n)[None].repeat(B, 0).astype(complex) for n in dims]
    Z = [zeta0[:, None, None] * np.eye(n)[None].repeat(B, 0).astype(complex) for n in dims]
    x = xi0[:, None] * np.ones((B, n_lin))
    z = zeta0[:, None] * np.ones((B, n_lin))
    y = np.zeros((B, m))

    status = np.array([None] * B, dtype=object)
    iters = np.zeros(B, dtype=int)
    best_err = np.full(B, np.inf)
    # progress is either a smaller residual or a sharper infeasibility certificate
    best_cert = np.full(B, np.inf)
    last_progress = np.zeros(B, dtype=int)
    broken = np.zeros(B, dtype=bool)
    best = [[v.copy() for v in X], x.copy(), y.copy(), [v.copy() for v in Z], z.copy()]
    b_norm = np.linalg.norm(std.b, axis=1)
    active = np.arange(B)

    def metrics(sd, X, x, y, Z, z):
        ATy, ATy_lin = sd.AT(y)
        rp = sd.b - sd.A(X, x)
        Rd = [c - zz - a for c, zz, a in zip(sd.C, Z, ATy)]
        rd_lin = sd.c_lin - z - ATy_lin
        pobj = np.einsum("bn,bn->b", sd.c_lin, x)
        for c, XX in zip(sd.C, X):
            pobj = pobj + np.real(np.einsum("bpq,bpq->b", c, np.conj(XX)))
        dobj = np.einsum("bm,bm->b", sd.b, y)
        cn = np.sqrt(np.sum(sd.c_lin**2, axis=1) + sum(np.sum(np.abs(c) ** 2, axis=(1, 2)) for c in sd.C))
        pinf = np.linalg.norm(rp, axis=1) / (1.0 + np.linalg.norm(sd.b, axis=1))
        dn = np.sum(rd_lin**2, axis=1) + sum(np.sum(np.abs(r) ** 2, axis=(1, 2)) for r in Rd)
        dinf = np.sqrt(dn) / (1.0 + cn)
        gap = np.abs(pobj - dobj) / (1.0 + np.abs(pobj) + np.abs(dobj))
        return rp, Rd, rd_lin, pobj, dobj, pinf, dinf, gap, ATy, ATy_lin

    for it in range(opts.max_iter + 1):
        if active.size == 0:
            break
        sd = std.take(active)
        Xa = [v[active] for v in X]
        Za = [v[active] for v in Z]
        xa, za, ya = x[active], z[active], y[active]
        rp, Rd, rd_lin, pobj, dobj, pinf, dinf, gap, ATy, ATy_lin = metrics(sd, Xa, xa, ya, Za, za)
        err = np.maximum(np.maximum(pinf, dinf), gap)

        # remember the best iterate per problem for failure reporting
        better = err < best_err[active]
        if np.any(better):
            g = active[better]
            best_err[g] = err[better]
            last_progress[g] = it
            for k in range(nblk):
                best[0][k][g] = Xa[k][better]
                best[3][k][g] = Za[k][better]
            best[1][g], best[2][g], best[4][g] = xa[better], ya[better], za[better]

        done = err <= opts.tol
        # primal infeasibility certificate: A^T y <= 0 with b^T y = 1
        by = dobj
        cert_p = np.zeros(active.size, dtype=bool)
        pos = by > 1e-12
        if np.any(pos):
            worst = np.max(ATy_lin, axis=1, initial=-np.inf) / np.where(pos, by, 1.0)
            for k in range(nblk):
                ev = np.linalg.eigvalsh(ATy[k])[:, -1] / np.where(pos, by, 1.0)
                worst = np.maximum(worst, ev)
            cert_p = pos & (worst <= opts.infeas_tol) & ~done
            sharper = pos & (worst < 0.5 * best_cert[active])
            best_cert[active[sharper]] = worst[sharper]
            last_progress[active[sharper]] = it
        # dual infeasibility: A(X) ~ 0 with <C, X> = -1
        cert_d = np.zeros(active.size, dtype=bool)
        neg = pobj < -1e-12
        if np.any(neg):
            AX = sd.A(Xa, xa)
            cert_d = neg & (np.linalg.norm(AX, axis=1) / np.where(neg, -pobj, 1.0) <= opts.infeas_tol) & ~done

        # no progress for a while, or the last step broke down
        stalled = (it - last_progress[active] >= STALL_ITERS) | broken[active] | ~np.isfinite(err)
        finished = done | cert_p | cert_d | stalled
        if it == opts.max_iter:
            finished[:] = True
        for j in np.flatnonzero(finished):
            g = active[j]
            iters[g] = it
            if done[j]:
                status[g] = OPTIMAL
            elif cert_p[j]:
                status[g] = INFEASIBLE
            elif cert_d[j]:
                status[g] = DUAL_INFEASIBLE
            else:
                status[g] = OPTIMAL if best_err[g] <= opts.accept_tol else NUMERICAL_FAILURE
                for k in range(nblk):
                    X[k][g], Z[k][g] = best[0][k][g], best[3][k][g]
                x[g], y[g], z[g] = best[1][g], best[2][g], best[4][g]
        keep = ~finished
        if not np.any(keep):
            active = active[keep]
            break
        sel = np.flatnonzero(keep)
        sd = sd.take(sel)
        Xa = [v[sel] for v in Xa]
        Za = [v[sel] for v in Za]
        xa, za, ya = xa[sel], za[sel], ya[sel]
        rp = rp[sel]
        Rd = [r[sel] for r in Rd]
        rd_lin = rd_lin[sel]
        act = active[keep]
        nb = act.size

        try:
            with np.errstate(all="ignore"):
                mu = _inner(Xa, Za, xa, za) / std.nu
                scal = [_nt_scaling(Xk, Zk) for Xk, Zk in zip(Xa, Za)]
                Gs = [s[0] for s in scal]
                lams = [s[1] for s in scal]
                Ws = [G @ herm(G) for G in Gs]
                d_lin = xa / za
                try:
                    M = sd.schur(Ws, d_lin)
                except FloatingPointError:
                    M = None
                WRdW = [W @ R @ W for W, R in zip(Ws, Rd)]

                def direction(rhs_scaled, rhs_lin):
                    # rhs_scaled: per block target for Lam*P + P*Lam; rhs_lin: for z*dx + x*dz
                    Rc = []
                    for G, lam, R in zip(Gs, lams, rhs_scaled):
                        P = R / (lam[:, :, None] + lam[:, None, :])
                        Rc.append(G @ P @ herm(G))
                    rc_lin = rhs_lin / za
                    t_mats = [rc - wrw for rc, wrw in zip(Rc, WRdW)]
                    t_lin = rc_lin - d_lin * rd_lin
                    r = rp - sd.A(t_mats, t_lin)
                    dy = _solve_spd(M, r)
                    ATdy, ATdy_lin = sd.AT(dy)
                    dZ = [R - a for R, a in zip(Rd, ATdy)]
                    dz = rd_lin - ATdy_lin
                    dX = [rc - W @ dz_ @ W for rc, W, dz_ in zip(Rc, Ws, dZ)]
                    dX = [0.5 * (d + herm(d)) for d in dX]
                    dZ = [0.5 * (d + herm(d)) for d in dZ]
                    dx = rc_lin - d_lin * dz
                    return dX, dx, dy, dZ, dz

                def scaled(dX, dZ):
                    dZt = [herm(G) @ d @ G for G, d in zip(Gs, dZ)]
                    dXt = []
                    for G, d in zip(Gs, dX):
                        Gi = np.linalg.inv(G)
                        dXt.append(Gi @ d @ herm(Gi))
                    return dXt, dZt

                def steps(dX, dx, dZ, dz):
                    dXt, dZt = scaled(dX, dZ)
                    ap = np.minimum(1.0, _max_step_lin(xa, dx))
                    ad = np.minimum(1.0, _max_step_lin(za, dz))
                    for lam, a, b in zip(lams, dXt, dZt):
                        ap = np.minimum(ap, _max_step(lam, a))
                        ad = np.minimum(ad, _max_step(lam, b))
                    return ap, ad, dXt, dZt

                # predictor
                rhs_pred = []
                for lam in lams:
                    D = np.zeros((nb, lam.shape[1], lam.shape[1]), dtype=complex)
                    ii = np.arange(lam.shape[1])
                    D[:, ii, ii] = -2.0 * lam**2
                    rhs_pred.append(D)
                dX, dx, dy, dZ, dz = direction(rhs_pred, -xa * za)
                ap, ad, dXt, dZt = steps(dX, dx, dZ, dz)
                ap = np.minimum(1.0, ap)
                ad = np.minimum(1.0, ad)
                mu_aff = _inner(
                    [X_ + ap[:, None, None] * d for X_, d in zip(Xa, dX)],
                    [Z_ + ad[:, None, None] * d for Z_, d in zip(Za, dZ)],
                    xa + ap[:, None] * dx,
                    za + ad[:, None] * dz,
                ) / std.nu
                sigma = np.clip((mu_aff / mu) ** 3, 0.0, 1.0)

                # corrector
                rhs_corr = []
                for lam, a, b in zip(lams, dXt, dZt):
                    n = lam.shape[1]
                    ii = np.arange(n)
                    R = -(a @ b + b @ a)
                    R[:, ii, ii] += 2.0 * (sigma * mu)[:, None] - 2.0 * lam**2
                    rhs_corr.append(R)
                rhs_lin = (sigma * mu)[:, None] - xa * za - dx * dz
                dX, dx, dy, dZ, dz = direction(rhs_corr, rhs_lin)
                ap, ad, _, _ = steps(dX, dx, dZ, dz)
                ap = np.minimum(1.0, opts.step * ap)
                ad = np.minimum(1.0, opts.step * ad)

                for k in range(nblk):
                    X[k][act] = Xa[k] + ap[:, None, None] * dX[k]
                    Z[k][act] = Za[k] + ad[:, None, None] * dZ[k]
                x[act] = xa + ap[:, None] * dx
                z[act] = za + ad[:, None] * dz
                y[act] = ya + ad[:, None] * dy
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            broken[act] = True
        else:
            bad = ~(np.isfinite(x[act]).all(axis=1) & np.isfinite(z[act]).all(axis=1) & np.isfinite(y[act]).all(axis=1))
            for k in range(nblk):
                bad |= ~np.isfinite(X[k][act]).all(axis=(1, 2)) | ~np.isfinite(Z[k][act]).all(axis=(1, 2))
            broken[act[bad]] = True
        active = act

    for g in range(B):
        if status[g] is None:
            status[g] = NUMERICAL_FAILURE
            iters[g] = opts.max_iter
    return X, x, y, Z, z, status, iters


# --- public API ------------------------------------------------------------


def solve(problem, options=None):
    """Solve one :class:`ConicProblem`; see :func:`solve_batch`."""
    return solve_batch([problem], options)[0]


def solve_batch(problems, options=None):
    """Solve problems sharing one structure in a single vectorised run.

    Returns a list of :class:`ConicSolution` in input order.
    """
    if not problems:
        return []
    opts = options or SolverOptions()
    std, lay = _build(problems)
    X, x, y, Z, z, status, iters = _ipm(std, opts)
    out = []
    for bi, p in enumerate(problems):
        bs, cs = lay["b_scale"][bi], lay["c_scale"][bi]
        row = lay["row"][bi]
        primal, dual_slack = [None] * len(p.blocks), [None] * len(p.blocks)
        for j, k in enumerate(lay["psd_ids"]):
            Xk = X[j][bi] * bs
            primal[k] = 0.5 * (Xk + Xk.conj().T)
            Zk = Z[j][bi] * cs
            dual_slack[k] = 0.5 * (Zk + Zk.conj().T)
        for k in lay["lin_ids"]:
            sl = slice(lay["lin_off"][k], lay["lin_off"][k] + p.blocks[k].count)
            primal[k] = x[bi, sl] * bs
            dual_slack[k] = z[bi, sl] * cs
        slacks = np.zeros(p.n_constraints)
        for s, i in enumerate(lay["slack_rows"]):
            slacks[i] = x[bi, lay["n_user_lin"] + s] * bs * row[i]
        yy = y[bi] * cs / row
        st = status[bi]
        sol = ConicSolution(
            status=st,
            primal=primal,
            dual=yy,
            dual_slack=dual_slack,
            objective_value=np.nan,
            dual_objective=np.nan,
            duality_gap=np.nan,
            max_kkt_residual=np.nan,
            iterations=int(iters[bi]),
            slacks=slacks,
        )
        if st == INFEASIBLE:
            sol.certificate = yy / max(float(np.dot([c.rhs for c in p.constraints], yy)), 1e-300)
        rep = check_kkt(p, sol)
        sol.objective_value = rep.primal_objective
        sol.dual_objective = rep.dual_objective
        sol.duality_gap = rep.duality_gap
        sol.max_kkt_residual = rep.max_residual
        if st == OPTIMAL and not rep.accepted(opts.accept_tol):
            sol.status = NUMERICAL_FAILURE
        out.append(sol)
    return out


@dataclass
class KktReport:
    primal_residual: float
    primal_cone: float
    dual_residual: float
    dual_cone: float
    complementarity: float
    duality_gap: float
    primal_objective: float
    dual_objective: float

    @property
    def max_residual(self):
        return max(
            self.primal_residual,
            self.primal_cone,
            self.dual_residual,
            self.dual_cone,
            self.complementarity,
        )

    def accepted(self, tol=1e-7):
        scale = 1.0 + abs(self.primal_objective)
        return self.max_residual <= 10.0 * tol and self.duality_gap <= tol * scale


def check_kkt(problem, sol):
    """Recompute KKT residuals of ``sol`` directly from ``problem``.

    Residuals are relative: constraint violations are divided by
    ``1 + |rhs|`` after normalising each row by its coefficient norm, cone
    violations by ``1 + ||block||``, and complementarity by
    ``1 + |primal objective| + |dual objective|``.
    """
    p = problem
    y = np.asarray(sol.dual, dtype=float)
    X = sol.primal
    slacks = sol.slacks if sol.slacks is not None else np.zeros(p.n_constraints)
    pobj = 0.0
    for k, c in p.objective.items():
        pobj += float(np.real(np.sum(np.asarray(c) * np.conj(X[k])))) if isinstance(p.blocks[k], Psd) \
            else float(np.dot(c, X[k]))
    dobj = float(sum(con.rhs * yi for con, yi in zip(p.constraints, y)))

    pres = 0.0
    for i, con in enumerate(p.constraints):
        val = 0.0
        nrm = 0.0
        for k, a in con.coeffs.items():
            a = np.asarray(a)
            if isinstance(p.blocks[k], Psd):
                val += float(np.real(np.sum(a * np.conj(X[k]))))
            else:
                val += float(np.dot(a, X[k]))
            nrm += float(np.sum(np.abs(a) ** 2))
        nrm = max(np.sqrt(nrm), 1e-300)
        if con.sense == "eq":
            viol = abs(val - con.rhs)
        elif con.sense == "le":
            viol = max(0.0, val - con.rhs)
        else:
            viol = max(0.0, con.rhs - val)
        pres = max(pres, viol / nrm / (1.0 + abs(con.rhs) / nrm))

    pcone = 0.0
    dcone = 0.0
    dres = 0.0
    comp = 0.0
    for k, blk in enumerate(p.blocks):
        c = p.objective.get(k)
        if isinstance(blk, Psd):
            Zk = np.zeros((blk.dim, blk.dim), dtype=complex) if c is None else np.array(c, dtype=complex)
        else:
            Zk = np.zeros(blk.count) if c is None else np.array(c, dtype=float)
        for con, yi in zip(p.constraints, y):
            if k in con.coeffs:
                Zk = Zk - yi * np.asarray(con.coeffs[k])
        Xk = X[k]
        if isinstance(blk, Psd):
            xn = 1.0 + np.linalg.norm(Xk)
            zn = 1.0 + np.linalg.norm(Zk)
            pcone = max(pcone, max(0.0, -np.linalg.eigvalsh(0.5 * (Xk + Xk.conj().T))[0]) / xn)
            dcone = max(dcone, max(0.0, -np.linalg.eigvalsh(0.5 * (Zk + Zk.conj().T))[0]) / zn)
            comp += float(np.real(np.sum(Xk * np.conj(Zk))))
            if sol.dual_slack is not None and sol.dual_slack[k] is not None:
                dres = max(dres, np.linalg.norm(Zk - sol.dual_slack[k]) / zn)
        else:
            xn = 1.0 + np.linalg.norm(Xk)
            zn = 1.0 + np.linalg.norm(Zk)
            pcone = max(pcone, max(0.0, -float(np.min(Xk))) / xn)
            dcone = max(dcone, max(0.0, -float(np.min(Zk))) / zn)
            comp += float(np.dot(Xk, Zk))
            if sol.dual_slack is not None and sol.dual_slack[k] is not None:
                dres = max(dres, np.linalg.norm(Zk - sol.dual_slack[k]) / zn)
    # slack variables: dual slack of s_i is -y_i (le) or +y_i (ge)
    for i, con in enumerate(p.constraints):
        if con.sense == "eq":
            continue
        zi = -y[i] if con.sense == "le" else y[i]
        scale = 1.0 + abs(y[i])
        dcone = max(dcone, max(0.0, -zi) / scale)
        pcone = max(pcone, max(0.0, -slacks[i]) / (1.0 + abs(slacks[i])))
        comp += slacks[i] * zi
    denom = 1.0 + abs(pobj) + abs(dobj)
    return KktReport(
        primal_residual=pres,
        primal_cone=pcone,
        dual_residual=dres,
        dual_cone=dcone,
        complementarity=abs(comp) / denom,
        duality_gap=abs(pobj - dobj),
        primal_objective=pobj,
        dual_objective=dobj,
    )


# --- stacked API -----------------------------------------------------------


@dataclass
class StackedSolution:
    """Solutions of a :class:`StackedProblem`; every field has a batch axis."""

    status: np.ndarray
    primal: list
    dual: np.ndarray
    dual_slack: list
    slacks: np.ndarray
    objective_value: np.ndarray
    dual_objective: np.ndarray
    duality_gap: np.ndarray
    max_kkt_residual: np.ndarray
    iterations: np.ndarray

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _ip(a, X):
    if a.ndim == 3:
        return np.real(np.einsum("bpq,bpq->b", a, np.conj(X)))
    return np.einsum("bn,bn->b", a, X)


def kkt_stacked(sp, primal, slacks, y, dual_slack=None):
    """Vectorised :func:`check_kkt`; returns a dict of ``(B,)`` arrays."""
    B = sp.batch
    pobj = np.zeros(B)
    for k, c in sp.objective.items():
        pobj += _ip(np.asarray(c), primal[k])
    dobj = np.einsum("bm,bm->b", sp.rhs, y)

    pres = np.zeros(B)
    for i, row in enumerate(sp.coeffs):
        val = np.zeros(B)
        nrm = np.zeros(B)
        for k, a in row.items():
            a = np.asarray(a)
            val += _ip(a, primal[k])
            nrm += np.sum(np.abs(a) ** 2, axis=tuple(range(1, a.ndim)))
        nrm = np.maximum(np.sqrt(nrm), 1e-300)
        rhs = sp.rhs[:, i]
        if sp.senses[i] == "eq":
            viol = np.abs(val - rhs)
        elif sp.senses[i] == "le":
            viol = np.maximum(0.0, val - rhs)
        else:
            viol = np.maximum(0.0, rhs - val)
        pres = np.maximum(pres, viol / nrm / (1.0 + np.abs(rhs) / nrm))

    pcone = np.zeros(B)
    dcone = np.zeros(B)
    dres = np.zeros(B)
    comp = np.zeros(B)
    for k, blk in enumerate(sp.blocks):
        shape = sp.shape_of(k)
        psd = isinstance(blk, Psd)
        Zk = np.zeros((B,) + shape, dtype=complex if psd else float)
        if k in sp.objective:
            Zk = Zk + np.asarray(sp.objective[k])
        for i, row in enumerate(sp.coeffs):
            if k in row:
                yi = y[:, i].reshape((B,) + (1,) * len(shape))
                Zk = Zk - yi * np.asarray(row[k])
        Xk = primal[k]
        axes = tuple(range(1, Xk.ndim))
        xn = 1.0 + np.sqrt(np.sum(np.abs(Xk) ** 2, axis=axes))
        zn = 1.0 + np.sqrt(np.sum(np.abs(Zk) ** 2, axis=axes))
        if psd:
            ex = np.linalg.eigvalsh(0.5 * (Xk + herm(Xk)))[:, 0]
            ez = np.linalg.eigvalsh(0.5 * (Zk + herm(Zk)))[:, 0]
        else:
            ex, ez = np.min(Xk, axis=1), np.min(Zk, axis=1)
        pcone = np.maximum(pcone, np.maximum(0.0, -ex) / xn)
        dcone = np.maximum(dcone, np.maximum(0.0, -ez) / zn)
        comp += _ip(Zk, Xk)
        if dual_slack is not None:
            diff = Zk - dual_slack[k]
            dres = np.maximum(dres, np.sqrt(np.sum(np.abs(diff) ** 2, axis=axes)) / zn)
    for i, sense in enumerate(sp.senses):
        if sense == "eq":
            continue
        zi = -y[:, i] if sense == "le" else y[:, i]
        dcone = np.maximum(dcone, np.maximum(0.0, -zi) / (1.0 + np.abs(y[:, i])))
        si = slacks[:, i]
        pcone = np.maximum(pcone, np.maximum(0.0, -si) / (1.0 + np.abs(si)))
        comp += si * zi
    denom = 1.0 + np.abs(pobj) + np.abs(dobj)
    comp = np.abs(comp) / denom
    return dict(
        primal_residual=pres,
        primal_cone=pcone,
        dual_residual=dres,
        dual_cone=dcone,
        complementarity=comp,
        duality_gap=np.abs(pobj - dobj),
        primal_objective=pobj,
        dual_objective=dobj,
        max_residual=np.maximum.reduce([pres, pcone, dres, dcone, comp]),
    )


def solve_stacked(sp, options=None):
    """Solve a :class:`StackedProblem`; same acceptance rules as :func:`solve_batch`."""
    opts = options or SolverOptions()
    std, lay = _build_stacked(sp)
    X, x, y, Z, z, status, iters = _ipm(std, opts)
    bs = lay["b_scale"]
    cs = lay["c_scale"]
    B = sp.batch
    primal = [None] * len(sp.blocks)
    dual_slack = [None] * len(sp.blocks)
    for j, k in enumerate(lay["psd_ids"]):
        Xk = X[j] * bs[:, None, None]
        primal[k] = 0.5 * (Xk + herm(Xk))
        Zk = Z[j] * cs[:, None, None]
        dual_slack[k] = 0.5 * (Zk + herm(Zk))
    for k in lay["lin_ids"]:
        sl = slice(lay["lin_off"][k], lay["lin_off"][k] + sp.blocks[k].count)
        primal[k] = x[:, sl] * bs[:, None]
        dual_slack[k] = z[:, sl] * cs[:, None]
    slacks = np.zeros((B, sp.n_constraints))
    for s_, i in enumerate(lay["slack_rows"]):
        slacks[:, i] = x[:, lay["n_user_lin"] + s_] * bs * lay["row"][:, i]
    yy = y * cs[:, None] / lay["row"]
    rep = kkt_stacked(sp, primal, slacks, yy, dual_slack)
    status = np.array(status, dtype=object)
    ok = (rep["max_residual"] <= 10.0 * opts.accept_tol) & (
        rep["duality_gap"] <= opts.accept_tol * (1.0 + np.abs(rep["primal_objective"]))
    )
    status[(status == OPTIMAL) & ~ok] = NUMERICAL_FAILURE
    return StackedSolution(
        status=status,
        primal=primal,
        dual=yy,
        dual_slack=dual_slack,
        slacks=slacks,
        objective_value=rep["primal_objective"],
        dual_objective=rep["dual_objective"],
        duality_gap=rep["duality_gap"],
        max_kkt_residual=rep["max_residual"],
        iterations=np.asarray(iters),
    )


# --- debug dump ------------------------------------------------------------


def _enc(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}
    return {"re": a.tolist()}


def _dec(d):
    re = np.asarray(d["re"], dtype=float)
    return re + 1j * np.asarray(d["im"], dtype=float) if "im" in d else re


def dump_problem(problem, path):
    """Write a problem as indented JSON for inspection or external cross-checks."""
    doc = {
        "blocks": [
            {"kind": "psd", "dim": b.dim} if isinstance(b, Psd) else {"kind": "nonneg", "count": b.count}
            for b in problem.blocks
        ],
        "objective": {str(k): _enc(v) for k, v in problem.objective.items()},
        "constraints": [
            {
                "name": c.name,
                "sense": c.sense,
                "rhs": float(c.rhs),
                "coeffs": {str(k): _enc(v) for k, v in c.coeffs.items()},
            }
            for c in problem.constraints
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_problem(path):
    with open(path) as fh:
        doc = json.load(fh)
    blocks = [Psd(b["dim"]) if b["kind"] == "psd" else Nonneg(b["count"]) for b in doc["blocks"]]
    return ConicProblem(
        blocks=blocks,
        objective={int(k): _dec(v) for k, v in doc["objective"].items()},
        constraints=[
            Constraint({int(k): _dec(v) for k, v in c["coeffs"].items()}, c["sense"], c["rhs"], c["name"])
            for c in doc["constraints"]
        ],
    )
