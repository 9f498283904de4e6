"""
Transmit covariance and artificial-noise design for fixed IRS phases.

The rank constraint on ``W = w w^H`` is dropped and the remaining problem is
a linear SDP in ``(W, V)``: ``log2(1 + <H, W>/sigma2)`` is increasing in
``<H, W>``, so maximising the rate is maximising ``<H, W>``. Variables are
solved in units of the power budget (``W = p_s * W~``) to keep the
interior-point iterates well scaled.
"""

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .numerics import hermitian_eig, outer

TIGHT_RATIO = 1e-4
N_RANDOMIZATION = 200

EH_INFEASIBLE = "eh-infeasible"
LEAKAGE_INFEASIBLE = "leakage-infeasible"


@dataclass
class BsSubproblemInput:
    h: np.ndarray
    g: tuple
    h_eve: tuple
    p_s: float
    beta: tuple
    gamma: float
    noise_ir: float
    noise_er: tuple
    noise_eve: tuple

    @property
    def n_tx(self):
        return self.h.size

    @classmethod
    def from_channels(cls, eff, scenario, beta, gamma):
        s = scenario
        return cls(eff.h, eff.g, eff.h_eve, s.p_max, tuple(beta), gamma,
                   s.noise_ir, s.noise_er, s.noise_eve)


@dataclass
class BsSolution:
    status: str
    W: np.ndarray = None
    V: np.ndarray = None
    w: np.ndarray = None
    tightness_ratio: float = np.nan
    objective_rate: float = np.nan
    slacks: dict = field(default_factory=dict)
    randomized: bool = False
    conic: object = None

    @property
    def ok(self):
        return self.status == sdp.OPTIMAL


def assemble_p4(inp: BsSubproblemInput) -> sdp.ConicProblem:
    """Relaxed transmit design as a minimisation over blocks ``[W~, V~]``.

    Constraint order: power, EH per ER (only where ``beta > 0``), leakage
    per ER, leakage per Eve.
    """
    n = inp.n_tx
    ps = inp.p_s
    eye = np.eye(n)
    cons = [sdp.Constraint({0: eye, 1: eye}, "le", 1.0, "power")]
    for i, (g, b) in enumerate(zip(inp.g, inp.beta)):
        if b > 0:
            G = outer(g) * (ps / b)
            cons.append(sdp.Constraint({0: G, 1: G}, "ge", 1.0, f"eh[{i}]"))
    for i, (g, n2) in enumerate(zip(inp.g, inp.noise_er)):
        G = outer(g) * (ps / n2)
        cons.append(sdp.Constraint({0: G, 1: -inp.gamma * G}, "le", inp.gamma, f"leak_er[{i}]"))
    for k, (g, n2) in enumerate(zip(inp.h_eve, inp.noise_eve)):
        G = outer(g) * (ps / n2)
        cons.append(sdp.Constraint({0: G, 1: -inp.gamma * G}, "le", inp.gamma, f"leak_eve[{k}]"))
    H = outer(inp.h) * (ps / inp.noise_ir)
    return sdp.ConicProblem([sdp.Psd(n), sdp.Psd(n)], {0: -H}, cons)


def extract_rank_one(W):
    """Principal component ``w = sqrt(l1) v1`` and the ratio ``l2 / l1``."""
    lam, vec = hermitian_eig(W)
    l1 = max(lam[0], 0.0)
    w = np.sqrt(l1) * vec[:, 0]
    if l1 <= 0:
        return w, 0.0
    l2 = max(lam[1], 0.0) if lam.size > 1 else 0.0
    return w, float(l2 / l1)


def constraint_values(inp, W, V):
    """Physical values of every transmit-design constraint, keyed by name."""
    out = {"power": float(np.real(np.trace(W) + np.trace(V)))}
    for i, g in enumerate(inp.g):
        G = outer(g)
        out[f"eh[{i}]"] = float(np.real(np.sum(G * (W + V).conj())))
        out[f"leak_er[{i}]"] = float(np.real(np.sum(G * (W - inp.gamma * V).conj())))
    for k, g in enumerate(inp.h_eve):
        G = outer(g)
        out[f"leak_eve[{k}]"] = float(np.real(np.sum(G * (W - inp.gamma * V).conj())))
    return out


def constraint_slacks(inp, W, V):
    """Slack (>= 0 when satisfied) of each constraint relative to its bound."""
    vals = constraint_values(inp, W, V)
    out = {"power": inp.p_s - vals["power"]}
    for i, b in enumerate(inp.beta):
        if b > 0:
            out[f"eh[{i}]"] = vals[f"eh[{i}]"] - b
        out[f"leak_er[{i}]"] = inp.gamma * inp.noise_er[i] - vals[f"leak_er[{i}]"]
    for k, n2 in enumerate(inp.noise_eve):
        out[f"leak_eve[{k}]"] = inp.gamma * n2 - vals[f"leak_eve[{k}]"]
    return out


def _feasible(inp, W, V, tol=1e-6):
    sl = constraint_slacks(inp, W, V)
    scale = {"power": inp.p_s}
    for i, b in enumerate(inp.beta):
        scale[f"eh[{i}]"] = b
        scale[f"leak_er[{i}]"] = inp.noise_er[i]
    for k, n2 in enumerate(inp.noise_eve):
        scale[f"leak_eve[{k}]"] = n2
    return all(v >= -tol * scale[k] for k, v in sl.items())


def gaussian_randomization(inp, W, V, n_samples=N_RANDOMIZATION, seed=0):
    """Best feasible rank-one candidate drawn from CN(0, W), or ``None``."""
    rng = np.random.default_rng(seed)
    lam, vec = np.linalg.eigh(W)
    root = vec * np.sqrt(np.clip(lam, 0, None))
    budget = float(np.real(np.trace(W)))
    best, best_val = None, -np.inf
    for _ in range(n_samples):
        r = (rng.standard_normal(inp.n_tx) + 1j * rng.standard_normal(inp.n_tx)) / np.sqrt(2)
        cand = root @ r
        nrm = np.linalg.norm(cand)
        if nrm == 0:
            continue
        cand = cand * np.sqrt(budget) / nrm
        if not _feasible(inp, outer(cand), V):
            continue
        val = abs(np.vdot(inp.h, cand)) ** 2
        if val > best_val:
            best, best_val = cand, val
    return best


def diagnose_infeasibility(inp):
    """Tell EH infeasibility apart from leakage infeasibility.

    Solves ``max t`` s.t. ``<G_i, X> >= t beta_i`` and ``Tr X <= p_s``; the
    EH requirements are jointly achievable iff the optimum reaches 1.
    """
    active = [(g, b) for g, b in zip(inp.g, inp.beta) if b > 0]
    if not active:
        return LEAKAGE_INFEASIBLE
    n = inp.n_tx
    cons = [sdp.Constraint({0: np.eye(n)}, "le", 1.0, "power")]
    for i, (g, b) in enumerate(active):
        cons.append(sdp.Constraint({0: outer(g) * (inp.p_s / b), 1: np.array([-1.0])}, "ge", 0.0, f"eh[{i}]"))
    prob = sdp.ConicProblem([sdp.Psd(n), sdp.Nonneg(1)], {1: np.array([-1.0])}, cons)
    sol = sdp.solve(prob)
    if sol.status == sdp.OPTIMAL and -sol.objective_value < 1.0 - 1e-7:
        return EH_INFEASIBLE
    return LEAKAGE_INFEASIBLE


def null_space_basis(inp, rtol=1e-10):
    """Orthonormal basis of the directions invisible to every ER and Eve."""
    L = np.stack(list(inp.g) + list(inp.h_eve), axis=1)
    U, sv, _ = np.linalg.svd(L)
    rank = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    return U[:, rank:]


def assemble_p4_null(inp, basis):
    """Zero-leakage problem with ``W = basis W' basis^H``.

    With ``gamma = 0`` the leakage caps force ``W g = 0``, which leaves the
    relaxation without an interior point; restricting ``W`` to the null
    space removes those rows and restores strict feasibility. When the null
    space is trivial only ``V`` remains (blocks ``[V~]``).
    """
    n, r = inp.n_tx, basis.shape[1]
    ps = inp.p_s
    red = lambda A: basis.conj().T @ A @ basis
    blocks = ([sdp.Psd(r)] if r else []) + [sdp.Psd(n)]
    v = len(blocks) - 1

    def co(A):
        return ({0: red(A), v: A} if r else {v: A})

    cons = [sdp.Constraint(co(np.eye(n)), "le", 1.0, "power")]
    for i, (g, b) in enumerate(zip(inp.g, inp.beta)):
        if b > 0:
            cons.append(sdp.Constraint(co(outer(g) * (ps / b)), "ge", 1.0, f"eh[{i}]"))
    obj = {0: -red(outer(inp.h) * (ps / inp.noise_ir))} if r else {}
    return sdp.ConicProblem(blocks, obj, cons)


def _finish(inp, conic, randomize=True, basis=None):
    if conic.status != sdp.OPTIMAL:
        status = conic.status
        if status == sdp.INFEASIBLE:
            status = diagnose_infeasibility(inp)
        return BsSolution(status=status, conic=conic)
    if basis is None:
        W = conic.primal[0] * inp.p_s
        V = conic.primal[1] * inp.p_s
    else:
        r = basis.shape[1]
        W = basis @ conic.primal[0] @ basis.conj().T * inp.p_s if r else np.zeros((inp.n_tx,) * 2, complex)
        V = conic.primal[-1] * inp.p_s
    W = 0.5 * (W + W.conj().T)
    V = 0.5 * (V + V.conj().T)
    w, ratio = extract_rank_one(W)
    randomized = False
    if ratio > TIGHT_RATIO and randomize:
        cand = gaussian_randomization(inp, W, V)
        randomized = True
        if cand is not None:
            w = cand
    rate = float(np.log2(1.0 + abs(np.vdot(inp.h, w)) ** 2 / inp.noise_ir))
    return BsSolution(
        status=sdp.OPTIMAL,
        W=W,
        V=V,
        w=w,
        tightness_ratio=ratio,
        objective_rate=rate,
        slacks=constraint_slacks(inp, W, V),
        randomized=randomized,
        conic=conic,
    )


def solve_bs(inp: BsSubproblemInput, options=None) -> BsSolution:
    """Solve the relaxed problem and extract the transmit beamformer."""
    if inp.gamma == 0 and (inp.g or inp.h_eve):
        basis = null_space_basis(inp)
        return _finish(inp, sdp.solve(assemble_p4_null(inp, basis), options), basis=basis)
    return _finish(inp, sdp.solve(assemble_p4(inp), options))


def solve_bs_batch(inputs, options=None, randomize=True):
    """Batched :func:`solve_bs` for inputs sharing dimensions and active EH set."""
    if not inputs:
        return []
    if any(i.gamma == 0 for i in inputs):
        return [solve_bs(i, options) for i in inputs]
    problems = [assemble_p4(i) for i in inputs]
    groups = {}
    for j, p in enumerate(problems):
        groups.setdefault(p.structure(), []).append(j)
    out = [None] * len(inputs)
    for idx in groups.values():
        sols = sdp.solve_batch([problems[j] for j in idx], options)
        for j, s in zip(idx, sols):
            out[j] = _finish(inputs[j], s, randomize)
    return out


def _outers(v):
    return np.einsum("bi,bj->bij", v, np.conj(v))


def assemble_p4_stacked(h, g, h_eve, p_s, beta, gamma, noise_ir, noise_er, noise_eve):
    """:func:`assemble_p4` for a batch of channel triples sharing all scalars.

    ``h`` is ``(B, n)``, ``g`` is ``(B, M, n)`` and ``h_eve`` is ``(B, K, n)``.
    """
    h = np.atleast_2d(h)
    B, n = h.shape
    eye = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n))
    coeffs = [{0: eye, 1: eye}]
    senses = ["le"]
    rhs = [1.0]
    for i, b in enumerate(beta):
        if b > 0:
            G = _outers(g[:, i]) * (p_s / b)
            coeffs.append({0: G, 1: G})
            senses.append("ge")
            rhs.append(1.0)
    for i, n2 in enumerate(noise_er):
        G = _outers(g[:, i]) * (p_s / n2)
        coeffs.append({0: G, 1: -gamma * G})
        senses.append("le")
        rhs.append(gamma)
    for k, n2 in enumerate(noise_eve):
        G = _outers(h_eve[:, k]) * (p_s / n2)
        coeffs.append({0: G, 1: -gamma * G})
        senses.append("le")
        rhs.append(gamma)
    H = _outers(h) * (p_s / noise_ir)
    return sdp.StackedProblem(
        [sdp.Psd(n), sdp.Psd(n)], tuple(senses), {0: -H}, coeffs,
        np.broadcast_to(np.array(rhs), (B, len(rhs))),
    )


@dataclass
class StackedBsResult:
    status: np.ndarray
    W: np.ndarray
    V: np.ndarray
    w: np.ndarray
    tightness_ratio: np.ndarray
    conic: object

    @property
    def ok(self):
        return self.status == sdp.OPTIMAL


def solve_bs_stacked(h, g, h_eve, p_s, beta, gamma, noise_ir, noise_er, noise_eve, options=None):
    """Relaxed transmit design for many channel triples at once.

    Rank-one extraction uses a batched LAPACK eigensolver; entries that are
    not tight fall back to Gaussian randomisation individually. No
    infeasibility diagnosis is attempted here.
    """
    if gamma == 0 and (len(noise_er) or len(noise_eve)):
        sols = [solve_bs(BsSubproblemInput(h[j], tuple(g[j]), tuple(h_eve[j]), p_s, tuple(beta), gamma,
                                           noise_ir, tuple(noise_er), tuple(noise_eve)), options)
                for j in range(len(h))]
        n = h.shape[1]
        pick = lambda f, shape: np.stack([getattr(x, f) if x.ok else np.zeros(shape, complex) for x in sols])
        return StackedBsResult(np.array([x.status for x in sols], dtype=object), pick("W", (n, n)),
                               pick("V", (n, n)), pick("w", (n,)),
                               np.array([x.tightness_ratio for x in sols]), [x.conic for x in sols])
    sp = assemble_p4_stacked(h, g, h_eve, p_s, beta, gamma, noise_ir, noise_er, noise_eve)
    sol = sdp.solve_stacked(sp, options)
    W = sol.primal[0] * p_s
    V = sol.primal[1] * p_s
    lam, vec = np.linalg.eigh(W)
    l1 = np.clip(lam[:, -1], 0.0, None)
    l2 = np.clip(lam[:, -2], 0.0, None) if lam.shape[1] > 1 else np.zeros_like(l1)
    ratio = np.where(l1 > 0, l2 / np.where(l1 > 0, l1, 1.0), 0.0)
    w = np.sqrt(l1)[:, None] * vec[:, :, -1]
    ok = sol.status == sdp.OPTIMAL
    for j in np.flatnonzero(ok & (ratio > TIGHT_RATIO)):
        inp = BsSubproblemInput(h[j], tuple(g[j]), tuple(h_eve[j]), p_s, tuple(beta), gamma,
                                noise_ir, tuple(noise_er), tuple(noise_eve))
        cand = gaussian_randomization(inp, W[j], V[j])
        if cand is not None:
            w[j] = cand
    return StackedBsResult(sol.status, W, V, w, ratio, sol)
