"""Exhaustive search for the two-antenna transmit design (tests only).

Beam directions come from a 1-degree grid on the complex unit sphere in C^2
(up to a common phase); artificial-noise shapes ``S`` (trace one) come from a
coarse PSD grid. For fixed direction and shape every constraint is linear in
(beam power q, noise power t), so the best feasible q has a closed form.
"""

import numpy as np


def sphere_grid(step_deg):
    a = np.deg2rad(np.arange(0, 90 + 1e-9, step_deg))
    p = np.deg2rad(np.arange(0, 360, step_deg))
    A, P = np.meshgrid(a, p, indexing="ij")
    return np.stack([np.cos(A).ravel(), (np.sin(A) * np.exp(1j * P)).ravel()], axis=1)


def shape_grid(step_deg=5.0):
    v = sphere_grid(step_deg)
    rank_one = np.einsum("bi,bj->bij", v, v.conj())
    diag = np.array([np.diag([x, 1 - x]) for x in np.linspace(0, 1, 21)], dtype=complex)
    return np.concatenate([rank_one, diag, 0.5 * rank_one + 0.25 * np.eye(2)])


def brute_force_bs(h, g, e, p_s, beta, gamma, n_ir, n_er, n_eve, beam_step=1.0, shape_step=5.0):
    """Best |h^H w|^2 over the grids; single ER ``g`` and single Eve ``e``."""
    W = sphere_grid(beam_step)
    S = shape_grid(shape_step)
    hw = np.abs(W.conj() @ h) ** 2
    gw = np.abs(W.conj() @ g) ** 2
    ew = np.abs(W.conj() @ e) ** 2
    gs = np.real(np.einsum("i,sij,j->s", g.conj(), S, g))
    es = np.real(np.einsum("i,sij,j->s", e.conj(), S, e))
    best = 0.0
    for chunk in np.array_split(np.arange(len(W)), 16):
        # (beams, shapes): each constraint reads  a*q + b*t >= c  with t >= 0, q + t <= p
        lo = np.zeros((len(chunk), len(S)))
        hi = np.full_like(lo, p_s)
        feas = np.ones_like(lo, dtype=bool)
        rows = [
            (gw[chunk, None], gs[None, :], beta),                 # EH
            (-gw[chunk, None] / gamma, gs[None, :], -n_er),       # ER leakage
            (-ew[chunk, None] / gamma, es[None, :], -n_eve),      # Eve leakage
        ]
        # minimal t for given q is max_k (c_k - a_k q)/b_k (and 0); q + t <= p gives
        # (1 - a_k/b_k) q <= p - c_k/b_k per k
        for a, b, c in rows:
            b = np.maximum(b, 1e-300)
            coef = 1 - a / b
            rhs = p_s - c / b
            coef, rhs = np.broadcast_arrays(coef, rhs)
            pos, neg = coef > 1e-15, coef < -1e-15
            hi = np.where(pos, np.minimum(hi, rhs / np.where(pos, coef, 1)), hi)
            lo = np.where(neg, np.maximum(lo, rhs / np.where(neg, coef, 1)), lo)
            feas &= ~((np.abs(coef) <= 1e-15) & (rhs < 0))
        ok = feas & (hi >= lo)
        if ok.any():
            q = np.where(ok, hi, 0.0)
            best = max(best, float(np.max(q * hw[chunk, None])))
    return best
