"""Brute-force and closed-form references, plus the two baseline schemes."""

import itertools

import numpy as np

from . import sdp
from .ao_driver import BeamformingSolution, package, requirements, tau_to_gamma
from .bs_beamforming import BsSubproblemInput, solve_bs_batch, solve_bs_stacked
from .channel import effective_channels, random_phases
from .numerics import InvalidInput
from .secrecy import evaluate

MAX_GRID_ELEMENTS = 3
GRID_CHUNK = 4096


def mrt_closed_form(h, p_s, sigma2):
    """Maximum-ratio transmission ``w = sqrt(p_s) h / ||h||``."""
    h = np.asarray(h, dtype=complex)
    nrm = np.linalg.norm(h)
    if nrm == 0:
        raise InvalidInput("channel must be non-zero")
    w = np.sqrt(p_s) * h / nrm
    return w, float(np.log2(1.0 + p_s * nrm**2 / sigma2))


def phase_grid(n, resolution_deg):
    """All ``n``-tuples of unit phasors on a uniform grid (first axis slowest)."""
    steps = 360.0 / resolution_deg
    if abs(steps - round(steps)) > 1e-9:
        raise InvalidInput("resolution must divide 360 degrees")
    phis = np.exp(1j * np.deg2rad(resolution_deg) * np.arange(int(round(steps))))
    return np.array(list(itertools.product(phis, repeat=n)), dtype=complex)


def _compose_many(direct, reflected, Q, thetas):
    # direct + Q^H (conj(theta) * reflected) for each row of thetas
    return direct[None, :] + (np.conj(thetas) * reflected[None, :]) @ np.conj(Q)


def _rates(eff_h, w, V, sigma2):
    sig = np.abs(np.einsum("bi,bi->b", np.conj(eff_h), w)) ** 2
    an = np.real(np.einsum("bi,bij,bj->b", np.conj(eff_h), V, eff_h))
    return np.log2(1.0 + sig / (an + sigma2))


def grid_search_phases(scenario, channels, tau, resolution_deg=1.0, chunk=GRID_CHUNK):
    """Exhaustive search over a phase grid with the transmit step solved exactly.

    Returns ``(theta, r_sec)``; ``(None, -inf)`` if every grid point is
    infeasible.
    """
    n = channels.n_ris
    if n > MAX_GRID_ELEMENTS:
        raise InvalidInput(f"grid search refused for {n} > {MAX_GRID_ELEMENTS} elements")
    grid = phase_grid(n, resolution_deg)
    s = scenario
    cs = channels
    gamma = tau_to_gamma(tau)
    beta = requirements(s)
    best_theta, best_val = None, -np.inf
    for start in range(0, len(grid), chunk):
        th = grid[start:start + chunk]
        h = _compose_many(cs.h_d, cs.h_r, cs.Q, th)
        g = np.stack([_compose_many(d, r, cs.Q, th) for d, r in zip(cs.g_d, cs.g_r)], axis=1) \
            if s.n_er else np.zeros((len(th), 0, cs.n_tx), dtype=complex)
        he = np.stack([_compose_many(d, r, cs.Q, th) for d, r in zip(cs.h_deve, cs.h_reve)], axis=1) \
            if s.n_eve else np.zeros((len(th), 0, cs.n_tx), dtype=complex)
        res = solve_bs_stacked(h, g, he, s.p_max, beta, gamma, s.noise_ir, s.noise_er, s.noise_eve)
        r_ir = np.log2(1.0 + np.abs(np.einsum("bi,bi->b", np.conj(h), res.w)) ** 2 / s.noise_ir)
        worst = np.zeros(len(th))
        for i in range(s.n_er):
            worst = np.maximum(worst, _rates(g[:, i], res.w, res.V, s.noise_er[i]))
        for k in range(s.n_eve):
            worst = np.maximum(worst, _rates(he[:, k], res.w, res.V, s.noise_eve[k]))
        val = np.where(res.ok, np.maximum(0.0, r_ir - worst), -np.inf)
        j = int(np.argmax(val))
        if val[j] > best_val:
            best_theta, best_val = th[j], float(val[j])
    return best_theta, best_val


def _solve_fixed(scenario, channels, theta, tau, note):
    gamma = tau_to_gamma(tau)
    inp = BsSubproblemInput.from_channels(effective_channels(channels, theta), scenario,
                                          requirements(scenario), gamma)
    bs = solve_bs_batch([inp])[0]
    return package(scenario, channels, bs, theta, tau, note)


def baseline_no_irs(scenario, channels, tau):
    """Transmit design with every reflected link removed."""
    theta = np.ones(channels.n_ris, dtype=complex)
    sol = _solve_fixed(scenario, channels.without_reflection(), theta, tau, "no_irs")
    return sol


def baseline_random_phase(scenario, channels, tau, seed=0):
    """Transmit design for one uniformly random phase draw."""
    theta = random_phases(seed, channels.n_ris, index=10_000)
    return _solve_fixed(scenario, channels, theta, tau, "random_phase")


__all__ = [
    "BeamformingSolution",
    "baseline_no_irs",
    "baseline_random_phase",
    "grid_search_phases",
    "mrt_closed_form",
    "phase_grid",
]
