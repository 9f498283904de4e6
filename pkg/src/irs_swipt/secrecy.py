"""Rates, received powers and constraint checks for a candidate (w, V, theta)."""

from dataclasses import dataclass, field

import numpy as np

from .channel import effective_channels
from .eh_model import harvested_power, required_input_power

FEAS_TOL = 1e-6


def _quad(g, V):
    return float(np.real(np.vdot(g, V @ g)))


def rate_ir(h, w, sigma2):
    """log2(1 + |h^H w|^2 / sigma2); artificial noise is cancelled at the IR."""
    return float(np.log2(1.0 + abs(np.vdot(h, w)) ** 2 / sigma2))


def rate_eavesdropper(g, w, V, sigma2):
    return float(np.log2(1.0 + abs(np.vdot(g, w)) ** 2 / (_quad(g, V) + sigma2)))


def received_power(g, w, V):
    return abs(np.vdot(g, w)) ** 2 + _quad(g, V)


def secrecy_rate(r_ir, r_er=(), r_eve=()):
    """[R_ir - worst eavesdropper rate]^+ over ERs and Eves."""
    worst = max(list(r_er) + list(r_eve), default=0.0)
    return max(0.0, r_ir - worst)


@dataclass
class RateReport:
    r_ir: float
    r_er: list
    r_eve: list
    r_sec: float
    p_eh: list
    phi_eh: list
    feasible: bool = True
    violations: list = field(default_factory=list)


def evaluate(scenario, channels, w, V, theta):
    """All rate and power figures of a candidate solution."""
    eff = effective_channels(channels, theta)
    s = scenario
    r_ir = rate_ir(eff.h, w, s.noise_ir)
    r_er = [rate_eavesdropper(g, w, V, n) for g, n in zip(eff.g, s.noise_er)]
    r_eve = [rate_eavesdropper(g, w, V, n) for g, n in zip(eff.h_eve, s.noise_eve)]
    p_eh = [received_power(g, w, V) for g in eff.g]
    phi = [harvested_power(p, e) for p, e in zip(p_eh, s.eh)]
    return RateReport(r_ir, r_er, r_eve, secrecy_rate(r_ir, r_er, r_eve), p_eh, phi)


def check_feasibility(solution, scenario, channels, gamma, tol=FEAS_TOL):
    """Evaluate every constraint of the fixed-tau problem at ``solution``.

    ``solution`` needs attributes ``w``, ``V`` and ``theta``. Returns
    ``(feasible, violations)`` where each violation is
    ``(name, relative magnitude)``.
    """
    s = scenario
    w, V, theta = solution.w, solution.V, solution.theta
    out = []
    power = float(np.real(np.vdot(w, w)) + np.real(np.trace(V)))
    if power > s.p_max * (1 + tol):
        out.append(("power", power / s.p_max - 1.0))
    mod = float(np.max(np.abs(np.abs(theta) - 1.0))) if len(theta) else 0.0
    if mod > tol:
        out.append(("unit_modulus", mod))
    if np.linalg.eigvalsh(0.5 * (V + V.conj().T))[0] < -tol * max(1.0, np.linalg.norm(V)):
        out.append(("an_psd", float(-np.linalg.eigvalsh(V)[0])))
    eff = effective_channels(channels, theta)
    for i, (g, n, mu, eh) in enumerate(zip(eff.g, s.noise_er, s.mu, s.eh)):
        if mu > 0:
            beta = required_input_power(mu, eh)
            p = received_power(g, w, V)
            if p < beta * (1 - tol):
                out.append((f"eh[{i}]", 1.0 - p / beta))
        sig = abs(np.vdot(g, w)) ** 2
        cap = gamma * (_quad(g, V) + n)
        if sig > cap + tol * max(cap, n):
            out.append((f"leak_er[{i}]", (sig - cap) / max(cap, n)))
    for k, (g, n) in enumerate(zip(eff.h_eve, s.noise_eve)):
        sig = abs(np.vdot(g, w)) ** 2
        cap = gamma * (_quad(g, V) + n)
        if sig > cap + tol * max(cap, n):
            out.append((f"leak_eve[{k}]", (sig - cap) / max(cap, n)))
    return not out, out
