"""
Invariant checks shared by the ``selftest`` command and the acceptance suite.

Each checker returns ``(ok, detail, worst)`` where ``worst`` is the largest
observed error in the checker's own metric.
"""

import numpy as np

from . import sdp
from .ao_driver import requirements, tau_to_gamma
from .bs_beamforming import BsSubproblemInput, solve_bs
from .channel import default_scenario, draw_channels, effective_channels, random_phases
from .eh_model import EhParams, harvested_power, required_input_power
from .irs_beamforming import build_lifted, lift_phases, lifted_values
from .numerics import hermitian_eig, outer


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def check_eh_round_trip(n=100, tol=1e-9, params=EhParams()):
    """Relative error of harvested_power(required_input_power(mu)) on [0, 0.99 M]."""
    mus = np.linspace(0.0, 0.99 * params.m_sat, n)
    worst = 0.0
    for mu in mus:
        back = harvested_power(required_input_power(mu, params), params)
        err = abs(back - mu) / mu if mu > 0 else abs(back)
        worst = max(worst, err)
    return worst <= tol, f"max relative error {worst:.2e} over {n} points", worst


def lifted_vs_direct(rng, seed):
    """Largest relative mismatch between lifted and direct forms for one random tuple."""
    n_er, n_eve = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    s = default_scenario(seed=seed, n_tx=int(rng.integers(2, 9)), n_ris=int(rng.integers(1, 13)),
                         n_er=n_er, n_eve=n_eve)
    cs = draw_channels(s)
    theta = np.exp(2j * np.pi * rng.random(s.n_ris))
    w = _cn(rng, s.n_tx) * np.sqrt(s.p_max / (2 * s.n_tx))
    G = _cn(rng, s.n_tx, s.n_tx)
    V = G @ G.conj().T * (s.p_max / (4 * s.n_tx ** 2))
    gamma = tau_to_gamma(float(rng.uniform(0.1, 3.0)))
    beta = requirements(s)
    ld = build_lifted(cs, w, V, gamma, beta, s.noise_ir, s.noise_er, s.noise_eve)
    ir, vals = lifted_values(ld, lift_phases(theta))
    eff = effective_channels(cs, theta)
    sig = lambda g: abs(np.vdot(g, w)) ** 2
    an = lambda g: float(np.real(np.vdot(g, V @ g)))
    errs = [abs(ir - sig(eff.h)) / sig(eff.h)]
    for i, g in enumerate(eff.g):
        errs.append(abs(vals[f"eh[{i}]"] - (sig(g) + an(g))) / (sig(g) + an(g)))
        ref = sig(g) - gamma * an(g)
        errs.append(abs(vals[f"leak_er[{i}]"] - ref) / (sig(g) + gamma * an(g)))
    for k, g in enumerate(eff.h_eve):
        ref = sig(g) - gamma * an(g)
        errs.append(abs(vals[f"leak_eve[{k}]"] - ref) / (sig(g) + gamma * an(g)))
    return max(errs)


def check_lifted_identity(n=100, tol=1e-6, seed=0):
    rng = np.random.default_rng(seed)
    worst = max(lifted_vs_direct(rng, seed * 1000 + j) for j in range(n))
    return worst <= tol, f"max relative mismatch {worst:.2e} over {n} tuples", worst


def check_penalty_surrogate(n=100, tol=1e-9, seed=0):
    """``Tr U - r^H U r >= Tr U - lambda_max`` with equality at the top eigenvector."""
    rng = np.random.default_rng(seed)
    worst_ineq, worst_eq = 0.0, 0.0
    for _ in range(n):
        d = int(rng.integers(2, 12))
        G = _cn(rng, d, int(rng.integers(1, d + 1)))
        U = G @ G.conj().T
        lam, vec = hermitian_eig(U)
        tr = float(np.real(np.trace(U)))
        true_gap = tr - lam[0]
        r = _cn(rng, d)
        r /= np.linalg.norm(r)
        sur = tr - float(np.real(np.vdot(r, U @ r)))
        scale = max(1.0, tr)
        worst_ineq = max(worst_ineq, (true_gap - sur) / scale)
        top = vec[:, 0] * np.exp(1j * rng.uniform(0, 2 * np.pi))
        sur_top = tr - float(np.real(np.vdot(top, U @ top)))
        worst_eq = max(worst_eq, abs(sur_top - true_gap) / scale)
    ok = worst_ineq <= tol and worst_eq <= tol
    return ok, f"max violation {max(worst_ineq, 0):.2e}, equality error {worst_eq:.2e}", max(worst_ineq, worst_eq)


def check_jacobi(n=20, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(1, 20))
        A = _cn(rng, d, d)
        A = A + A.conj().T
        lam, vec = hermitian_eig(A)
        worst = max(worst, np.linalg.norm(vec @ np.diag(lam) @ vec.conj().T - A) / max(1.0, np.linalg.norm(A)))
    return worst <= 1e-12, f"max reconstruction error {worst:.2e}", worst


def check_sdp_certificates(n=20, seed=0):
    """Random feasible SDPs: every accepted solution meets the certificate thresholds."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bad = 0
    for _ in range(n):
        d = int(rng.integers(2, 7))
        m = int(rng.integers(1, 5))
        X0 = outer(_cn(rng, d)) + np.eye(d)
        cons = []
        for i in range(m):
            A = _cn(rng, d, d)
            A = A + A.conj().T
            cons.append(sdp.Constraint({0: A}, "eq", float(np.real(np.sum(A * np.conj(X0)))), f"c{i}"))
        cons.append(sdp.Constraint({0: np.eye(d)}, "le", float(np.real(np.trace(X0))) + 1.0, "trace"))
        C = _cn(rng, d, d)
        C = C + C.conj().T
        sol = sdp.solve(sdp.ConicProblem([sdp.Psd(d)], {0: C}, cons))
        if sol.status != sdp.OPTIMAL:
            bad += 1
            continue
        gap_ok = sol.duality_gap <= 1e-7 * (1 + abs(sol.objective_value))
        bad += not (gap_ok and sol.max_kkt_residual <= 1e-6)
        worst = max(worst, sol.max_kkt_residual)
    return bad == 0, f"{n - bad}/{n} certified, max KKT residual {worst:.2e}", worst


def check_tightness(n=5, seed=0):
    worst = 0.0
    solved = 0
    for j in range(n):
        s = default_scenario(seed=seed + j)
        cs = draw_channels(s)
        eff = effective_channels(cs, random_phases(seed + j, s.n_ris))
        bs = solve_bs(BsSubproblemInput.from_channels(eff, s, requirements(s), 1.0))
        if bs.ok:
            solved += 1
            worst = max(worst, bs.tightness_ratio)
    return solved > 0 and worst <= 1e-4, f"{solved}/{n} solved, max l2/l1 {worst:.2e}", worst


def run_all(seed=0):
    checks = [
        ("eh_round_trip", lambda: check_eh_round_trip()),
        ("jacobi_eigensolver", lambda: check_jacobi(seed=seed)),
        ("lifted_identity", lambda: check_lifted_identity(20, seed=seed)),
        ("penalty_surrogate", lambda: check_penalty_surrogate(seed=seed)),
        ("sdp_certificates", lambda: check_sdp_certificates(seed=seed)),
        ("relaxation_tightness", lambda: check_tightness(seed=seed)),
    ]
    out = []
    for name, fn in checks:
        ok, detail, _ = fn()
        out.append((name, bool(ok), detail))
    return out
