"""
Alternating optimisation of (w, V) and the IRS phases for a fixed leakage
budget ``tau``.

Each outer iteration runs the reflective step with (w, V) fixed and then the
transmit step with the new phases. A step is kept only if the IR rate does
not drop, so the accepted trace is non-decreasing by construction.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from . import irs_beamforming as irs
from . import sdp
from .bs_beamforming import BsSubproblemInput, solve_bs
from .channel import effective_channels, random_phases
from .eh_model import required_input_power
from .numerics import InvalidInput
from .secrecy import check_feasibility, evaluate

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-6


@dataclass
class AoConfig:
    tau: float = 1.0
    max_outer_iters: int = 30
    rate_tol: float = 1e-4
    theta_init: object = "all-ones"     # 'all-ones' | 'random' | array
    restarts: int = 1
    seed: int = 0
    eta: float = irs.DEFAULT_ETA
    eps: float = irs.DEFAULT_EPS
    irs_init: str = "relaxed"           # 'relaxed' | 'previous'

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidInput("tau must be non-negative")
        if self.rate_tol <= 0 or self.eps <= 0 or self.eta <= 0:
            raise InvalidInput("tolerances and eta must be positive")
        if self.max_outer_iters < 1 or self.restarts < 1:
            raise InvalidInput("max_outer_iters and restarts must be at least 1")
        if isinstance(self.theta_init, str) and self.theta_init not in ("all-ones", "random"):
            raise InvalidInput(f"unknown theta_init {self.theta_init!r}")
        if self.irs_init not in ("relaxed", "previous"):
            raise InvalidInput(f"unknown irs_init {self.irs_init!r}")


@dataclass
class AoStep:
    r_ir: float
    r_sec: float
    penalty_gap: float
    bs_status: str
    irs_status: str


@dataclass
class BeamformingSolution:
    status: str
    w: np.ndarray = None
    V: np.ndarray = None
    theta: np.ndarray = None
    tau: float = np.nan
    report: object = None
    note: str = ""

    @property
    def ok(self):
        return self.status == sdp.OPTIMAL

    @property
    def r_sec(self):
        return self.report.r_sec if self.report is not None else 0.0

    @property
    def r_ir(self):
        return self.report.r_ir if self.report is not None else 0.0


@dataclass
class AoTrace:
    steps: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    restart: int = 0

    @property
    def r_ir(self):
        return [s.r_ir for s in self.steps]

    @property
    def outer_iters(self):
        return max(len(self.steps) - 1, 0)


def tau_to_gamma(tau):
    if tau < 0:
        raise InvalidInput("tau must be non-negative")
    return 2.0 ** tau - 1.0


def requirements(scenario):
    return tuple(required_input_power(m, e) for m, e in zip(scenario.mu, scenario.eh))


def solve_transmit(scenario, channels, theta, gamma, beta=None):
    """Transmit step at fixed phases; returns the raw :class:`BsSolution`."""
    beta = requirements(scenario) if beta is None else beta
    eff = effective_channels(channels, theta)
    return solve_bs(BsSubproblemInput.from_channels(eff, scenario, beta, gamma))


def package(scenario, channels, bs, theta, tau, note=""):
    """Wrap a transmit-step result as a reportable solution."""
    if not bs.ok:
        return BeamformingSolution(status=bs.status, theta=theta, tau=tau, note=note)
    sol = BeamformingSolution(sdp.OPTIMAL, bs.w, bs.V, np.asarray(theta), tau, note=note)
    rep = evaluate(scenario, channels, bs.w, bs.V, theta)
    rep.feasible, rep.violations = check_feasibility(sol, scenario, channels, tau_to_gamma(tau))
    sol.report = rep
    return sol


def _initial_theta(config, n, restart):
    if restart == 0 and not isinstance(config.theta_init, str):
        th = np.asarray(config.theta_init, dtype=complex)
        if th.size != n:
            raise InvalidInput(f"theta_init has {th.size} entries, IRS has {n}")
        return th / np.abs(th)
    if restart == 0 and config.theta_init == "all-ones":
        return np.ones(n, dtype=complex)
    return random_phases(config.seed, n, restart)


def _single_run(scenario, channels, config, restart):
    gamma = tau_to_gamma(config.tau)
    beta = requirements(scenario)
    theta = _initial_theta(config, channels.n_ris, restart)
    trace = AoTrace(restart=restart)
    bs = solve_transmit(scenario, channels, theta, gamma, beta)
    if not bs.ok:
        trace.stop_reason = f"transmit step: {bs.status}"
        return package(scenario, channels, bs, theta, config.tau), trace
    best = package(scenario, channels, bs, theta, config.tau)
    trace.steps.append(AoStep(best.r_ir, best.r_sec, 0.0, bs.status, "-"))

    for _ in range(config.max_outer_iters):
        ld = irs.build_lifted(channels, bs.w, bs.V, gamma, beta, scenario.noise_ir,
                              scenario.noise_er, scenario.noise_eve)
        ph = irs.optimize_phases(ld, theta, eta=config.eta, eps=config.eps, init=config.irs_init)
        if ph.status != sdp.OPTIMAL:
            trace.stop_reason = f"reflective step: {ph.status}"
            break
        gap = ph.penalty_trace[-1][1] if ph.penalty_trace else np.nan
        theta_new = ph.theta
        bs_new = solve_transmit(scenario, channels, theta_new, gamma, beta)
        if not bs_new.ok:
            trace.stop_reason = f"transmit step: {bs_new.status}"
            break
        cand = package(scenario, channels, bs_new, theta_new, config.tau)
        old = best.r_ir
        if cand.r_ir < old - MONOTONE_SLACK * (1 + old):
            trace.stop_reason = "no ascent"
            trace.converged = True
            break
        if not cand.report.feasible:
            trace.stop_reason = "infeasible iterate"
            break
        if cand.r_ir < old:
            # numerically flat; keep the incumbent and stop
            trace.converged = True
            trace.stop_reason = "stationary"
            break
        best, bs, theta = cand, bs_new, theta_new
        trace.steps.append(AoStep(best.r_ir, best.r_sec, gap, bs.status, ph.status))
        if (best.r_ir - old) <= config.rate_tol * max(abs(old), 1e-12):
            trace.converged = True
            trace.stop_reason = "rate_tol"
            break
    else:
        trace.stop_reason = "max_outer_iters"
    return best, trace


def run_ao(scenario, channels, config=None):
    """Alternating optimisation; returns ``(solution, trace)`` of the best restart.

    Restart 0 starts from ``config.theta_init``; later restarts from random
    phases. The best restart is the one with the largest final ``r_sec``.
    """
    config = config or AoConfig()
    best, best_trace = None, None
    for r in range(config.restarts):
        sol, trace = _single_run(scenario, channels, config, r)
        log.debug("restart %d: status=%s r_sec=%.6g iters=%d (%s)", r, sol.status,
                  sol.r_sec, trace.outer_iters, trace.stop_reason)
        if best is None or (sol.ok and (not best.ok or sol.r_sec > best.r_sec)):
            best, best_trace = sol, trace
    return best, best_trace


def sweep_tau(scenario, channels, tau_grid, config=None):
    """Best ``(tau, solution)`` over a grid of leakage budgets."""
    tau_grid = list(tau_grid)
    if not tau_grid:
        raise InvalidInput("tau grid must be non-empty")
    config = config or AoConfig()
    best = None
    for tau in tau_grid:
        cfg = AoConfig(**{**config.__dict__, "tau": float(tau)})
        sol, _ = run_ao(scenario, channels, cfg)
        if not sol.ok:
            log.info("tau=%g skipped: %s", tau, sol.status)
            continue
        if best is None or sol.r_sec > best[1].r_sec:
            best = (float(tau), sol)
    if best is None:
        return None, BeamformingSolution(status=sdp.INFEASIBLE, note="every tau infeasible")
    return best
