"""
Reflective beamforming for fixed transmit beamformer and AN covariance.

With ``u = conj(theta)`` and ``u_bar = [u; 1]`` every quadratic form of an
effective channel becomes ``u_bar^H A u_bar + const`` with an
``(N_r + 1)``-square Hermitian ``A`` whose bottom-right entry is zero. Lifting
to ``U = u_bar u_bar^H`` gives linear constraints; the rank-one requirement is
handled by the penalty ``eta (Tr U - lambda_max(U))``, linearised at the
current top eigenvector (SCA).

The log-rate objective is kept exact by scalarising over
``s = <A1, U>``: for each ``s`` the remaining problem is a linear SDP whose
optimal value ``g(s)`` is convex in ``s``, so
``F(s) = -log2(1 + (s + c)/sigma2) + g(s)`` is convex and a bracketing
search on ``s`` finds its minimum.
"""

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .numerics import InvalidInput, max_eigpair, outer

DEFAULT_ETA = 10.0
DEFAULT_EPS = 1e-6
DEFAULT_T_MAX = 50
ETA_GROWTH = 5.0
ETA_CAP = 1e4


class DegenerateExtraction(InvalidInput):
    """The lifted matrix has (almost) no weight on its last coordinate."""


def lift(R, d, X):
    """Block matrix ``[[R X R^H, R X d], [d^H X R^H, 0]]`` and ``d^H X d``."""
    n = R.shape[0]
    A = np.zeros((n + 1, n + 1), dtype=complex)
    RX = R @ X
    A[:n, :n] = RX @ R.conj().T
    A[:n, n] = RX @ d
    A[n, :n] = A[:n, n].conj()
    A = 0.5 * (A + A.conj().T)
    return A, float(np.real(np.vdot(d, X @ d)))


@dataclass
class LiftedData:
    A1: np.ndarray
    c1: float                  # a2^H W a2 = Tr(C W)
    A2: list                   # Eve, information part
    c2: list
    A3: list                   # Eve, AN part
    c3: list
    A4: list                   # ER, information part
    c4: list
    A5: list                   # ER, AN part
    c5: list
    B: list
    C: np.ndarray
    D: list
    Z: np.ndarray
    gamma: float
    beta: tuple
    noise_ir: float
    noise_er: tuple
    noise_eve: tuple

    @property
    def dim(self):
        return self.A1.shape[0]

    @property
    def n_ris(self):
        return self.dim - 1


def build_lifted(cs, w, V, gamma, beta, noise_ir, noise_er, noise_eve):
    """Lifted matrices for the reflective-beamforming subproblem."""
    W = outer(w)
    Q = cs.Q
    a1 = np.conj(cs.h_r)[:, None] * Q
    A1, c1 = lift(a1, cs.h_d, W)
    A2, c2, A3, c3, D = [], [], [], [], []
    for hd, hr in zip(cs.h_deve, cs.h_reve):
        dr = np.conj(hr)[:, None] * Q
        a, c = lift(dr, hd, W)
        A2.append(a)
        c2.append(c)
        a, c = lift(dr, hd, V)
        A3.append(a)
        c3.append(c)
        D.append(outer(hd))
    A4, c4, A5, c5, B = [], [], [], [], []
    for gd, gr in zip(cs.g_d, cs.g_r):
        br = np.conj(gr)[:, None] * Q
        a, c = lift(br, gd, W)
        A4.append(a)
        c4.append(c)
        a, c = lift(br, gd, V)
        A5.append(a)
        c5.append(c)
        B.append(outer(gd))
    return LiftedData(
        A1, c1, A2, c2, A3, c3, A4, c4, A5, c5, B, outer(cs.h_d), D,
        W - gamma * V, gamma, tuple(beta), noise_ir, tuple(noise_er), tuple(noise_eve),
    )


def lifted_values(ld, U):
    """Physical quadratic forms at lifted point ``U``.

    Returns ``(|h^H w|^2, {name: value})`` where the dict holds received
    power and leakage left-hand sides per ER and leakage per Eve.
    """
    ip = lambda A: float(np.real(np.sum(A * np.conj(U))))
    vals = {}
    for i in range(len(ld.A4)):
        vals[f"eh[{i}]"] = ip(ld.A4[i] + ld.A5[i]) + ld.c4[i] + ld.c5[i]
        vals[f"leak_er[{i}]"] = ip(ld.A4[i] - ld.gamma * ld.A5[i]) + ld.c4[i] - ld.gamma * ld.c5[i]
    for k in range(len(ld.A2)):
        vals[f"leak_eve[{k}]"] = ip(ld.A2[k] - ld.gamma * ld.A3[k]) + ld.c2[k] - ld.gamma * ld.c3[k]
    return ip(ld.A1) + ld.c1, vals


def _constraints(ld, s_target=None):
    n = ld.dim
    cons = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cons.append(sdp.Constraint({0: np.diag(e)}, "eq", 1.0, f"diag[{j}]"))
    for i in range(len(ld.A4)):
        b = ld.beta[i]
        if b > 0:
            cons.append(sdp.Constraint(
                {0: (ld.A4[i] + ld.A5[i]) / b}, "ge", 1.0 - (ld.c4[i] + ld.c5[i]) / b, f"eh[{i}]"))
    for i in range(len(ld.A4)):
        n2 = ld.noise_er[i]
        cons.append(sdp.Constraint(
            {0: (ld.A4[i] - ld.gamma * ld.A5[i]) / n2}, "le",
            ld.gamma - (ld.c4[i] - ld.gamma * ld.c5[i]) / n2, f"leak_er[{i}]"))
    for k in range(len(ld.A2)):
        n2 = ld.noise_eve[k]
        cons.append(sdp.Constraint(
            {0: (ld.A2[k] - ld.gamma * ld.A3[k]) / n2}, "le",
            ld.gamma - (ld.c2[k] - ld.gamma * ld.c3[k]) / n2, f"leak_eve[{k}]"))
    if s_target is not None:
        cons.append(sdp.Constraint({0: ld.A1 / ld.noise_ir}, "eq", s_target / ld.noise_ir, "rate"))
    return cons


def _unit(u_ref):
    u = np.asarray(u_ref, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise InvalidInput("reference vector must be non-zero")
    return u / nrm


def penalty_cost(ld, u_ref, eta):
    """Linear objective matrix ``eta (I - u u^H)`` with ``u`` normalised."""
    u = _unit(u_ref)
    return eta * (np.eye(ld.dim) - outer(u))


def inner_problem(ld, u_ref, eta, s_target):
    return sdp.ConicProblem([sdp.Psd(ld.dim)], {0: penalty_cost(ld, u_ref, eta)}, _constraints(ld, s_target))


def inner_sdp(ld, u_ref, eta, s_target, options=None):
    """min eta (Tr U - u^H U u) s.t. <A1, U> = s_target and the lifted constraints."""
    return sdp.solve(inner_problem(ld, u_ref, eta, s_target), options)


def rate_bracket(ld, options=None):
    """Range of ``<A1, U>`` over the relaxed feasible set.

    Returns ``((s_lo, U_lo), (s_hi, U_hi))`` or ``None`` when infeasible.
    """
    cons = _constraints(ld)
    A = ld.A1 / ld.noise_ir
    probs = [
        sdp.ConicProblem([sdp.Psd(ld.dim)], {0: A}, cons),
        sdp.ConicProblem([sdp.Psd(ld.dim)], {0: -A}, cons),
    ]
    lo, hi = sdp.solve_batch(probs, options)
    if lo.status != sdp.OPTIMAL or hi.status != sdp.OPTIMAL:
        return None
    s = lambda U: float(np.real(np.sum(ld.A1 * np.conj(U))))
    return (s(lo.primal[0]), lo.primal[0]), (s(hi.primal[0]), hi.primal[0])


def section_search(fun, lo, hi, n_points=5, max_rounds=6, xtol=1e-3, seeds=()):
    """Minimise a convex scalar function using batched evaluations.

    ``fun`` maps an array of abscissae to ``(values, payloads)``. Each round
    evaluates ``n_points`` new interior points of the current bracket, which
    then shrinks to the neighbours of the best sample. ``seeds`` are
    pre-evaluated ``(x, value, payload)`` triples (e.g. the endpoints).

    Returns ``(x_best, f_best, payload_best, samples)``.
    """
    samples = list(seeds)
    a, b = float(lo), float(hi)
    width0 = max(b - a, 0.0)
    for _ in range(max_rounds):
        if b - a <= xtol * width0 or b <= a:
            break
        xs = np.linspace(a, b, n_points + 2)[1:-1]
        vals, payloads = fun(xs)
        samples.extend(zip(xs, vals, payloads))
        samples.sort(key=lambda t: t[0])
        j = int(np.argmin([t[1] for t in samples]))
        a = samples[j - 1][0] if j > 0 else samples[j][0]
        b = samples[j + 1][0] if j + 1 < len(samples) else samples[j][0]
    if not samples:
        vals, payloads = fun(np.array([0.5 * (lo + hi)]))
        samples = [(0.5 * (lo + hi), vals[0], payloads[0])]
    best = min(samples, key=lambda t: t[1])
    return best[0], best[1], best[2], samples


def log_term(ld, s):
    return -np.log2(1.0 + (np.asarray(s) + ld.c1) / ld.noise_ir)


def penalty_value(U, u_ref, eta):
    u = _unit(u_ref)
    return float(eta * (np.real(np.trace(U)) - np.real(np.vdot(u, U @ u))))


def scalarized_log_step(ld, u_ref, eta, incumbent=None, bracket=None, options=None,
                        n_points=5, max_rounds=6, xtol=1e-3):
    """One SCA step: minimise the penalised IRS objective around ``u_ref``.

    Returns ``(U_next, objective, s_next)``; ``None`` if the feasible set is
    empty. ``incumbent`` (a feasible lifted matrix) is always a candidate,
    which makes the step a descent step.
    """
    if bracket is None:
        bracket = rate_bracket(ld, options)
        if bracket is None:
            return None
    (s_lo, U_lo), (s_hi, U_hi) = bracket
    F = lambda s, U: float(log_term(ld, s)) + penalty_value(U, u_ref, eta)
    seeds = [(s_lo, F(s_lo, U_lo), U_lo), (s_hi, F(s_hi, U_hi), U_hi)]
    if incumbent is not None:
        s_inc = float(np.real(np.sum(ld.A1 * np.conj(incumbent))))
        seeds.append((s_inc, F(s_inc, incumbent), incumbent))
    span = s_hi - s_lo
    if span <= 1e-12 * max(1.0, abs(s_hi)) or eta == 0:
        best = min(seeds, key=lambda t: t[1])
        return best[2], best[1], best[0]

    def evaluate(xs):
        probs = [inner_problem(ld, u_ref, eta, x) for x in xs]
        sols = sdp.solve_batch(probs, options)
        vals, pays = [], []
        for x, sol in zip(xs, sols):
            if sol.status == sdp.OPTIMAL:
                U = sol.primal[0]
                vals.append(F(x, U))
                pays.append(U)
            else:
                vals.append(np.inf)
                pays.append(None)
        return vals, pays

    s, f, U, _ = section_search(evaluate, s_lo, s_hi, n_points, max_rounds, xtol, seeds)
    return U, f, s


@dataclass
class IrsSolution:
    u: np.ndarray
    U: np.ndarray
    penalty_trace: list = field(default_factory=list)
    converged: bool = False
    eta: float = DEFAULT_ETA
    status: str = sdp.OPTIMAL

    @property
    def theta(self):
        return np.conj(self.u)


def _top(U):
    # LAPACK in the loop; final extraction goes through the Jacobi solver
    lam, vec = np.linalg.eigh(0.5 * (U + U.conj().T))
    return float(lam[-1]), vec[:, -1]


def penalty_gap(U):
    return float(np.real(np.trace(U)) - _top(U)[0])


def run_algorithm1(ld, U0, eta=DEFAULT_ETA, eps=DEFAULT_EPS, t_max=DEFAULT_T_MAX,
                   stall_ratio=None, options=None, bracket=None, **search):
    """Penalty-based SCA for the lifted phase matrix.

    Iterates ``U(t+1) = argmin J(U; u_max(t))`` until ``Tr U(t+1) - lambda_max``
    drops to ``eps`` or ``t_max`` iterations pass; at least one step is taken. With ``stall_ratio`` set,
    the loop also stops (non-converged) when the gap fails to shrink below
    ``stall_ratio`` times its previous value.

    The trace holds ``(t, gap, objective)`` where ``objective`` is the
    penalised objective (log term plus ``eta * gap``), which never increases.
    """
    U = np.array(U0, dtype=complex)
    if bracket is None:
        bracket = rate_bracket(ld, options)
    if bracket is None:
        return IrsSolution(u=None, U=U, converged=False, eta=eta, status=sdp.INFEASIBLE)
    s0 = float(np.real(np.sum(ld.A1 * np.conj(U))))
    gap = penalty_gap(U)
    trace = [(0, gap, float(log_term(ld, s0)) + eta * gap)]
    # at least one step, even from a rank-one start; the gap is tested on U(t+1)
    converged = False
    t = 0
    while not converged and t < t_max:
        t += 1
        _, u_ref = _top(U)
        U_next, _, s = scalarized_log_step(ld, u_ref, eta, incumbent=U, bracket=bracket,
                                           options=options, **search)
        new_gap = penalty_gap(U_next)
        trace.append((t, new_gap, float(log_term(ld, s)) + eta * new_gap))
        U = U_next
        converged = new_gap <= eps
        if stall_ratio is not None and not converged and t > 1 and new_gap > stall_ratio * gap:
            gap = new_gap
            break
        gap = new_gap
    return IrsSolution(u=None, U=U, penalty_trace=trace, converged=converged, eta=eta)


def extract_phases(U, tol=1e-4, force=False):
    """Unit-modulus phase vector ``u`` from a (near) rank-one lifted matrix.

    ``u = [u_bar / u_bar[-1]][:N]`` with ``u_bar`` the scaled top eigenvector,
    then each entry projected onto the unit circle.
    """
    lam, v = max_eigpair(U)
    tr = float(np.real(np.trace(U)))
    if not force and tr - lam > tol * tr:
        raise InvalidInput(f"lifted matrix is not rank-one (gap {tr - lam:.3e})")
    ub = np.sqrt(max(lam, 0.0)) * v
    if abs(ub[-1]) < 1e-6:
        raise DegenerateExtraction("last lifted coordinate vanishes")
    u = ub[:-1] / ub[-1]
    mag = np.abs(u)
    # an entry with no weight carries no phase information; any phase will do
    return np.where(mag > 1e-12, u / np.where(mag > 1e-12, mag, 1.0), 1.0)


def lift_phases(theta):
    """``u_bar u_bar^H`` for ``u = conj(theta)``."""
    return outer(np.append(np.conj(theta), 1.0))


def optimize_phases(ld, theta_init=None, eta=DEFAULT_ETA, eps=DEFAULT_EPS, t_max=DEFAULT_T_MAX,
                    init="relaxed", stall_ratio=0.9, options=None, **search):
    """Penalty loop with an escalating weight.

    ``init='relaxed'`` starts from the relaxed optimum (the maximiser of
    ``<A1, U>``); ``init='previous'`` from ``theta_init``. Whenever the gap
    stalls above ``eps`` the penalty factor grows by ``ETA_GROWTH`` (capped
    at ``ETA_CAP``) and the iteration resumes from the current point.
    """
    bracket = rate_bracket(ld, options)
    if bracket is None:
        return IrsSolution(u=None, U=None, status=sdp.INFEASIBLE, eta=eta)
    if init == "previous":
        if theta_init is None:
            raise InvalidInput("init='previous' needs theta_init")
        U = lift_phases(theta_init)
    else:
        U = bracket[1][1]
        gap = penalty_gap(U)
        if gap <= eps:
            # U maximises <A1, U> and has zero penalty at its own top
            # eigenvector, so the first penalised step returns it unchanged
            obj = float(log_term(ld, bracket[1][0])) + eta * gap
            return IrsSolution(u=extract_phases(U), U=U, penalty_trace=[(0, gap, obj), (1, gap, obj)],
                               converged=True, eta=eta)
    trace = []
    steps = 0
    while True:
        sol = run_algorithm1(ld, U, eta, eps, t_max - steps, stall_ratio, options,
                             bracket=bracket, **search)
        if sol.status != sdp.OPTIMAL:
            return sol
        base = trace[-1][0] if trace else 0
        trace.extend((base + t, g, o) for t, g, o in sol.penalty_trace[(1 if trace else 0):])
        steps += len(sol.penalty_trace) - 1
        U = sol.U
        if sol.converged or steps >= t_max or eta >= ETA_CAP:
            break
        eta = min(eta * ETA_GROWTH, ETA_CAP)
    try:
        u = extract_phases(U, force=not sol.converged)
    except DegenerateExtraction:
        return IrsSolution(u=None, U=U, penalty_trace=trace, converged=False, eta=eta,
                           status=sdp.NUMERICAL_FAILURE)
    return IrsSolution(u=u, U=U, penalty_trace=trace, converged=sol.converged, eta=eta)
