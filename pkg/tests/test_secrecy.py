from types import SimpleNamespace

import numpy as np
import pytest

from irs_swipt.channel import default_scenario, draw_channels, effective_channels
from irs_swipt.numerics import outer
from irs_swipt.oracle import mrt_closed_form
from irs_swipt.secrecy import (
    check_feasibility,
    evaluate,
    rate_eavesdropper,
    rate_ir,
    received_power,
    secrecy_rate,
)

from conftest import cn


def test_rate_ir_examples(rng):
    h = cn(rng, 4)
    assert rate_ir(h, np.zeros(4), 1.0) == 0.0
    w = h / np.linalg.norm(h) ** 2 * np.sqrt(2.5)  # |h^H w|^2 = 2.5
    assert rate_ir(h, w, 2.5) == pytest.approx(1.0)
    for _ in range(10):
        h, w, s2 = cn(rng, 3), cn(rng, 3), rng.uniform(0.1, 5)
        ref = np.log2(1 + abs(np.sum(np.conj(h) * w)) ** 2 / s2)
        assert rate_ir(h, w, s2) == pytest.approx(ref, rel=1e-12)


def test_eavesdropper_rate(rng):
    g, w = cn(rng, 3), cn(rng, 3)
    assert rate_eavesdropper(g, w, np.zeros((3, 3)), 0.7) == pytest.approx(rate_ir(g, w, 0.7))
    flood = 1e12 * outer(g) / np.linalg.norm(g) ** 2
    assert 0 < rate_eavesdropper(g, w, flood, 0.7) < 1e-9
    G = cn(rng, 3, 3)
    V = G @ G.conj().T
    trace_form = np.log2(1 + np.trace(outer(g) @ outer(w)).real / (np.trace(outer(g) @ V).real + 0.7))
    assert rate_eavesdropper(g, w, V, 0.7) == pytest.approx(trace_form, rel=1e-10)
    # more AN along g never helps the eavesdropper
    assert rate_eavesdropper(g, w, V + outer(g), 0.7) < rate_eavesdropper(g, w, V, 0.7)


def test_secrecy_rate_examples(rng):
    assert secrecy_rate(1.0, [2.0], []) == 0.0
    assert secrecy_rate(3.0) == 3.0
    r_er, r_eve = list(rng.uniform(0, 2, 3)), list(rng.uniform(0, 2, 2))
    brute = 4.0
    for r in r_er + r_eve:
        brute = min(brute, 4.0 - r)
    assert secrecy_rate(4.0, r_er, r_eve) == pytest.approx(max(0.0, brute))


def test_received_power(rng):
    g, w = cn(rng, 4), cn(rng, 4)
    Z = np.zeros((4, 4))
    assert received_power(g, np.zeros(4), Z) == 0.0
    assert received_power(g, w, Z) == pytest.approx(abs(np.vdot(g, w)) ** 2)
    G = cn(rng, 4, 2)
    V = G @ G.conj().T
    assert received_power(g, w, V) == pytest.approx(np.trace(outer(g) @ (outer(w) + V)).real, rel=1e-10)


def test_scale_law_and_an_invariance(rng):
    h, w = cn(rng, 3), cn(rng, 3)
    assert rate_ir(h, 1.5 * w, 1.0) > rate_ir(h, w, 1.0)
    s = default_scenario(seed=0, n_tx=3, n_ris=2)
    cs = draw_channels(s)
    th = np.ones(2)
    G = cn(rng, 3, 3)
    a = evaluate(s, cs, w, np.zeros((3, 3)), th)
    b = evaluate(s, cs, w, G @ G.conj().T, th)
    assert a.r_ir == b.r_ir


def test_report_is_consistent(rng):
    s = default_scenario(seed=3, n_er=3, n_eve=2)
    cs = draw_channels(s)
    w = cn(rng, s.n_tx) * 0.1
    rep = evaluate(s, cs, w, 1e-3 * np.eye(s.n_tx), np.exp(1j * rng.uniform(0, 6, s.n_ris)))
    assert rep.r_sec == pytest.approx(max(0.0, rep.r_ir - max(rep.r_er + rep.r_eve)))
    assert all(r >= 0 for r in [rep.r_ir] + rep.r_er + rep.r_eve)
    assert len(rep.r_er) == 3 and len(rep.r_eve) == 2


def test_mrt_feasible_without_receivers():
    s = default_scenario(seed=1, n_er=0, n_eve=0)
    cs = draw_channels(s)
    th = np.ones(s.n_ris)
    w, _ = mrt_closed_form(effective_channels(cs, th).h, s.p_max, s.noise_ir)
    sol = SimpleNamespace(w=w, V=np.zeros((s.n_tx, s.n_tx)), theta=th)
    ok, viol = check_feasibility(sol, s, cs, 1.0)
    assert ok and viol == []
    sol.w = w * np.sqrt(1.01)
    ok, viol = check_feasibility(sol, s, cs, 1.0)
    assert not ok and viol[0][0] == "power" and viol[0][1] == pytest.approx(0.01)


def test_leakage_violation_flagged(rng):
    s = default_scenario(seed=2, n_er=1, n_eve=1, mu_w=0.0)
    cs = draw_channels(s)
    th = np.ones(s.n_ris)
    e = effective_channels(cs, th).h_eve[0]
    w = np.sqrt(s.p_max) * e / np.linalg.norm(e)  # beam straight at the Eve
    sol = SimpleNamespace(w=w, V=np.zeros((s.n_tx, s.n_tx)), theta=th)
    ok, viol = check_feasibility(sol, s, cs, 1.0)
    assert not ok and "leak_eve[0]" in dict(viol)
