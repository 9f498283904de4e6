from dataclasses import replace

import numpy as np
import pytest

from irs_swipt.ao_driver import AoConfig, run_ao, sweep_tau, tau_to_gamma
from irs_swipt.channel import default_scenario, draw_channels
from irs_swipt.numerics import InvalidInput
from irs_swipt.oracle import mrt_closed_form
from irs_swipt.secrecy import check_feasibility


def test_tau_to_gamma():
    assert tau_to_gamma(0) == 0
    assert tau_to_gamma(1) == 1
    assert tau_to_gamma(3) == 7
    with pytest.raises(InvalidInput):
        tau_to_gamma(-0.1)


def test_config_validation():
    for bad in (dict(tau=-1), dict(rate_tol=0), dict(restarts=0), dict(theta_init="zeros"),
                dict(max_outer_iters=0), dict(irs_init="x")):
        with pytest.raises(InvalidInput):
            AoConfig(**bad)


def test_irrelevant_irs_gives_mrt_in_one_iteration():
    s = default_scenario(seed=0, n_er=0, n_eve=0)
    cs = draw_channels(s)
    cs = replace(cs, h_r=np.zeros_like(cs.h_r))
    sol, trace = run_ao(s, cs)
    assert sol.ok and trace.outer_iters == 1 and trace.converged
    _, rate = mrt_closed_form(cs.h_d, s.p_max, s.noise_ir)
    assert sol.r_ir == pytest.approx(rate, rel=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_default_scenario_run(seed):
    s = default_scenario(seed=seed)
    cs = draw_channels(s)
    cfg = AoConfig()
    sol, trace = run_ao(s, cs, cfg)
    assert sol.ok and trace.converged
    assert trace.outer_iters <= 15
    r = np.array(trace.r_ir)
    assert np.all(np.diff(r) >= -1e-6 * (1 + r[:-1]))
    ok, viol = check_feasibility(sol, s, cs, tau_to_gamma(cfg.tau))
    assert ok, viol
    assert sol.r_sec >= sol.r_ir - cfg.tau - 1e-5
    assert np.allclose(np.abs(sol.theta), 1, atol=1e-12)
    assert len(trace.steps) <= cfg.max_outer_iters + 1


def test_deterministic():
    s = default_scenario(seed=5)
    cs = draw_channels(s)
    cfg = AoConfig(restarts=2, seed=3)
    a, ta = run_ao(s, cs, cfg)
    b, tb = run_ao(s, cs, cfg)
    assert np.array_equal(a.theta, b.theta) and np.array_equal(a.w, b.w)
    assert ta.r_ir == tb.r_ir


def test_restarts_never_hurt():
    s = default_scenario(seed=7, n_tx=4, n_ris=4, n_er=1, n_eve=1, p_max_dbm=40)
    cs = draw_channels(s)
    one, _ = run_ao(s, cs, AoConfig(restarts=1))
    three, _ = run_ao(s, cs, AoConfig(restarts=3))
    assert three.r_sec >= one.r_sec - 1e-12


def test_provided_theta_init():
    s = default_scenario(seed=1, n_ris=4, n_tx=4, p_max_dbm=40)
    cs = draw_channels(s)
    sol, trace = run_ao(s, cs, AoConfig(theta_init=np.exp(1j * np.arange(4))))
    assert sol.ok
    with pytest.raises(InvalidInput):
        run_ao(s, cs, AoConfig(theta_init=np.ones(3)))


def test_infeasible_scenario_reports_family():
    s = default_scenario(seed=0, mu_w=5e-3, p_max_dbm=10)
    sol, trace = run_ao(s, draw_channels(s))
    assert not sol.ok and sol.status == "eh-infeasible"
    assert "eh-infeasible" in trace.stop_reason


def test_sweep_tau_properties():
    s = default_scenario(seed=2, n_tx=4, n_ris=4, n_er=1, n_eve=1, p_max_dbm=40)
    cs = draw_channels(s)
    single, _ = run_ao(s, cs, AoConfig(tau=1.0))
    tau, sol = sweep_tau(s, cs, [1.0])
    assert tau == 1.0 and sol.r_sec == single.r_sec
    grid = [0.5, 1.0, 2.0]
    tau, best = sweep_tau(s, cs, grid)
    for t in grid:
        assert best.r_sec >= run_ao(s, cs, AoConfig(tau=t))[0].r_sec
    _, fine = sweep_tau(s, cs, [0.5, 0.75, 1.0, 1.5, 2.0])
    assert fine.r_sec >= best.r_sec - 1e-9
    with pytest.raises(InvalidInput):
        sweep_tau(s, cs, [])


def test_sweep_tau_all_infeasible():
    s = default_scenario(seed=0, mu_w=5e-3, p_max_dbm=10)
    tau, sol = sweep_tau(s, draw_channels(s), [1.0, 2.0])
    assert tau is None and not sol.ok
