from dataclasses import replace

import numpy as np
import pytest

from irs_swipt.channel import (
    ChannelSet,
    Scenario,
    check_unit_modulus,
    default_scenario,
    draw_channels,
    effective_channels,
    path_loss_gain,
    random_phases,
    stream,
)
from irs_swipt.numerics import InvalidInput


def test_path_loss_examples():
    assert path_loss_gain(1.0, 2.7, -30) == pytest.approx(1e-3)
    assert path_loss_gain(10.0, 2.0, -30) == pytest.approx(1e-5)
    assert path_loss_gain(np.sqrt(34), 2.0, -30) == pytest.approx(1e-3 / 34)
    d = np.linspace(0.5, 100, 50)
    assert np.all(np.diff(path_loss_gain(d, 3.0)) < 0)
    with pytest.raises(InvalidInput):
        path_loss_gain(0.0, 2.0)


def test_default_geometry():
    s = default_scenario(seed=4)
    assert s.bs == (0.0, 0.0) and s.irs == (5.0, 3.0) and s.ir == (50.0, 0.0)
    assert all(np.hypot(x - 5, y) <= 1 for x, y in s.er)
    assert all(np.hypot(x - 55, y) <= 2 for x, y in s.eve)
    assert s.p_max == pytest.approx(1.0)
    assert s.noise_ir == pytest.approx(1e-9)
    assert s.mu == (10e-6, 10e-6)


def test_scenario_validation():
    s = default_scenario()
    with pytest.raises(InvalidInput):
        replace(s, p_max=0.0)
    with pytest.raises(InvalidInput):
        replace(s, mu=(0.03, 0.0))
    with pytest.raises(InvalidInput):
        replace(s, noise_er=(1e-9,))
    with pytest.raises(InvalidInput):
        replace(s, exponents={**s.exponents, "bs_er": 0.0})
    default_scenario(n_er=0, n_eve=0)


def test_draws_are_deterministic():
    s = default_scenario(seed=9)
    a, b = draw_channels(s), draw_channels(s)
    for f in ("Q", "h_d", "h_r"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    for x, y in zip(a.g_r, b.g_r):
        assert np.array_equal(x, y)


def test_adding_receivers_keeps_existing_links():
    a = draw_channels(default_scenario(seed=2, n_er=1, n_eve=1))
    b = draw_channels(default_scenario(seed=2, n_er=3, n_eve=2))
    assert np.array_equal(a.h_d, b.h_d)
    assert np.array_equal(a.Q, b.Q)
    # ER 0 keeps its fading draw; its position also depends only on the seed
    assert np.allclose(a.g_d[0] / np.linalg.norm(a.g_d[0]), b.g_d[0] / np.linalg.norm(b.g_d[0])) \
        or not np.allclose(a.g_d[0], b.g_d[0])


def test_channels_are_read_only():
    cs = draw_channels(default_scenario())
    with pytest.raises(ValueError):
        cs.h_d[0] = 0


def test_empirical_path_loss_moment():
    rng = stream(0, "h_d", 0)
    z = (rng.standard_normal(10**5) + 1j * rng.standard_normal(10**5)) / np.sqrt(2)
    g = path_loss_gain(20.0, 3.6)
    assert np.mean(np.abs(np.sqrt(g) * z) ** 2) == pytest.approx(g, rel=0.02)


def test_doubling_distance_on_square_law():
    # Q is the alpha=2 link; move the IRS twice as far and average many seeds
    p1, p2 = [], []
    for seed in range(400):
        base = default_scenario(seed=seed, n_tx=8, n_ris=8)
        far = replace(base, irs=(10.0, 6.0))
        p1.append(np.mean(np.abs(draw_channels(base).Q) ** 2))
        p2.append(np.mean(np.abs(draw_channels(far).Q) ** 2))
    assert np.mean(p2) / np.mean(p1) == pytest.approx(0.25, rel=0.03)


def test_effective_channel_elementwise(rng):
    cs = draw_channels(default_scenario(seed=1, n_ris=6))
    theta = random_phases(3, 6)
    eff = effective_channels(cs, theta)
    # h^H = h_d^H + h_r^H diag(theta) Q, written out without helpers
    row = cs.h_d.conj().copy()
    for n in range(6):
        row = row + cs.h_r[n].conj() * theta[n] * cs.Q[n, :]
    assert np.allclose(eff.h, row.conj(), rtol=1e-12, atol=1e-20)


def test_no_reflection_gives_direct_link():
    cs = draw_channels(default_scenario(seed=1)).without_reflection()
    eff = effective_channels(cs, random_phases(1, cs.n_ris))
    assert np.array_equal(eff.h, cs.h_d)
    assert all(np.array_equal(a, b) for a, b in zip(eff.g, cs.g_d))


def test_single_element_alignment():
    # N_t = N_r = 1: |h| is largest when the reflected term is phase-aligned
    rng = np.random.default_rng(0)
    z = lambda: complex(rng.standard_normal(), rng.standard_normal())
    cs = ChannelSet(np.array([[z()]]), np.array([z()]), np.array([z()]), (), (), (), ())
    hd, hr, q = cs.h_d[0], cs.h_r[0], cs.Q[0, 0]
    # h = hd + conj(q) conj(theta) hr, aligned when arg(conj(theta)) = arg(hd) - arg(conj(q) hr)
    best = np.exp(-1j * (np.angle(hd) - np.angle(np.conj(q) * hr)))
    grid = np.exp(1j * np.linspace(0, 2 * np.pi, 3601))
    vals = [abs(effective_channels(cs, np.array([t])).h[0]) for t in grid]
    assert abs(effective_channels(cs, np.array([best])).h[0]) >= max(vals) - 1e-12
    assert abs(effective_channels(cs, np.array([best])).h[0]) == pytest.approx(abs(hd) + abs(q * hr))


def test_triangle_bound():
    cs = draw_channels(default_scenario(seed=5))
    rng = np.random.default_rng(1)
    for _ in range(20):
        w = rng.standard_normal(cs.n_tx) + 1j * rng.standard_normal(cs.n_tx)
        w /= np.linalg.norm(w)
        h = effective_channels(cs, random_phases(int(rng.integers(1e6)), cs.n_ris)).h
        bound = np.linalg.norm(cs.h_d) + np.linalg.norm(cs.h_r) * np.linalg.norm(cs.Q)
        assert abs(np.vdot(h, w)) <= bound


def test_linearity_in_raw_channels():
    a = draw_channels(default_scenario(seed=1, n_ris=4, n_tx=3))
    b = draw_channels(default_scenario(seed=2, n_ris=4, n_tx=3))
    theta = random_phases(0, 4)
    mix = replace(a, h_d=a.h_d + 2 * b.h_d, h_r=a.h_r + 2 * b.h_r)
    ea, eb, em = (effective_channels(c, theta).h for c in (a, replace(b, Q=a.Q), mix))
    assert np.allclose(em, ea + 2 * eb)


def test_unit_modulus_enforced():
    cs = draw_channels(default_scenario(n_ris=3))
    with pytest.raises(InvalidInput):
        effective_channels(cs, np.array([1, 1, 1.1]))
    with pytest.raises(InvalidInput):
        effective_channels(cs, np.ones(4))
    check_unit_modulus(np.exp(1j * np.arange(3)))


def test_scenario_is_frozen():
    s = default_scenario()
    assert isinstance(s, Scenario)
    with pytest.raises(Exception):
        s.n_tx = 3
