"""
Scenario geometry, Rayleigh channel realisations and effective channels.

Channels are stored as column vectors; the received sample at a node with
effective channel ``h`` is ``h^H x``. Every link draws from its own Philox
stream keyed by ``(seed, link code, index)`` so that adding or removing a
receiver never perturbs the draws of the others.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .eh_model import EhParams
from .numerics import InvalidInput, dbm_to_watts

DEFAULT_EXPONENTS = {"bs_er": 3.0, "bs_ir_eve": 3.6, "irs_all": 2.5, "bs_irs": 2.0}

# stream keys for np.random.SeedSequence
_LINK = {
    "Q": 1,
    "h_d": 2,
    "h_r": 3,
    "g_d": 10,
    "g_r": 11,
    "h_deve": 20,
    "h_reve": 21,
    "er_pos": 30,
    "eve_pos": 31,
    "theta": 40,
}


def stream(seed, link, index=0):
    """Deterministic counter-based generator for one link."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, _LINK[link], int(index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class Scenario:
    n_tx: int
    n_ris: int
    bs: tuple
    irs: tuple
    ir: tuple
    er: tuple                      # ER positions
    eve: tuple                     # Eve positions
    p_max: float                   # W
    noise_ir: float                # W
    noise_er: tuple                # W per ER
    noise_eve: tuple               # W per Eve
    eh: tuple                      # EhParams per ER
    mu: tuple                      # W per ER
    exponents: dict = field(default_factory=lambda: dict(DEFAULT_EXPONENTS))
    pathloss_ref_db: float = -30.0
    seed: int = 0

    def __post_init__(self):
        if self.n_tx < 1 or self.n_ris < 1:
            raise InvalidInput("n_tx and n_ris must be at least 1")
        if not (len(self.noise_er) == len(self.eh) == len(self.mu) == len(self.er)):
            raise InvalidInput("per-ER fields must all have one entry per ER")
        if len(self.noise_eve) != len(self.eve):
            raise InvalidInput("noise_eve must have one entry per Eve")
        if self.p_max <= 0 or self.noise_ir <= 0:
            raise InvalidInput("powers and noise variances must be positive")
        if any(v <= 0 for v in self.noise_er + self.noise_eve):
            raise InvalidInput("noise variances must be positive")
        if any(e <= 0 for e in self.exponents.values()):
            raise InvalidInput("path-loss exponents must be positive")
        for m, p in zip(self.mu, self.eh):
            if m < 0 or m >= p.m_sat:
                raise InvalidInput(f"mu={m} must lie in [0, M={p.m_sat})")

    @property
    def n_er(self):
        return len(self.er)

    @property
    def n_eve(self):
        return len(self.eve)

    def with_(self, **kw):
        return replace(self, **kw)


def uniform_disk(rng, center, radius, n):
    r = radius * np.sqrt(rng.random(n))
    phi = 2 * np.pi * rng.random(n)
    return [(center[0] + ri * np.cos(p), center[1] + ri * np.sin(p)) for ri, p in zip(r, phi)]


def default_scenario(
    seed=0,
    n_tx=16,
    n_ris=16,
    n_er=2,
    n_eve=2,
    p_max_dbm=30.0,
    mu_w=10e-6,
    noise_dbm=-60.0,
    eh=EhParams(),
    pathloss_ref_db=-30.0,
    exponents=None,
):
    """Simulation layout: BS at the origin, IRS at (5, 3), IR at (50, 0).

    ERs are uniform in the unit disk around (5, 0) and Eves uniform in the
    radius-2 disk around (55, 0); positions depend only on ``seed``.
    """
    er = uniform_disk(stream(seed, "er_pos"), (5.0, 0.0), 1.0, n_er)
    eve = uniform_disk(stream(seed, "eve_pos"), (55.0, 0.0), 2.0, n_eve)
    noise = float(dbm_to_watts(noise_dbm))
    return Scenario(
        n_tx=n_tx,
        n_ris=n_ris,
        bs=(0.0, 0.0),
        irs=(5.0, 3.0),
        ir=(50.0, 0.0),
        er=tuple(er),
        eve=tuple(eve),
        p_max=float(dbm_to_watts(p_max_dbm)),
        noise_ir=noise,
        noise_er=(noise,) * n_er,
        noise_eve=(noise,) * n_eve,
        eh=(eh,) * n_er,
        mu=(float(mu_w),) * n_er,
        exponents=dict(exponents or DEFAULT_EXPONENTS),
        pathloss_ref_db=pathloss_ref_db,
        seed=int(seed),
    )


def path_loss_gain(distance, exponent, ref_db=-30.0):
    """Linear power gain ``10^(ref_db/10) * d^(-exponent)``."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise InvalidInput("distance must be positive")
    g = 10.0 ** (ref_db / 10.0) * d ** (-float(exponent))
    return float(g) if g.ndim == 0 else g


def _dist(a, b):
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelSet:
    Q: np.ndarray                # (n_ris, n_tx) BS -> IRS
    h_d: np.ndarray              # (n_tx,) BS -> IR
    h_r: np.ndarray              # (n_ris,) IRS -> IR
    g_d: tuple                   # (n_tx,) BS -> ER i
    g_r: tuple                   # (n_ris,) IRS -> ER i
    h_deve: tuple                # (n_tx,) BS -> Eve k
    h_reve: tuple                # (n_ris,) IRS -> Eve k

    @property
    def n_tx(self):
        return self.Q.shape[1]

    @property
    def n_ris(self):
        return self.Q.shape[0]

    def without_reflection(self):
        """Same direct links with every IRS-related channel set to zero."""
        z = lambda v: _frozen(np.zeros_like(v))
        return ChannelSet(
            Q=z(self.Q),
            h_d=self.h_d,
            h_r=z(self.h_r),
            g_d=self.g_d,
            g_r=tuple(z(v) for v in self.g_r),
            h_deve=self.h_deve,
            h_reve=tuple(z(v) for v in self.h_reve),
        )


def draw_channels(s: Scenario) -> ChannelSet:
    """One Rayleigh realisation of every link in ``s``."""
    ex = s.exponents
    ref = s.pathloss_ref_db

    def link(name, index, shape, a, b, exponent):
        amp = np.sqrt(path_loss_gain(_dist(a, b), exponent, ref))
        return _frozen(amp * _cn(stream(s.seed, name, index), shape))

    nt, nr = s.n_tx, s.n_ris
    return ChannelSet(
        Q=link("Q", 0, (nr, nt), s.bs, s.irs, ex["bs_irs"]),
        h_d=link("h_d", 0, nt, s.bs, s.ir, ex["bs_ir_eve"]),
        h_r=link("h_r", 0, nr, s.irs, s.ir, ex["irs_all"]),
        g_d=tuple(link("g_d", i, nt, s.bs, p, ex["bs_er"]) for i, p in enumerate(s.er)),
        g_r=tuple(link("g_r", i, nr, s.irs, p, ex["irs_all"]) for i, p in enumerate(s.er)),
        h_deve=tuple(link("h_deve", k, nt, s.bs, p, ex["bs_ir_eve"]) for k, p in enumerate(s.eve)),
        h_reve=tuple(link("h_reve", k, nr, s.irs, p, ex["irs_all"]) for k, p in enumerate(s.eve)),
    )


@dataclass(frozen=True)
class EffectiveChannels:
    h: np.ndarray
    g: tuple
    h_eve: tuple


def check_unit_modulus(theta, tol=1e-9):
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    if np.any(np.abs(np.abs(theta) - 1.0) > tol):
        raise InvalidInput("IRS phase vector must have unit-modulus entries")
    return theta


def compose(direct, reflected, Q, theta):
    """``direct + Q^H Theta^H reflected`` for ``Theta = diag(theta)``."""
    return direct + Q.conj().T @ (np.conj(theta) * reflected)


def effective_channels(cs: ChannelSet, theta) -> EffectiveChannels:
    theta = check_unit_modulus(theta)
    if theta.size != cs.n_ris:
        raise InvalidInput(f"theta has {theta.size} entries, IRS has {cs.n_ris}")
    return EffectiveChannels(
        h=compose(cs.h_d, cs.h_r, cs.Q, theta),
        g=tuple(compose(d, r, cs.Q, theta) for d, r in zip(cs.g_d, cs.g_r)),
        h_eve=tuple(compose(d, r, cs.Q, theta) for d, r in zip(cs.h_deve, cs.h_reve)),
    )


def random_phases(seed, n, index=0):
    return np.exp(2j * np.pi * stream(seed, "theta", index).random(n))
