"""
Monte-Carlo sweeps over one scenario parameter and their CSV output.

Every channel draw is keyed by ``(base seed, draw index)`` only, so all
schemes and all grid points of a sweep see the same realisations (paired
comparison). Infeasible draws enter the averages as zero secrecy rate and
are excluded from ``n_feasible``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import io
import logging

import numpy as np
import yaml

from .ao_driver import AoConfig, run_ao
from .channel import DEFAULT_EXPONENTS, default_scenario, draw_channels
from .eh_model import EhParams
from .numerics import InvalidInput
from .oracle import baseline_no_irs, baseline_random_phase

log = logging.getLogger(__name__)

KINDS = ("convergence", "power_sweep", "eh_sweep", "elements_sweep")
SCHEMES = ("proposed", "no_irs", "random_phase")
CSV_COLUMNS = ("sweep_value", "scheme", "mean_secrecy_rate", "std_secrecy_rate",
               "n_feasible", "mean_outer_iters")
TRACE_COLUMNS = ("sweep_value", "iteration", "mean_ir_rate", "mean_secrecy_rate")

DEFAULT_GRIDS = {
    "convergence": [20.0, 30.0, 40.0],          # dBm
    "power_sweep": [20.0, 25.0, 30.0, 35.0, 40.0],  # dBm
    "eh_sweep": [1.0, 5.0, 10.0, 20.0, 50.0],   # microwatts
    "elements_sweep": [4, 8, 16, 24, 36],
}


class ConfigError(InvalidInput):
    pass


@dataclass
class ScenarioSpec:
    """Inputs of :func:`channel.default_scenario`, in configuration units."""

    n_tx: int = 16
    n_ris: int = 16
    n_er: int = 2
    n_eve: int = 2
    p_max_dbm: float = 30.0
    mu_uw: float = 10.0
    noise_dbm: float = -60.0
    pathloss_ref_db: float = -30.0
    eh: dict = field(default_factory=lambda: asdict(EhParams()))
    exponents: dict = field(default_factory=lambda: dict(DEFAULT_EXPONENTS))

    def build(self, seed, **override):
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(override)
        return default_scenario(
            seed=seed,
            n_tx=int(kw["n_tx"]),
            n_ris=int(kw["n_ris"]),
            n_er=int(kw["n_er"]),
            n_eve=int(kw["n_eve"]),
            p_max_dbm=float(kw["p_max_dbm"]),
            mu_w=float(kw["mu_uw"]) * 1e-6,
            noise_dbm=float(kw["noise_dbm"]),
            eh=EhParams(**kw["eh"]),
            pathloss_ref_db=float(kw["pathloss_ref_db"]),
            exponents=kw["exponents"],
        )


@dataclass
class SweepSpec:
    kind: str
    grid: list = None
    n_channel_draws: int = 50
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    seed: int = 0
    workers: int = 1
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    ao: AoConfig = field(default_factory=AoConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {self.kind!r}")
        if self.grid is None:
            self.grid = list(DEFAULT_GRIDS[self.kind])
        if not self.grid:
            raise ConfigError("grid: must be non-empty")
        self.grid = [float(g) for g in self.grid]
        if self.n_channel_draws < 1:
            raise ConfigError("n_channel_draws: must be at least 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigError(f"schemes: unknown or empty {bad}")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")
        if self.kind == "elements_sweep" and any(g != int(g) or g < 1 for g in self.grid):
            raise ConfigError("grid: element counts must be positive integers")

    def scenario_at(self, value, draw_seed):
        """Scenario for one grid value and channel draw."""
        key = {"convergence": "p_max_dbm", "power_sweep": "p_max_dbm",
               "eh_sweep": "mu_uw", "elements_sweep": "n_ris"}[self.kind]
        return self.scenario.build(draw_seed, **{key: value})

    def draw_seed(self, d):
        return int(np.random.SeedSequence([int(self.seed), int(d)]).generate_state(1)[0])


def _take(cls, doc, path):
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        names = ", ".join(f"{path}.{u}" if path else u for u in unknown)
        raise ConfigError(f"unknown field(s) {names}")
    return dict(doc)


def spec_from_dict(doc):
    """Validated :class:`SweepSpec` from a plain mapping."""
    top = _take(SweepSpec, doc, "")
    if "kind" not in top:
        raise ConfigError("kind: required")
    sc = _take(ScenarioSpec, top.pop("scenario", None), "scenario")
    if "eh" in sc:
        eh = _take(EhParams, sc["eh"], "scenario.eh")
        sc["eh"] = {**asdict(EhParams()), **eh}
    if "exponents" in sc:
        ex = sc["exponents"] or {}
        unknown = sorted(set(ex) - set(DEFAULT_EXPONENTS))
        if unknown:
            names = ", ".join(f"scenario.exponents.{u}" for u in unknown)
            raise ConfigError(f"unknown field(s) {names}")
        sc["exponents"] = {**DEFAULT_EXPONENTS, **ex}
    ao = _take(AoConfig, top.pop("ao", None), "ao")
    try:
        return SweepSpec(scenario=ScenarioSpec(**sc), ao=AoConfig(**ao), **top)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def spec_to_dict(spec):
    out = asdict(spec)
    th = out["ao"]["theta_init"]
    if not isinstance(th, str):
        raise ConfigError("ao.theta_init: only named initialisations can be saved")
    return out


def load_config(path):
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from None
    return spec_from_dict(doc or {})


def save_config(spec, path):
    with open(path, "w") as fh:
        yaml.safe_dump(spec_to_dict(spec), fh, sort_keys=False)


@dataclass
class CellResult:
    value: float
    draw: int
    scheme: str
    ok: bool
    r_sec: float
    outer_iters: int = 0
    r_ir_trace: list = field(default_factory=list)
    r_sec_trace: list = field(default_factory=list)


def run_cell(spec, value, draw):
    """All requested schemes for one (grid value, draw) pair."""
    seed = spec.draw_seed(draw)
    scen = spec.scenario_at(value, seed)
    cs = draw_channels(scen)
    tau = spec.ao.tau
    out = []
    for scheme in spec.schemes:
        if scheme == "proposed":
            sol, trace = run_ao(scen, cs, spec.ao)
            out.append(CellResult(value, draw, scheme, sol.ok, sol.r_sec if sol.ok else 0.0,
                                  trace.outer_iters if sol.ok else 0,
                                  [s.r_ir for s in trace.steps], [s.r_sec for s in trace.steps]))
        elif scheme == "no_irs":
            sol = baseline_no_irs(scen, cs, tau)
            out.append(CellResult(value, draw, scheme, sol.ok, sol.r_sec if sol.ok else 0.0))
        else:
            sol = baseline_random_phase(scen, cs, tau, seed)
            out.append(CellResult(value, draw, scheme, sol.ok, sol.r_sec if sol.ok else 0.0))
    return out


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list

    def rates(self, scheme):
        """``(len(grid), n_draws)`` array of per-draw secrecy rates."""
        out = np.zeros((len(self.spec.grid), self.spec.n_channel_draws))
        gi = {v: i for i, v in enumerate(self.spec.grid)}
        for c in self.cells:
            if c.scheme == scheme:
                out[gi[c.value], c.draw] = c.r_sec
        return out

    def table(self):
        rows = []
        for v in self.spec.grid:
            for scheme in self.spec.schemes:
                sel = [c for c in self.cells if c.value == v and c.scheme == scheme]
                r = np.array([c.r_sec for c in sel])
                ok = [c for c in sel if c.ok]
                rows.append(dict(
                    sweep_value=v,
                    scheme=scheme,
                    mean_secrecy_rate=float(np.mean(r)) if r.size else 0.0,
                    std_secrecy_rate=float(np.std(r, ddof=1)) if r.size > 1 else 0.0,
                    n_feasible=len(ok),
                    mean_outer_iters=float(np.mean([c.outer_iters for c in ok])) if ok else 0.0,
                ))
        return rows

    def traces(self):
        """Mean per-iteration (IR rate, secrecy rate) of the proposed scheme.

        Runs that stopped early are padded with their final value; infeasible
        draws are left out.
        """
        rows = []
        for v in self.spec.grid:
            sel = [c for c in self.cells if c.value == v and c.scheme == "proposed" and c.ok]
            if not sel:
                continue
            n = max(len(c.r_ir_trace) for c in sel)
            pad = lambda t: list(t) + [t[-1]] * (n - len(t))
            ir = np.mean([pad(c.r_ir_trace) for c in sel], axis=0)
            sec = np.mean([pad(c.r_sec_trace) for c in sel], axis=0)
            rows.extend(dict(sweep_value=v, iteration=i, mean_ir_rate=a, mean_secrecy_rate=b)
                        for i, (a, b) in enumerate(zip(ir, sec)))
        return rows


def run_sweep(spec, progress=None):
    """Evaluate every (grid value, draw) cell; results come back in a fixed order."""
    tasks = [(spec, v, d) for v in spec.grid for d in range(spec.n_channel_draws)]
    cells = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for i, res in enumerate(pool.map(_run_cell_args, tasks)):
                cells.extend(res)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, t in enumerate(tasks):
            cells.extend(run_cell(*t))
            if progress:
                progress(i + 1, len(tasks))
    order = {s: i for i, s in enumerate(spec.schemes)}
    cells.sort(key=lambda c: (spec.grid.index(c.value), c.draw, order[c.scheme]))
    return SweepResult(spec, cells)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.9g" % v


def format_csv(rows, columns=CSV_COLUMNS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows, path, columns=CSV_COLUMNS):
    """Header plus one line per row; numbers with 9 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(rows, columns))
