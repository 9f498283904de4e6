"""Command-line entry point: ``irs-swipt {solve,sweep,oracle-check,selftest}``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import selftest as _selftest
from .ao_driver import run_ao
from .channel import draw_channels
from .experiments import (
    CSV_COLUMNS,
    TRACE_COLUMNS,
    ConfigError,
    SweepSpec,
    format_csv,
    load_config,
    run_sweep,
    write_csv,
)
from .numerics import InvalidInput
from .oracle import baseline_no_irs, baseline_random_phase, grid_search_phases

log = logging.getLogger("irs_swipt")

SOLVE_COLUMNS = ("scheme", "status", "r_ir", "r_sec", "worst_eavesdropper_rate",
                 "min_harvested_uw", "outer_iters", "feasible")
ORACLE_COLUMNS = ("seed", "grid_r_sec", "ao_r_sec", "relative_gap", "within_2pct")


def _spec(args, default_kind="power_sweep"):
    if args.config:
        spec = load_config(args.config)
    else:
        spec = SweepSpec(kind=default_kind)
    if args.seed is not None:
        spec.seed = args.seed
    if getattr(args, "draws", None) is not None:
        spec.n_channel_draws = args.draws
    return spec


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args):
    spec = _spec(args)
    seed = spec.seed
    scen = spec.scenario.build(seed)
    cs = draw_channels(scen)
    tau = spec.ao.tau
    rows = []

    def row(name, sol, iters=0):
        rep = sol.report
        rows.append(dict(
            scheme=name,
            status=sol.status,
            r_ir=rep.r_ir if rep else 0.0,
            r_sec=rep.r_sec if rep else 0.0,
            worst_eavesdropper_rate=max(rep.r_er + rep.r_eve, default=0.0) if rep else 0.0,
            min_harvested_uw=min(rep.phi_eh, default=0.0) * 1e6 if rep else 0.0,
            outer_iters=iters,
            feasible=str(bool(rep and rep.feasible)).lower(),
        ))

    sol, trace = run_ao(scen, cs, spec.ao)
    row("proposed", sol, trace.outer_iters)
    row("no_irs", baseline_no_irs(scen, cs, tau))
    row("random_phase", baseline_random_phase(scen, cs, tau, seed))
    _emit(format_csv(rows, SOLVE_COLUMNS), args.out)
    return 0


def cmd_sweep(args):
    spec = _spec(args)
    if args.workers is not None:
        spec.workers = args.workers
    total = [0]

    def progress(i, n):
        total[0] = n
        log.info("cell %d/%d", i, n)

    res = run_sweep(spec, progress)
    rows = res.table()
    text = format_csv(rows, CSV_COLUMNS)
    _emit(text, args.out)
    if spec.kind == "convergence":
        trace_rows = res.traces()
        if args.out:
            out = Path(args.out)
            write_csv(trace_rows, out.with_name(out.stem + "_trace.csv"), TRACE_COLUMNS)
        else:
            sys.stdout.write("\n" + format_csv(trace_rows, TRACE_COLUMNS))
    if args.plot:
        from . import plotting

        base = Path(args.out) if args.out else Path(f"{spec.kind}.csv")
        plotting.plot_sweep(rows, base.with_suffix(".png"), spec.kind)
        if spec.kind == "convergence":
            plotting.plot_traces(res.traces(), base.with_name(base.stem + "_trace.png"))
    return 0


def tiny_scenario_spec():
    """N_t = N_r = 2, one ER and one Eve, used by the oracle comparison."""
    from .ao_driver import AoConfig
    from .experiments import ScenarioSpec

    return SweepSpec(
        kind="power_sweep",
        grid=[40.0],
        scenario=ScenarioSpec(n_tx=2, n_ris=2, n_er=1, n_eve=1, p_max_dbm=40.0, mu_uw=1.0),
        ao=AoConfig(restarts=5),
    )


def oracle_rows(n_seeds=20, first_seed=0, resolution=1.0, spec=None):
    spec = spec or tiny_scenario_spec()
    rows = []
    for seed in range(first_seed, first_seed + n_seeds):
        scen = spec.scenario.build(seed)
        cs = draw_channels(scen)
        _, ref = grid_search_phases(scen, cs, spec.ao.tau, resolution)
        sol, _ = run_ao(scen, cs, spec.ao)
        ao = sol.r_sec if sol.ok else 0.0
        ref = max(ref, 0.0)
        gap = (ref - ao) / ref if ref > 0 else (0.0 if ao >= ref else np.inf)
        rows.append(dict(seed=seed, grid_r_sec=ref, ao_r_sec=ao, relative_gap=gap,
                         within_2pct=str(bool(gap <= 0.02)).lower()))
    return rows


def cmd_oracle(args):
    spec = load_config(args.config) if args.config else tiny_scenario_spec()
    rows = oracle_rows(args.draws or 20, args.seed or 0, args.resolution, spec)
    _emit(format_csv(rows, ORACLE_COLUMNS), args.out)
    return 0


def cmd_selftest(args):
    results = _selftest.run_all(seed=args.seed or 0)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="irs-swipt", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML sweep/scenario file")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--draws", type=int, help="number of channel draws (or oracle seeds)")
    common.add_argument("--verbose", "-v", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="one scenario, all schemes")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("sweep", parents=[common], help="Monte-Carlo sweep to CSV")
    s.add_argument("--workers", type=int, help="process pool size (overrides config)")
    s.add_argument("--plot", action="store_true", help="also render PNG next to the CSV")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("oracle-check", parents=[common], help="AO versus phase-grid search")
    s.add_argument("--resolution", type=float, default=1.0, help="grid step in degrees")
    s.set_defaults(func=cmd_oracle)
    s = sub.add_parser("selftest", parents=[common], help="quick invariant checks")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidInput, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
