"""Command-line interface: ``smolyak-qc {grid,replay,optimize,scan,benchmark}``.

Exit codes: 0 success, 2 argument/config error, 3 fixture error,
4 optimizer abort (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import drivers, sparsegrid
from .optimize import OptimizerAbort
from .pulses import FixtureError, load_pulse
from .quadrature import InvalidArgument, Measure

log = logging.getLogger("smolyak_qc")

OUTPUT_ENV = "SMOLYAK_QC_OUTPUT"
EXIT_ARGS, EXIT_FIXTURE, EXIT_ABORT = 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _outdir(args, name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUTPUT_ENV, "results")) / name


def _config(args) -> dict:
    source = args.config
    doc: dict
    if source is None:
        raise drivers.ConfigError("a config file or preset name is required")
    if Path(source).exists():
        cfg = drivers.load_config(source)
    elif source in drivers.PRESETS:
        cfg = drivers.resolve_config(source)
    else:
        raise drivers.ConfigError(f"{source}: no such config file or preset")
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def cmd_grid(args) -> int:
    measure = Measure.parse(args.measure)
    grid = sparsegrid.smolyak_grid(args.d, args.K, measure)
    text = sparsegrid.to_csv(grid)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"nodes: {len(grid)}  weight sum: {grid.weights.sum():.17g}", file=sys.stderr)
    return 0


def cmd_replay(args) -> int:
    cfg = _config(args)
    outdir = _outdir(args, f"replay_{cfg['name']}")
    report = drivers.replay_fixture(cfg, args.fixture, outdir)
    print(json.dumps({k: report[k] for k in ("expected_infidelity", "reference_infidelity", "worst_case")}))
    log.info("wrote %s", outdir)
    return 0


def cmd_optimize(args) -> int:
    cfg = _config(args)
    overrides = {}
    if args.max_iterations is not None:
        overrides["max_iterations"] = args.max_iterations
    outdir = _outdir(args, f"{args.algorithm or cfg['algorithm']}_{cfg['name']}")
    if args.seeds is not None and args.seeds > 1:
        seeds = range(cfg["seed"], cfg["seed"] + args.seeds)
        best, reports = drivers.sweep(cfg, args.algorithm, seeds, outdir, optimizer=overrides)
        for r in reports:
            log.info("seed %d: reference %.3e", r["seed"], r["reference_infidelity"])
        report = best.report
    else:
        report = drivers.run(cfg, args.algorithm, optimizer=overrides, outdir=outdir).report
    print(json.dumps({k: report[k] for k in ("seed", "expected_infidelity", "reference_infidelity", "iterations")}))
    return 0


def cmd_scan(args) -> int:
    cfg = _config(args)
    objective = drivers.build_scenario(cfg)
    if args.pulse:
        pulse = load_pulse(args.pulse, expect_channels=objective.model.n_controls)
    else:
        pulse = drivers.load_fixture(cfg)
    unc = objective.uncertainty.channels
    i, j = args.axes
    if not (0 <= i < len(unc) and 0 <= j < len(unc)) or i == j:
        raise drivers.ConfigError(f"invalid axes {args.axes} for {len(unc)} uncertainties")
    span = args.span
    ranges = (drivers.support(unc[i], span), drivers.support(unc[j], span))
    scan = drivers.landscape_scan(objective, pulse.params, (i, j), ranges, args.resolution)
    text = scan.to_csv((unc[i].label, unc[j].label))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(json.dumps(scan.area_fractions()), file=sys.stderr)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    if args.iterations is not None:
        cfg["benchmark"]["iterations"] = args.iterations
    if args.mode is not None:
        cfg["benchmark"]["mode"] = args.mode
    rows = drivers.benchmark(cfg)
    text = drivers.rows_to_csv(rows, ["iter", "estimator", "estimate", "reference", "abs_err"])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for name in sorted({r["estimator"] for r in rows}):
        errs = [r["abs_err"] for r in rows if r["estimator"] == name]
        print(f"{name}: median abs_err {np.median(errs):.3e}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smolyak-qc", description="Robust quantum gate pulses with Smolyak sparse-grid sampling.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=None, help="cap on numba worker threads")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("grid", help="write a Smolyak sparse grid as CSV")
    g.add_argument("-d", type=int, required=True, help="dimension")
    g.add_argument("-K", type=int, required=True, help="sparse level")
    g.add_argument("--measure", default="legendre:-0.5:0.5", help="legendre:a:b or hermite")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_grid)

    r = sub.add_parser("replay", help="evaluate a published pulse fixture")
    r.add_argument("config", help="scenario JSON file or preset name")
    r.add_argument("--fixture", help="pulse JSON (defaults to the scenario's fixture)")
    r.add_argument("--seed", type=int)
    r.add_argument("-o", "--out")
    r.set_defaults(func=cmd_replay)

    o = sub.add_parser("optimize", help="run smGOAT / smGRAPE / bGRAPE")
    o.add_argument("config")
    o.add_argument("--algorithm", choices=["smgoat", "smgrape", "bgrape"])
    o.add_argument("--seed", type=int)
    o.add_argument("--seeds", type=int, help="number of consecutive seeds to sweep")
    o.add_argument("--max-iterations", type=int)
    o.add_argument("-o", "--out")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("scan", help="infidelity landscape over two uncertainties")
    s.add_argument("config")
    s.add_argument("--pulse", help="pulse JSON (defaults to the scenario's fixture)")
    s.add_argument("--axes", type=int, nargs=2, default=(0, 1))
    s.add_argument("--resolution", type=int, default=101)
    s.add_argument("--span", type=float, default=1.0, help="fraction of each uncertainty's support")
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_scan)

    b = sub.add_parser("benchmark", help="Smolyak vs Monte Carlo estimates against a dense reference")
    b.add_argument("config")
    b.add_argument("--iterations", type=int)
    b.add_argument("--mode", choices=["trajectory", "optimizers"])
    b.add_argument("--seed", type=int)
    b.add_argument("-o", "--out")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    if args.threads is not None:
        try:
            import numba

            numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
        except ImportError:
            pass
    try:
        return args.func(args)
    except FixtureError as exc:
        print(f"fixture error: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except OptimizerAbort as exc:
        print(f"optimizer aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (drivers.ConfigError, InvalidArgument, sparsegrid.ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
