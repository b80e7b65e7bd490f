"""Command-line entry point: ``driftbench <experiment-kind> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    default_jobs,
    emit,
    run_experiment,
    run_replay,
    write_diff,
)

SWEEP_FLAGS = {
    "gap": "gaps",
    "shifts": "shifts",
    "seglen": "seglens",
    "experts": "experts",
    "scaledN": "horizons",
    "scaledDelta": "horizons",
    "scaledBoth": "horizons",
    "bench": "lengths",
}


def _csv_list(cast):
    def parse(s):
        try:
            return tuple(cast(x) for x in s.split(",") if x.strip())
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="driftbench",
        description="Expert selection under shifting rewards: FTL, FTBI and AdaNormalHedge.",
    )
    p.add_argument("kind", choices=EXPERIMENT_KINDS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--policies", type=_csv_list(str), help="comma list from ftl,ftbi,anh")
    p.add_argument("--reps", type=int, help="replications (default 20, replay 1)")
    p.add_argument("--seed", type=int, help="base seed; replication j uses seed + j")
    p.add_argument("--anh-mode", choices=("sampled", "fractional"))
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    timing = p.add_mutually_exclusive_group()
    timing.add_argument("--timing", dest="timing", action="store_const", const=True,
                        help="emit wall-clock columns (default for bench only)")
    timing.add_argument("--no-timing", dest="timing", action="store_const", const=False)

    g = p.add_argument_group("sweep values")
    g.add_argument("--gaps", type=_csv_list(float))
    g.add_argument("--shifts", type=_csv_list(int))
    g.add_argument("--seglens", type=_csv_list(int))
    g.add_argument("--experts", type=_csv_list(int))
    g.add_argument("--horizons", type=_csv_list(int), help="T values for the scaled sweeps")
    g.add_argument("--lengths", type=_csv_list(int), help="T values for bench")

    r = p.add_argument_group("replay")
    r.add_argument("--dataset", help="square | pm25[:PATH] | power[:PATH] | csv:PATH | rewards:PATH")
    r.add_argument("--data-file", help="data file for the pm25/power presets")
    r.add_argument("--threshold", type=float)
    r.add_argument("--column", help="measurement column name or 0-based position")
    r.add_argument("--no-header", dest="header", action="store_const", const=False)
    r.add_argument("--diff-out", help="write the cumulative reward difference series here")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
        base.pop("kind", None)
    overrides = {
        "policies": args.policies,
        "reps": args.reps,
        "seed": args.seed,
        "anh_mode": args.anh_mode,
        "out": args.out,
        "format": args.format,
        "jobs": args.jobs,
        "timing": args.timing,
        "dataset": args.dataset,
        "data_file": args.data_file,
        "threshold": args.threshold,
        "column": args.column,
        "header": args.header,
        "diff_out": args.diff_out,
        "values": getattr(args, SWEEP_FLAGS.get(args.kind, ""), None) if args.kind in SWEEP_FLAGS else None,
    }
    cfg = dict(base)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    cfg.setdefault("jobs", default_jobs())
    for key in ("policies", "values"):
        if key in cfg and cfg[key] is not None and not isinstance(cfg[key], tuple):
            cfg[key] = tuple(cfg[key])
    return ExperimentConfig(kind=args.kind, **cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if cfg.kind == "replay":
            rows, diff = run_replay(cfg)
            if cfg.diff_out and diff is not None:
                write_diff(diff, cfg.diff_out)
        else:
            rows = run_experiment(cfg)
        text = emit(rows, cfg.format, cfg.out)
        if cfg.out is None:
            sys.stdout.write(text)
    except (ValueError, OSError, TypeError) as e:
        print(f"driftbench: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
