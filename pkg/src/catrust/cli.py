"""Command line: ``catrust run|verify|list``."""
from __future__ import annotations

import argparse
import sys
import time

from . import harness, verify
from .config import ConfigError, apply_overrides, load_config


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catrust", description="CA / FIRE trust simulation testbed")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and export CSV results")
    run.add_argument("--experiment", required=True, help="1..14 or custom")
    run.add_argument("--nsir", type=int, default=harness.DEFAULT_NSIR,
                     help="number of independent runs (default %(default)s)")
    run.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed + i")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--config", help="key = value override file")
    run.add_argument("--parallel", type=int, default=1, help="worker processes")
    run.add_argument("--min-count", type=int, default=30,
                     help="cap exported indices where every group has this many samples")
    run.add_argument("--backend", choices=("compiled", "python"), default=None)
    run.add_argument("--trace", action="store_true",
                     help="print one line per interaction to stderr")

    sub.add_parser("verify", help="run the analytical oracle checks")
    sub.add_parser("list", help="print the experiment manifest")
    return p


def _cmd_list(out) -> int:
    for key, (desc, _) in harness.EXPERIMENTS.items():
        out.write(f"{key:>6}  {desc}\n")
    out.write(f"{'custom':>6}  static world, tune it with --config\n")
    return 0


def _cmd_run(args, parser) -> int:
    try:
        spec = harness.experiment(args.experiment, nsir=args.nsir, base_seed=args.seed)
    except KeyError as exc:
        parser.error(exc.args[0])
    if args.nsir < 1:
        parser.error("--nsir must be at least 1")
    if args.config:
        try:
            spec = apply_overrides(spec, load_config(args.config))
        except ConfigError as exc:
            parser.error(str(exc))
    t0 = time.perf_counter()
    try:
        logs = harness.run_experiment(spec, max(1, args.parallel), backend=args.backend)
    except ValueError as exc:
        parser.error(str(exc))
    if args.trace:
        harness.write_trace(logs, sys.stderr)
    agg = harness.aggregate(logs, spec.id)
    ranks = harness.rank(agg)
    cap = harness.index_cap(agg, args.min_count)
    try:
        files = harness.export(agg, ranks, args.out, max_index=cap)
    except OSError as exc:
        print(f"catrust: error: {exc}", file=sys.stderr)
        return 1
    print(f"experiment {spec.id}: {spec.nsir} runs, {len(logs)} interactions, "
          f"indices 1..{cap}, {time.perf_counter() - t0:.1f}s")
    for f in files:
        print(f"  wrote {f}")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        return _cmd_list(sys.stdout)
    if args.command == "verify":
        return verify.main(sys.stdout)
    return _cmd_run(args, parser)


if __name__ == "__main__":
    sys.exit(main())
