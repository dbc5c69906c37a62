"""Command-line interface.

Verbs:
    run          simulate one config, write summary.json / jobs.csv
    compare      run several schedulers over one shared workload
    sweep        grid of (load, dc size) runs over a synthetic workload
    trace stats  print workload statistics for a trace file
    trace synth  generate a workload from a config and write it as a trace

Exit codes: 0 success, 1 usage or config error, 2 invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner, workload
from .cluster import ConfigError
from .config import load_config
from .kernel import SimError
from .metrics import ConservationError
from .workload import TraceParseError

USAGE_ERROR = 1
INVARIANT_ERROR = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcsched",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", required=True,
                        help="JSON config file")
        sp.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override a config field (dotted path; "
                             "value parsed as JSON)")

    run_p = sub.add_parser("run", help="simulate one configuration")
    common(run_p)
    run_p.add_argument("-o", "--out", default="out", help="output directory")
    run_p.add_argument("--events", action="store_true",
                       help="also write events.log")

    cmp_p = sub.add_parser("compare",
                           help="run schedulers over one shared workload")
    common(cmp_p)
    cmp_p.add_argument("--schedulers", default="megha,sparrow,eagle,pigeon",
                       help="comma-separated scheduler list")
    cmp_p.add_argument("-o", "--out", default="out")

    swp_p = sub.add_parser("sweep", help="load/size sweep")
    common(swp_p)
    swp_p.add_argument("--loads", required=True,
                       help="comma-separated loads in (0, 1]")
    swp_p.add_argument("--sizes", default="",
                       help="comma-separated DC sizes (default: config size)")
    swp_p.add_argument("-o", "--out", default="out")

    trace_p = sub.add_parser("trace", help="trace utilities")
    trace_sub = trace_p.add_subparsers(dest="trace_verb", required=True)
    stats_p = trace_sub.add_parser("stats", help="print workload statistics")
    stats_p.add_argument("file", help="trace file")
    synth_p = trace_sub.add_parser("synth",
                                   help="write a generated workload as a "
                                        "trace file")
    common(synth_p)
    synth_p.add_argument("-o", "--out", required=True, help="trace file path")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.overrides)
    result = runner.run_once(cfg, collect_events=args.events)
    runner.write_report(args.out, result, include_events=args.events)
    s = result.summary
    print(f"{s.scheduler}: {s.job_count} jobs / {s.task_count} tasks on "
          f"{s.workers} workers")
    print(f"  delay mean={s.delay_mean:.6f}s median={s.delay_median:.6f}s "
          f"p95={s.delay_p95:.6f}s")
    print(f"  inconsistencies={s.inconsistency_events} "
          f"(ratio {s.inconsistency_ratio:.6f})")
    print(f"  report written to {args.out} "
          f"(wall {result.wall_seconds:.2f}s)")
    return 0


def _cmd_compare(args) -> int:
    cfg = load_config(args.config, args.overrides)
    names = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    rows = runner.compare_runs(cfg, names)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = [{k: v for k, v in row.items() if k != "_result"}
             for row in rows]
    runner.write_table(out / "compare.csv", runner.COMPARE_COLUMNS, table)
    header = (f"{'scheduler':>10} {'mean':>12} {'median':>12} {'p95':>12} "
              f"{'vs-megha':>9}")
    print(header)
    for row in table:
        print(f"{row['scheduler']:>10} {row['mean_delay']:>12.6f} "
              f"{row['median_delay']:>12.6f} {row['p95_delay']:>12.6f} "
              f"{row['mean_factor']:>9.2f}")
    print(f"table written to {out / 'compare.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.overrides)
    try:
        loads = [float(x) for x in args.loads.split(",") if x.strip()]
        sizes = [int(x) for x in args.sizes.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep grid: {exc}") from None
    rows = runner.sweep_runs(cfg, loads, sizes or None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = [{k: v for k, v in row.items() if k != "_result"}
             for row in rows]
    runner.write_table(out / "sweep.csv", runner.SWEEP_COLUMNS, table)
    for row in table:
        print(f"load {row['load']:<5} size {row['dc_size']:<7} "
              f"median {row['median_delay']:.6f} p95 {row['p95_delay']:.6f} "
              f"incon {row['inconsistency_ratio']:.6f}")
    print(f"table written to {out / 'sweep.csv'}")
    return 0


def _cmd_trace(args) -> int:
    if args.trace_verb == "stats":
        with open(args.file, "r", encoding="utf-8") as fh:
            jobs = workload.parse_trace(fh)
        st = workload.stats(jobs)
        print(f"jobs:                   {st.job_count}")
        print(f"tasks:                  {st.task_count}")
        print(f"inter-arrival min/mean/max: "
              f"{st.min_iat:.6f} / {st.mean_iat:.6f} / {st.max_iat:.6f} s")
        print(f"total resource-seconds: {st.total_resource_seconds:.3f}")
        return 0
    cfg = load_config(args.config, args.overrides)
    topo = runner.resolve_topology(cfg)
    jobs = runner.build_workload(cfg, topo.total_workers)
    with open(args.out, "w", encoding="utf-8") as fh:
        workload.serialize_trace(jobs, fh)
    print(f"{len(jobs)} jobs written to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; this tool reserves 2 for
        # invariant violations
        return 0 if exc.code == 0 else USAGE_ERROR
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "compare":
            return _cmd_compare(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        if args.verb == "trace":
            return _cmd_trace(args)
        return USAGE_ERROR
    except (ConfigError, TraceParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ConservationError, SimError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return INVARIANT_ERROR


if __name__ == "__main__":
    sys.exit(main())
