#!/usr/bin/env python3
"""Benchmark the compiled scan kernels against the pure-Python fallback.

Two parts:
  * microbenchmark of the two hot kernels (availability-view claim and
    wholesale cluster refresh) on a large DC-shaped state;
  * an end-to-end simulation of a mid-size run with each backend, verifying
    that both produce the identical report.

Usage:  python3 benchmarks/bench_core.py [--workers N] [--rounds N]
"""
import argparse
import random
import time
from array import array

from dcsched._core import _load_backends


def build_state(rng, gm_count, lm_count, wpp):
    partitions = gm_count * lm_count
    total = partitions * wpp
    flags = bytearray(rng.choice((0, 1)) for _ in range(total))
    part_free = array("i", [flags[p * wpp:(p + 1) * wpp].count(1)
                            for p in range(partitions)])
    pids = list(range(partitions))
    rng.shuffle(pids)
    order = []
    offsets = array("i", [0] * (partitions + 1))
    for p in range(partitions):
        workers = list(range(p * wpp, (p + 1) * wpp))
        rng.shuffle(workers)
        order.extend(workers)
        offsets[p + 1] = len(order)
    return flags, part_free, array("i", pids), array("i", order), offsets


def bench_kernels(impl, rounds, gm_count=8, lm_count=10, wpp=163):
    rng = random.Random(7)
    flags, part_free, pids, order, offsets = build_state(
        rng, gm_count, lm_count, wpp)
    wpp_total = gm_count * wpp
    snap = bytes(rng.choice((0, 1)) for _ in range(wpp_total))
    cursor = 0
    claimed = []
    t0 = time.perf_counter()
    for i in range(rounds):
        w, cursor = impl.claim_next(flags, part_free, pids, cursor, order,
                                    offsets)
        if w >= 0:
            claimed.append(w)
        else:
            for c in claimed:  # refill so the scan keeps doing work
                flags[c] = 1
                part_free[c // wpp] += 1
            claimed.clear()
        if i % 64 == 0:
            lm = i % lm_count
            impl.refresh_cluster(flags, part_free, snap, lm * wpp_total,
                                 lm * gm_count, (lm + 1) * gm_count, wpp)
    return time.perf_counter() - t0


def bench_simulation(backend_name, impl, workers):
    import dcsched._core as core
    from dcsched.config import RunConfig
    from dcsched.runner import run_once

    saved = (core.claim_next, core.refresh_cluster)
    core.claim_next, core.refresh_cluster = (impl.claim_next,
                                             impl.refresh_cluster)
    try:
        cfg = RunConfig.from_dict({
            "scheduler": "megha",
            "topology": {"total_workers": workers},
            "workload": {"synthetic": {"jobs": 200, "tasks_per_job": 200,
                                       "task_duration": 1.0, "load": 0.9},
                         "poisson_mean_iat": 200 / (0.9 * workers)},
            "seed": 3,
        })
        t0 = time.perf_counter()
        result = run_once(cfg)
        wall = time.perf_counter() - t0
    finally:
        core.claim_next, core.refresh_cluster = saved
    return wall, result.summary


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workers", type=int, default=4000,
                        help="DC size for the end-to-end run")
    parser.add_argument("--rounds", type=int, default=300_000,
                        help="kernel operations for the microbenchmark")
    args = parser.parse_args()

    backends = _load_backends()
    if "compiled" not in backends:
        print("compiled backend unavailable; run "
              "`python3 setup.py build_ext --inplace` first")

    print(f"== kernel microbenchmark ({args.rounds} claims, 13040-worker "
          f"view) ==")
    times = {}
    for name, impl in backends.items():
        times[name] = bench_kernels(impl, args.rounds)
        print(f"  {name:9s} {times[name]:8.3f} s  "
              f"({args.rounds / times[name] / 1e6:.2f} M ops/s)")
    if len(times) == 2:
        print(f"  speedup   {times['pure'] / times['compiled']:.1f}x")

    print(f"\n== end-to-end: megha, 200 jobs x 200 tasks, "
          f"{args.workers} workers ==")
    summaries = {}
    for name, impl in backends.items():
        wall, summary = bench_simulation(name, impl, args.workers)
        summaries[name] = summary
        print(f"  {name:9s} {wall:8.3f} s  "
              f"(median delay {summary.delay_median:.6f} s, "
              f"{summary.events_processed} events)")
    if len(summaries) == 2:
        match = summaries["pure"] == summaries["compiled"]
        print(f"  reports identical across backends: {match}")
        if not match:
            raise SystemExit("backend mismatch!")


if __name__ == "__main__":
    main()
