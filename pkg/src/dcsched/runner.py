"""Run orchestration: build a workload and topology, simulate, emit reports.

Every report is reproducible from its embedded config echo plus seed; the
summary and per-job table are byte-stable across repeated runs of the same
config. Wall-clock timing is returned to callers but deliberately kept out
of the written artifacts.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import random
import time
from pathlib import Path
from typing import Optional

from . import cluster, eagle, megha, metrics, pigeon, sparrow, workload
from .config import RunConfig, derive_seed
from .kernel import JobArrival, Simulation


@dataclasses.dataclass
class RunResult:
    config: RunConfig
    topology: cluster.Topology
    summary: metrics.RunSummary
    job_rows: list[metrics.JobMetrics]
    task_rows: list[metrics.TaskMetrics]
    recorder: metrics.RunRecorder
    final_time: float
    wall_seconds: float
    event_log: Optional[list] = None


def resolve_topology(cfg: RunConfig) -> cluster.Topology:
    t = cfg.topology
    return cluster.resolve_topology(t.total_workers, t.gm_count, t.lm_count,
                                    t.workers_per_partition)


def build_workload(cfg: RunConfig, dc_size: int) -> list[workload.JobSpec]:
    w = cfg.workload
    if w.trace is not None:
        with open(w.trace, "r", encoding="utf-8") as fh:
            jobs = workload.parse_trace(fh)
    else:
        syn = w.synthetic
        jobs = workload.generate_fixed_load(syn.jobs, syn.tasks_per_job,
                                            syn.task_duration, syn.load,
                                            dc_size)
    if w.downsample_factor is not None:
        jobs = workload.downsample(jobs, w.downsample_factor,
                                   derive_seed(cfg.seed, "downsample"))
    if w.poisson_mean_iat is not None:
        jobs = workload.poissonize(jobs, w.poisson_mean_iat,
                                   derive_seed(cfg.seed, "poisson"))
    workload.classify_all(jobs, cfg.short_threshold)
    return jobs


def _build_framework(name: str, sim: Simulation, topo: cluster.Topology,
                     cfg: RunConfig, recorder: metrics.RunRecorder,
                     total_jobs: int):
    if name == "megha":
        def gm_rng(gm_index: int):
            return random.Random(derive_seed(cfg.seed, "megha", "shuffle",
                                             gm_index))

        return megha.MeghaCluster(sim, topo, recorder, total_jobs, gm_rng,
                                  batch_limit=cfg.batch_limit,
                                  heartbeat=cfg.heartbeat,
                                  heartbeat_offset=cfg.heartbeat_offset,
                                  owner_notify=cfg.owner_notify)
    if name == "sparrow":
        return sparrow.SparrowFleet(sim, topo, recorder, total_jobs,
                                    derive_seed(cfg.seed, "sparrow"),
                                    d=cfg.sparrow.d,
                                    scheduler_count=cfg.sparrow.schedulers)
    if name == "eagle":
        return eagle.EagleFleet(sim, topo, recorder, total_jobs,
                                derive_seed(cfg.seed, "eagle"),
                                d=cfg.eagle.d,
                                short_fraction=cfg.eagle.short_fraction,
                                scheduler_count=cfg.eagle.schedulers)
    if name == "pigeon":
        return pigeon.PigeonFleet(sim, topo, recorder, total_jobs,
                                  weight=cfg.pigeon.weight,
                                  reserved_per_group=cfg.pigeon.
                                  reserved_per_group,
                                  group_count=cfg.pigeon.groups,
                                  distributor_count=cfg.pigeon.distributors)
    raise cluster.ConfigError(f"unknown scheduler {name!r}")


def run_once(cfg: RunConfig, jobs: Optional[list[workload.JobSpec]] = None,
             collect_events: bool = False) -> RunResult:
    topo = resolve_topology(cfg)
    if jobs is None:
        jobs = build_workload(cfg, topo.total_workers)
    else:
        workload.classify_all(jobs, cfg.short_threshold)
    event_log = [] if collect_events else None
    sim = Simulation(net_delay=cfg.net_delay, max_events=cfg.max_events,
                     event_log=event_log)
    recorder = metrics.RunRecorder()
    fw = _build_framework(cfg.scheduler, sim, topo, cfg, recorder, len(jobs))
    sim.set_job_handler(fw.on_job)
    for job in jobs:
        sim.schedule_event(job.submit_time, JobArrival(job))
    started = time.perf_counter()
    final_time = sim.run_until_idle()
    wall = time.perf_counter() - started
    summary, job_rows, task_rows = metrics.finalize(
        cfg.scheduler, cfg.digest(), cfg.seed, topo.total_workers, jobs,
        recorder, cfg.net_delay, final_time, sim.messages_sent,
        sim.events_processed)
    if sim.messages_sent != sim.messages_delivered:
        raise metrics.ConservationError(
            f"{sim.messages_sent} messages sent but "
            f"{sim.messages_delivered} delivered")
    return RunResult(cfg, topo, summary, job_rows, task_rows, recorder,
                     final_time, wall, event_log)


# -- report files ------------------------------------------------------------

JOBS_CSV_COLUMNS = ("job_id", "class", "submit_time", "finish_time", "jct",
                    "ideal_jct", "delay", "task_count")


def write_report(outdir, result: RunResult, include_events: bool = False) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    doc = dataclasses.asdict(result.summary)
    doc["config"] = result.config.to_dict()
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "jobs.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(JOBS_CSV_COLUMNS)
        for row in result.job_rows:
            writer.writerow([row.job_id, row.job_class, repr(row.submit_time),
                             repr(row.finish_time), repr(row.jct),
                             repr(row.ideal_jct), repr(row.delay),
                             row.task_count])
    if include_events and result.event_log is not None:
        with open(out / "events.log", "w", encoding="utf-8") as fh:
            for t, entity, kind, detail in result.event_log:
                fh.write(json.dumps({"time": t, "entity": entity,
                                     "kind": kind, "detail": detail},
                                    sort_keys=True))
                fh.write("\n")


# -- multi-run drivers -------------------------------------------------------

COMPARE_COLUMNS = ("scheduler", "mean_delay", "median_delay", "p95_delay",
                   "short_median_delay", "long_median_delay", "mean_factor",
                   "median_factor", "p95_factor")


def compare_runs(base_cfg: RunConfig, schedulers: list[str]) -> list[dict]:
    """Run several schedulers over one shared workload; factors vs megha.

    The workload is generated once from the base config and reused, so every
    row sees the same jobs and the same seed.
    """
    if not schedulers:
        raise cluster.ConfigError("no schedulers to compare")
    topo = resolve_topology(base_cfg)
    jobs = build_workload(base_cfg, topo.total_workers)
    results: dict[str, RunResult] = {}
    for name in schedulers:
        cfg = RunConfig.from_dict({**base_cfg.to_dict(), "scheduler": name})
        results[name] = run_once(cfg, jobs=jobs)
    baseline = results.get("megha") or results[schedulers[0]]
    base_sum = baseline.summary
    rows = []
    for name in schedulers:
        s = results[name].summary

        def _factor(value, ref):
            return value / ref if ref else float("nan")

        rows.append({
            "scheduler": name,
            "mean_delay": s.delay_mean,
            "median_delay": s.delay_median,
            "p95_delay": s.delay_p95,
            "short_median_delay": s.short_delay_median,
            "long_median_delay": s.long_delay_median,
            "mean_factor": _factor(s.delay_mean, base_sum.delay_mean),
            "median_factor": _factor(s.delay_median, base_sum.delay_median),
            "p95_factor": _factor(s.delay_p95, base_sum.delay_p95),
            "_result": results[name],
        })
    return rows


def validate_shared_workload(cfgs: list[RunConfig]) -> None:
    """compare() precondition: all configs share one workload block and seed."""
    if not cfgs:
        raise cluster.ConfigError("no configs to compare")
    first = cfgs[0]
    for cfg in cfgs[1:]:
        if cfg.workload != first.workload or cfg.seed != first.seed:
            raise cluster.ConfigError(
                "compare requires identical workload specs and seeds")


SWEEP_COLUMNS = ("load", "dc_size", "median_delay", "p95_delay",
                 "inconsistency_ratio")


def sweep_runs(base_cfg: RunConfig, loads: list[float],
               sizes: Optional[list[int]] = None) -> list[dict]:
    """One run per (load, dc size) over the synthetic workload block."""
    if base_cfg.workload.synthetic is None:
        raise cluster.ConfigError("sweep needs a synthetic workload block")
    if not loads:
        raise cluster.ConfigError("sweep needs at least one load")
    for load in loads:
        if not 0 < load <= 1:
            raise cluster.ConfigError(f"load {load} outside (0, 1]")
    if not sizes:
        sizes = [resolve_topology(base_cfg).total_workers]
    rows = []
    for size in sizes:
        for load in loads:
            data = base_cfg.to_dict()
            data["workload"]["synthetic"]["load"] = load
            data["topology"] = {"total_workers": size}
            cfg = RunConfig.from_dict(data)
            result = run_once(cfg)
            rows.append({
                "load": load,
                "dc_size": result.topology.total_workers,
                "median_delay": result.summary.delay_median,
                "p95_delay": result.summary.delay_p95,
                "inconsistency_ratio": result.summary.inconsistency_ratio,
                "_result": result,
            })
    return rows


def write_table(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return value
