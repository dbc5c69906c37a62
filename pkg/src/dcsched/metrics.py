"""Delay metrics, run accounting, and the post-run summary.

Per job: jct = finish - submit, delay = jct - ideal where ideal is the
longest task duration (an omniscient scheduler on an infinite zero-latency
DC can do no better). Per task: completion time counts from job submission,
and its delay decomposes into scheduler-queue, communication, and
worker-queue components; processing and execution-condition delays are
identically zero in this simulator. For schedulers that queue overlapping
reservations at several workers, the worker-queue component of a task is the
queuing time at the worker that actually served it, and the scheduler-side
component absorbs the overlapping remainder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .workload import JobSpec, LONG, SHORT, compute_load


class ConservationError(RuntimeError):
    """A task was lost, duplicated, or never completed."""


def ideal_jct(job: JobSpec) -> float:
    """Longest task duration: the JCT floor on an infinite idle DC."""
    return job.max_duration


def percentile(values, p: float) -> float:
    """Nearest-rank percentile: the ceil(p*n)-th smallest (p=0 -> minimum)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    vals = sorted(values)
    if not vals:
        raise ValueError("percentile of empty data")
    # guard against float noise pushing p*n just past an integer rank
    rank = math.ceil(p * len(vals) - 1e-9)
    return vals[max(rank, 1) - 1]


@dataclass(slots=True)
class TaskRun:
    """One launch attempt's in-flight state, threaded through messages.

    `path_hops` is the number of network hops on the serving path (set by
    the scheduler when it dispatches), `worker_queue` the time the serving
    reservation or task spent queued at the worker that ran it.
    """
    job_id: int
    task_index: int
    duration: float
    worker: int = -1
    sched: str = ""
    borrowed: bool = False
    is_long: bool = False
    exec_start: float = -1.0
    path_hops: int = 0
    worker_queue: float = 0.0


@dataclass(slots=True)
class JobMetrics:
    job_id: int
    job_class: str
    submit_time: float
    finish_time: float
    jct: float
    ideal_jct: float
    delay: float
    task_count: int


@dataclass(slots=True)
class TaskMetrics:
    job_id: int
    task_index: int
    tct: float
    delay: float
    queue_scheduler: float
    comm: float
    queue_worker: float


@dataclass(slots=True)
class _TaskRecord:
    started: float = -1.0
    finished: float = -1.0
    worker: int = -1
    trt: float = -1.0
    hops: int = 0
    worker_queue: float = 0.0


@dataclass(slots=True)
class _JobRecord:
    submit: float
    n_tasks: int
    job_class: str
    assigned_to: str = ""
    finish: float = -1.0
    done: int = 0


class RunRecorder:
    """Collects ground truth while a simulation runs; feeds finalize()."""

    def __init__(self):
        self.jobs: dict[int, _JobRecord] = {}
        self.tasks: dict[tuple[int, int], _TaskRecord] = {}
        self._worker_running: dict[int, tuple[int, int]] = {}
        self.mappings_sent = 0
        self.invalid_mappings = 0
        self.requeued_tasks = 0
        self.probes_sent = 0
        self.cancelled_reservations = 0
        self.worker_queue_entries = 0
        self.batch_sizes: list[int] = []
        self.dispatch_log: list = []  # optional scheduler-specific entries

    # -- lifecycle ----------------------------------------------------------

    def job_submitted(self, job: JobSpec, assigned_to: str) -> None:
        self.jobs[job.job_id] = _JobRecord(job.submit_time, job.task_count,
                                           job.job_class or SHORT,
                                           assigned_to)

    def task_started(self, run: TaskRun, now: float) -> None:
        key = (run.job_id, run.task_index)
        rec = self.tasks.get(key)
        if rec is None:
            rec = self.tasks[key] = _TaskRecord()
        if rec.started >= 0:
            raise ConservationError(f"task {key} launched twice")
        if run.worker in self._worker_running:
            raise ConservationError(
                f"worker {run.worker} double-booked by {key} and "
                f"{self._worker_running[run.worker]}")
        self._worker_running[run.worker] = key
        rec.started = now
        rec.worker = run.worker

    def task_finished(self, run: TaskRun, now: float) -> None:
        key = (run.job_id, run.task_index)
        if self._worker_running.get(run.worker) != key:
            raise ConservationError(f"finish of task {key} not running on "
                                    f"worker {run.worker}")
        del self._worker_running[run.worker]
        self.tasks[key].finished = now

    def task_acked(self, run: TaskRun, now: float, hops: int,
                   worker_queue: float) -> bool:
        """The scheduling entity processed the task's completion message.

        Returns True when this was the job's final task.
        """
        key = (run.job_id, run.task_index)
        rec = self.tasks[key]
        if rec.trt >= 0:
            raise ConservationError(f"task {key} completed twice")
        rec.trt = now
        rec.hops = hops
        rec.worker_queue = worker_queue
        job = self.jobs[run.job_id]
        job.done += 1
        if job.done == job.n_tasks:
            job.finish = now
            return True
        return False

    # -- counters -----------------------------------------------------------

    def add_mappings(self, n: int) -> None:
        self.mappings_sent += n
        self.batch_sizes.append(n)

    def add_invalid(self, n: int) -> None:
        self.invalid_mappings += n
        self.requeued_tasks += n

    def add_probes(self, n: int) -> None:
        self.probes_sent += n


@dataclass(slots=True)
class RunSummary:
    scheduler: str
    config_digest: str
    seed: int
    workers: int
    job_count: int
    task_count: int
    load: float
    makespan: float
    final_time: float
    delay_mean: float
    delay_median: float
    delay_p95: float
    delay_min: float
    delay_max: float
    short_job_count: int
    long_job_count: int
    short_delay_median: Optional[float]
    short_delay_mean: Optional[float]
    long_delay_median: Optional[float]
    long_delay_mean: Optional[float]
    inconsistency_events: int
    task_requests: int
    inconsistency_ratio: float
    mappings_sent: int
    probes_sent: int
    messages_sent: int
    events_processed: int


def finalize(scheduler: str, config_digest: str, seed: int, workers: int,
             jobs: list[JobSpec], recorder: RunRecorder, net_delay: float,
             final_time: float, messages_sent: int,
             events_processed: int) -> tuple[RunSummary, list[JobMetrics],
                                             list[TaskMetrics]]:
    """Check conservation, then assemble per-job/per-task metrics + summary."""
    job_rows: list[JobMetrics] = []
    task_rows: list[TaskMetrics] = []
    for job in jobs:
        rec = recorder.jobs.get(job.job_id)
        if rec is None or rec.finish < 0 or rec.done != job.task_count:
            raise ConservationError(f"job {job.job_id} did not complete "
                                    f"({rec})")
        ideal = ideal_jct(job)
        jct = rec.finish - job.submit_time
        delay = jct - ideal
        if delay < -1e-9:
            raise ConservationError(f"job {job.job_id} finished faster than "
                                    f"the omniscient bound: delay={delay}")
        job_rows.append(JobMetrics(job.job_id, rec.job_class, job.submit_time,
                                   rec.finish, jct, ideal, delay,
                                   job.task_count))
        for task in job.tasks:
            trec = recorder.tasks.get((job.job_id, task.index))
            if trec is None or trec.trt < 0 or trec.started < 0:
                raise ConservationError(
                    f"task ({job.job_id}, {task.index}) incomplete")
            tct = trec.trt - job.submit_time
            tdelay = tct - task.duration
            comm = trec.hops * net_delay
            qsched = tdelay - comm - trec.worker_queue
            if qsched < -1e-9:
                raise ConservationError(
                    f"task ({job.job_id}, {task.index}) has negative "
                    f"scheduler-queue residual {qsched}")
            task_rows.append(TaskMetrics(job.job_id, task.index, tct, tdelay,
                                         qsched, comm, trec.worker_queue))
    if recorder._worker_running:
        raise ConservationError(
            f"tasks still running at idle: {recorder._worker_running}")

    delays = [r.delay for r in job_rows]
    if not delays:
        raise ConservationError("run produced no job metrics")
    short = [r.delay for r in job_rows if r.job_class == SHORT]
    long_ = [r.delay for r in job_rows if r.job_class == LONG]
    task_count = sum(j.task_count for j in jobs)
    summary = RunSummary(
        scheduler=scheduler,
        config_digest=config_digest,
        seed=seed,
        workers=workers,
        job_count=len(jobs),
        task_count=task_count,
        load=compute_load(jobs, workers),
        makespan=max(r.finish_time for r in job_rows),
        final_time=final_time,
        delay_mean=sum(delays) / len(delays),
        delay_median=percentile(delays, 0.5),
        delay_p95=percentile(delays, 0.95),
        delay_min=min(delays),
        delay_max=max(delays),
        short_job_count=len(short),
        long_job_count=len(long_),
        short_delay_median=percentile(short, 0.5) if short else None,
        short_delay_mean=sum(short) / len(short) if short else None,
        long_delay_median=percentile(long_, 0.5) if long_ else None,
        long_delay_mean=sum(long_) / len(long_) if long_ else None,
        inconsistency_events=recorder.invalid_mappings,
        task_requests=task_count,
        inconsistency_ratio=recorder.invalid_mappings / task_count,
        mappings_sent=recorder.mappings_sent,
        probes_sent=recorder.probes_sent,
        messages_sent=messages_sent,
        events_processed=events_processed,
    )
    return summary, job_rows, task_rows
