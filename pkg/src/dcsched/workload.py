"""Workload handling: trace parsing, synthetic generation, and load math.

Trace file format (text, whitespace separated, ``#`` starts a comment):

    <submit_time> <num_tasks> <dur_1> ... <dur_num_tasks>

one job per line, submit times nondecreasing, durations in virtual seconds.
Published cluster traces convert to this layout with a one-line preprocessor;
native raw-schema readers are intentionally out of scope.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, TextIO

SHORT = "short"
LONG = "long"

#: default short/long classification threshold (seconds of mean task runtime)
DEFAULT_CLASS_THRESHOLD = 90.0


class TraceParseError(ValueError):
    """Raised for malformed trace files; includes the offending line number."""


@dataclass(frozen=True)
class TaskSpec:
    job_id: int
    index: int
    duration: float  # ideal execution seconds; > 0


@dataclass
class JobSpec:
    job_id: int
    submit_time: float
    tasks: tuple[TaskSpec, ...]
    job_class: Optional[str] = field(default=None, compare=False)

    @property
    def task_count(self) -> int:
        return len(self.tasks)

    @property
    def mean_duration(self) -> float:
        return sum(t.duration for t in self.tasks) / len(self.tasks)

    @property
    def max_duration(self) -> float:
        return max(t.duration for t in self.tasks)

    @property
    def total_duration(self) -> float:
        return sum(t.duration for t in self.tasks)


@dataclass(frozen=True)
class WorkloadStats:
    job_count: int
    task_count: int
    min_iat: float
    max_iat: float
    mean_iat: float
    total_resource_seconds: float


def make_job(job_id: int, submit_time: float,
             durations: Iterable[float]) -> JobSpec:
    tasks = tuple(TaskSpec(job_id, i, float(d))
                  for i, d in enumerate(durations))
    if not tasks:
        raise ValueError("a job needs at least one task")
    return JobSpec(job_id, float(submit_time), tasks)


def parse_trace(stream: TextIO) -> list[JobSpec]:
    """Parse a trace file into jobs, ids assigned by line order."""
    jobs: list[JobSpec] = []
    last_submit = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise TraceParseError(f"line {lineno}: expected "
                                  f"'<submit> <num_tasks> <durations...>'")
        try:
            submit = float(tokens[0])
            num_tasks = int(tokens[1])
            durations = [float(tok) for tok in tokens[2:]]
        except ValueError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from None
        if num_tasks < 1:
            raise TraceParseError(f"line {lineno}: num_tasks must be >= 1")
        if len(durations) != num_tasks:
            raise TraceParseError(
                f"line {lineno}: expected {num_tasks} durations, "
                f"found {len(durations)}")
        if any(d <= 0 for d in durations):
            raise TraceParseError(f"line {lineno}: non-positive task duration")
        if submit < 0:
            raise TraceParseError(f"line {lineno}: negative submit time")
        if last_submit is not None and submit < last_submit:
            raise TraceParseError(
                f"line {lineno}: submit times must be nondecreasing")
        last_submit = submit
        jobs.append(make_job(len(jobs), submit, durations))
    return jobs


def serialize_trace(jobs: Iterable[JobSpec], stream: TextIO) -> None:
    """Write jobs in the trace format accepted by parse_trace."""
    for job in jobs:
        durs = " ".join(repr(t.duration) for t in job.tasks)
        stream.write(f"{job.submit_time!r} {len(job.tasks)} {durs}\n")


def generate_fixed_load(num_jobs: int, tasks_per_job: int,
                        task_duration: float, load: float, dc_size: int,
                        seed: int | None = None) -> list[JobSpec]:
    """Constant-rate workload hitting a target load on a DC of `dc_size`.

    Inter-arrival time is (tasks_per_job * task_duration) / (load * dc_size),
    the closed-form inversion of compute_load. `seed` is accepted for
    interface symmetry with the samplers; the output is fully determined by
    the other arguments.
    """
    del seed
    if not 0 < load <= 1:
        raise ValueError("load must be in (0, 1]; oversubscribed DCs are "
                         "out of scope")
    if num_jobs < 1 or tasks_per_job < 1 or dc_size < 1:
        raise ValueError("counts must be positive")
    if task_duration <= 0:
        raise ValueError("task_duration must be > 0")
    iat = (tasks_per_job * task_duration) / (load * dc_size)
    durations = [task_duration] * tasks_per_job
    return [make_job(k, k * iat, durations) for k in range(num_jobs)]


def poissonize(jobs: list[JobSpec], mean_iat: float, seed: int) -> list[JobSpec]:
    """Replace submit times with a Poisson arrival process (exponential IATs)."""
    if mean_iat <= 0:
        raise ValueError("mean_iat must be > 0")
    rng = random.Random(seed)
    out = []
    t = 0.0
    for i, job in enumerate(jobs):
        t += rng.expovariate(1.0 / mean_iat)
        out.append(replace(job, job_id=i, submit_time=t))
    return out


def downsample(jobs: list[JobSpec], factor: int, seed: int) -> list[JobSpec]:
    """Uniformly sample ceil(n/factor) jobs without replacement, order kept."""
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if factor == 1:
        return list(jobs)
    keep = math.ceil(len(jobs) / factor)
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(jobs)), keep))
    return [replace(jobs[i], job_id=new_id) for new_id, i in enumerate(picked)]


def compute_load(jobs: list[JobSpec], dc_size: int) -> float:
    """Workload resource demand per second divided by DC capacity.

    The span is (last submit - first submit) plus one mean inter-arrival
    time, so constant-rate workloads invert generate_fixed_load exactly and
    single-burst workloads stay well defined. A degenerate zero span falls
    back to the total task duration.
    """
    if dc_size < 1:
        raise ValueError("dc_size must be >= 1")
    if not jobs:
        raise ValueError("empty workload")
    total = sum(j.total_duration for j in jobs)
    n = len(jobs)
    if n > 1:
        base = jobs[-1].submit_time - jobs[0].submit_time
        span = base + base / (n - 1)
    else:
        span = 0.0
    if span <= 0:
        span = total
    return (total / span) / dc_size


def classify_job(job: JobSpec,
                 threshold: float = DEFAULT_CLASS_THRESHOLD) -> str:
    """`long` iff mean task duration strictly exceeds `threshold` (ties short)."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    return LONG if job.mean_duration > threshold else SHORT


def classify_all(jobs: list[JobSpec], threshold: float) -> None:
    for job in jobs:
        job.job_class = classify_job(job, threshold)


def stats(jobs: list[JobSpec]) -> WorkloadStats:
    if not jobs:
        raise ValueError("empty workload")
    iats = [b.submit_time - a.submit_time for a, b in zip(jobs, jobs[1:])]
    return WorkloadStats(
        job_count=len(jobs),
        task_count=sum(j.task_count for j in jobs),
        min_iat=min(iats) if iats else 0.0,
        max_iat=max(iats) if iats else 0.0,
        mean_iat=sum(iats) / len(iats) if iats else 0.0,
        total_resource_seconds=sum(j.total_duration for j in jobs),
    )
