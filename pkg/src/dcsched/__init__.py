"""dcsched: deterministic simulation of federated data-center scheduling.

Implements the Megha eventually-consistent federated scheduler and three
probe/queue-based baselines (Sparrow, Eagle, Pigeon) over one discrete-event
kernel, with trace/synthetic workload tooling and job-delay metrics.
"""
from ._core import BACKEND as core_backend
from .cluster import Topology, build_topology, resolve_topology
from .config import RunConfig, load_config
from .kernel import Simulation
from .metrics import ideal_jct, percentile
from .runner import run_once
from .workload import (JobSpec, TaskSpec, classify_job, compute_load,
                       downsample, generate_fixed_load, parse_trace,
                       poissonize, serialize_trace)

__version__ = "0.1.0"

__all__ = [
    "JobSpec",
    "RunConfig",
    "Simulation",
    "TaskSpec",
    "Topology",
    "build_topology",
    "classify_job",
    "compute_load",
    "core_backend",
    "downsample",
    "generate_fixed_load",
    "ideal_jct",
    "load_config",
    "parse_trace",
    "percentile",
    "poissonize",
    "resolve_topology",
    "run_once",
    "serialize_trace",
]
