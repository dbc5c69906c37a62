"""Run configuration: parsing, validation, defaults, and digests.

Configs are JSON documents. Every default is materialized when parsing, so
an echoed config re-parses to an identical RunConfig and the digest pins the
exact run. Unknown keys anywhere are rejected.

Units: all times are virtual seconds (net_delay 0.0005 = 0.5 ms per hop).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from .cluster import ConfigError

SCHEDULERS = ("megha", "sparrow", "eagle", "pigeon")
OWNER_NOTIFY_MODES = ("immediate", "heartbeat")


def derive_seed(seed: int, *tags: object) -> int:
    """Stable sub-seed for a named random stream of a run."""
    text = f"{seed}|" + "|".join(str(t) for t in tags)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _take(data: dict, where: str, fields: dict[str, Any]) -> dict:
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: "
                          f"{', '.join(sorted(unknown))}")
    out = dict(fields)
    out.update(data)
    return out


@dataclass(frozen=True)
class TopologySpec:
    total_workers: Optional[int] = None
    gm_count: Optional[int] = None
    lm_count: Optional[int] = None
    workers_per_partition: Optional[int] = None

    @staticmethod
    def from_dict(data: dict) -> "TopologySpec":
        return TopologySpec(**_take(data, "topology", {
            "total_workers": None, "gm_count": None, "lm_count": None,
            "workers_per_partition": None}))


@dataclass(frozen=True)
class SyntheticSpec:
    jobs: int = 2000
    tasks_per_job: int = 1000
    task_duration: float = 1.0
    load: float = 1.0

    @staticmethod
    def from_dict(data: dict) -> "SyntheticSpec":
        return SyntheticSpec(**_take(data, "workload.synthetic", {
            "jobs": 2000, "tasks_per_job": 1000, "task_duration": 1.0,
            "load": 1.0}))


@dataclass(frozen=True)
class WorkloadSpec:
    trace: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    downsample_factor: Optional[int] = None
    poisson_mean_iat: Optional[float] = None

    @staticmethod
    def from_dict(data: dict) -> "WorkloadSpec":
        raw = _take(data, "workload", {
            "trace": None, "synthetic": None, "downsample_factor": None,
            "poisson_mean_iat": None})
        if raw["synthetic"] is not None:
            raw["synthetic"] = SyntheticSpec.from_dict(raw["synthetic"])
        spec = WorkloadSpec(**raw)
        if (spec.trace is None) == (spec.synthetic is None):
            raise ConfigError(
                "workload needs exactly one of 'trace' or 'synthetic'")
        return spec


@dataclass(frozen=True)
class SparrowSpec:
    d: int = 2
    schedulers: Optional[int] = None  # default: topology gm_count

    @staticmethod
    def from_dict(data: dict) -> "SparrowSpec":
        return SparrowSpec(**_take(data, "sparrow",
                                   {"d": 2, "schedulers": None}))


@dataclass(frozen=True)
class EagleSpec:
    d: int = 2
    short_fraction: float = 0.1
    schedulers: Optional[int] = None

    @staticmethod
    def from_dict(data: dict) -> "EagleSpec":
        return EagleSpec(**_take(data, "eagle", {
            "d": 2, "short_fraction": 0.1, "schedulers": None}))


@dataclass(frozen=True)
class PigeonSpec:
    weight: int = 2
    reserved_per_group: int = 2
    groups: Optional[int] = None        # default: topology lm_count
    distributors: Optional[int] = None  # default: topology gm_count

    @staticmethod
    def from_dict(data: dict) -> "PigeonSpec":
        return PigeonSpec(**_take(data, "pigeon", {
            "weight": 2, "reserved_per_group": 2, "groups": None,
            "distributors": None}))


@dataclass(frozen=True)
class RunConfig:
    scheduler: str
    topology: TopologySpec
    workload: WorkloadSpec
    net_delay: float = 0.0005
    heartbeat: float = 5.0       # 0 disables LM heartbeats
    heartbeat_offset: float = 0.0
    batch_limit: int = 50
    owner_notify: str = "immediate"
    short_threshold: float = 90.0
    seed: int = 0
    max_events: int = 100_000_000
    sparrow: SparrowSpec = field(default_factory=SparrowSpec)
    eagle: EagleSpec = field(default_factory=EagleSpec)
    pigeon: PigeonSpec = field(default_factory=PigeonSpec)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        raw = _take(data, "config", {
            "scheduler": None, "topology": None, "workload": None,
            "net_delay": 0.0005, "heartbeat": 5.0, "heartbeat_offset": 0.0,
            "batch_limit": 50, "owner_notify": "immediate",
            "short_threshold": 90.0, "seed": 0, "max_events": 100_000_000,
            "sparrow": {}, "eagle": {}, "pigeon": {}})
        if raw["scheduler"] not in SCHEDULERS:
            raise ConfigError(f"scheduler must be one of {SCHEDULERS}, "
                              f"got {raw['scheduler']!r}")
        if raw["topology"] is None or raw["workload"] is None:
            raise ConfigError("config needs 'topology' and 'workload'")
        raw["topology"] = TopologySpec.from_dict(raw["topology"])
        raw["workload"] = WorkloadSpec.from_dict(raw["workload"])
        raw["sparrow"] = SparrowSpec.from_dict(raw["sparrow"])
        raw["eagle"] = EagleSpec.from_dict(raw["eagle"])
        raw["pigeon"] = PigeonSpec.from_dict(raw["pigeon"])
        cfg = RunConfig(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.net_delay <= 0:
            raise ConfigError("net_delay must be > 0")
        if self.heartbeat < 0 or self.heartbeat_offset < 0:
            raise ConfigError("heartbeat settings must be >= 0")
        if self.batch_limit < 1:
            raise ConfigError("batch_limit must be >= 1")
        if self.owner_notify not in OWNER_NOTIFY_MODES:
            raise ConfigError(f"owner_notify must be one of "
                              f"{OWNER_NOTIFY_MODES}")
        if self.owner_notify == "heartbeat" and self.heartbeat == 0:
            raise ConfigError("owner_notify='heartbeat' needs heartbeats "
                              "enabled, or borrowed workers never return")
        if self.short_threshold <= 0:
            raise ConfigError("short_threshold must be > 0")
        if self.max_events < 1:
            raise ConfigError("max_events must be >= 1")
        syn = self.workload.synthetic
        if syn is not None and not 0 < syn.load <= 1:
            raise ConfigError("synthetic load must be in (0, 1]")
        if (self.workload.downsample_factor is not None
                and self.workload.downsample_factor < 1):
            raise ConfigError("downsample factor must be >= 1")
        if (self.workload.poisson_mean_iat is not None
                and self.workload.poisson_mean_iat <= 0):
            raise ConfigError("poisson mean_iat must be > 0")

    def to_dict(self) -> dict:
        out = asdict(self)
        # drop unset optionals inside nested specs for a clean echo, but
        # keep every scalar default explicit
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **kwargs) -> "RunConfig":
        data = self.to_dict()
        data.update(kwargs)
        return RunConfig.from_dict(data)


def load_config(path: str, overrides: Optional[list[str]] = None) -> RunConfig:
    """Read a JSON config file, apply dotted-path overrides, and parse."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides or []:
        apply_override(data, item)
    return RunConfig.from_dict(data)


def apply_override(data: dict, item: str) -> None:
    """Apply one 'a.b.c=value' override; values parse as JSON when possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    path, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    parts = path.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {path!r} crosses a scalar")
    node[parts[-1]] = value
