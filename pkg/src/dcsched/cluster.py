"""DC layout and the two kinds of availability state the schedulers keep.

A DC is ``lm_count`` clusters of ``gm_count * workers_per_partition`` workers
each; the slice of a cluster assigned to one global scheduler is a partition.
Workers are numbered so that a cluster is one contiguous index range and a
partition a contiguous sub-range:

    widx = (lm * gm_count + gm) * workers_per_partition + slot

``ClusterState`` is a cluster manager's authoritative view of its own
workers. ``GlobalView`` is a global scheduler's possibly stale picture of the
whole DC, kept as a byte per worker plus per-partition free counts so the
scan kernels can skip saturated partitions in O(1).
"""
from __future__ import annotations

import random
import re
from array import array
from dataclasses import dataclass
from typing import Optional

from . import _core

LABEL_RE = re.compile(r"^[A-Z]+[0-9]+_[0-9]+$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    gm_count: int
    lm_count: int
    workers_per_partition: int

    def __post_init__(self):
        if min(self.gm_count, self.lm_count, self.workers_per_partition) < 1:
            raise ConfigError("topology counts must be >= 1")

    @property
    def total_workers(self) -> int:
        return self.gm_count * self.lm_count * self.workers_per_partition

    @property
    def partition_count(self) -> int:
        return self.gm_count * self.lm_count

    @property
    def cluster_size(self) -> int:
        return self.gm_count * self.workers_per_partition

    # -- index arithmetic --------------------------------------------------

    def worker_index(self, lm: int, gm: int, slot: int) -> int:
        return (lm * self.gm_count + gm) * self.workers_per_partition + slot

    def lm_of(self, widx: int) -> int:
        return widx // self.cluster_size

    def owner_gm_of(self, widx: int) -> int:
        return (widx // self.workers_per_partition) % self.gm_count

    def slot_of(self, widx: int) -> int:
        return widx % self.workers_per_partition

    def partition_id(self, lm: int, gm: int) -> int:
        return lm * self.gm_count + gm

    def cluster_range(self, lm: int) -> tuple[int, int]:
        return lm * self.cluster_size, (lm + 1) * self.cluster_size


def build_topology(gm_count: int, lm_count: int,
                   workers_per_partition: int) -> Topology:
    return Topology(gm_count, lm_count, workers_per_partition)


def resolve_topology(total_workers: Optional[int] = None,
                     gm_count: Optional[int] = None,
                     lm_count: Optional[int] = None,
                     workers_per_partition: Optional[int] = None) -> Topology:
    """Build a topology from explicit counts or a target DC size.

    A size target is factorized near the default 8 GM x 10 LM shape; any
    factorization within +-1% of the target is acceptable, preferring exact
    totals and then shapes closest to the default.
    """
    if gm_count or lm_count or workers_per_partition:
        if not (gm_count and lm_count and workers_per_partition):
            raise ConfigError("give all of gm_count/lm_count/"
                              "workers_per_partition or a total size")
        return Topology(gm_count, lm_count, workers_per_partition)
    if not total_workers or total_workers < 1:
        raise ConfigError("need a positive total worker count")
    best = None
    for g in range(1, 65):
        for l in range(1, 65):
            approx = total_workers / (g * l)
            for w in {max(1, int(approx)), max(1, int(approx) + 1)}:
                err = abs(g * l * w - total_workers) / total_workers
                if err > 0.01:
                    continue
                key = (err, abs(g - 8) + abs(l - 10), g, l, w)
                if best is None or key < best:
                    best = key
    if best is None:
        raise ConfigError(f"no gm/lm/partition factorization within 1% of "
                          f"{total_workers}; give explicit counts")
    _, _, g, l, w = best
    return Topology(g, l, w)


# -- worker labels ---------------------------------------------------------

def _gm_letters(gm: int) -> str:
    # bijective base-26: 0 -> A, 25 -> Z, 26 -> AA
    out = []
    n = gm + 1
    while n:
        n, r = divmod(n - 1, 26)
        out.append(chr(ord("A") + r))
    return "".join(reversed(out))


def _gm_from_letters(s: str) -> int:
    n = 0
    for ch in s:
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n - 1


def worker_label(topo: Topology, widx: int) -> str:
    """Display label `<GM letters><LM number>_<slot>`, e.g. A1_1."""
    return (f"{_gm_letters(topo.owner_gm_of(widx))}"
            f"{topo.lm_of(widx) + 1}_{topo.slot_of(widx) + 1}")


def parse_worker_label(topo: Topology, label: str) -> int:
    m = re.match(r"^([A-Z]+)([0-9]+)_([0-9]+)$", label)
    if not m:
        raise ValueError(f"bad worker label {label!r}")
    gm = _gm_from_letters(m.group(1))
    lm = int(m.group(2)) - 1
    slot = int(m.group(3)) - 1
    if not (0 <= gm < topo.gm_count and 0 <= lm < topo.lm_count
            and 0 <= slot < topo.workers_per_partition):
        raise ValueError(f"label {label!r} outside topology bounds")
    return topo.worker_index(lm, gm, slot)


def all_labels(topo: Topology) -> list[str]:
    return [worker_label(topo, w) for w in range(topo.total_workers)]


# -- authoritative cluster state (one per cluster manager) ------------------

class SimStateError(RuntimeError):
    """Authoritative state was driven into an impossible transition."""


@dataclass(slots=True)
class Snapshot:
    """Pure copy of one cluster's availability, stamped with virtual time."""
    lm_index: int
    taken_at: float
    flags: bytes


class ClusterState:
    """Up-to-date free/busy state of one cluster, with launch gating."""

    def __init__(self, topo: Topology, lm_index: int):
        self.topo = topo
        self.lm_index = lm_index
        self.base, self.end = topo.cluster_range(lm_index)
        self.flags = bytearray(b"\x01" * (self.end - self.base))
        self.running: dict[int, object] = {}  # widx -> in-flight task

    def is_free(self, widx: int) -> bool:
        return self.flags[widx - self.base] == 1

    def try_launch(self, widx: int, run) -> bool:
        """Verify-and-claim: False when the worker is already busy."""
        if not (self.base <= widx < self.end):
            raise ValueError(f"worker {widx} does not belong to cluster "
                             f"{self.lm_index}")
        off = widx - self.base
        if self.flags[off] == 0:
            return False
        self.flags[off] = 0
        self.running[widx] = run
        return True

    def release(self, widx: int) -> None:
        if widx not in self.running:
            raise SimStateError(f"release of idle worker {widx}")
        del self.running[widx]
        self.flags[widx - self.base] = 1

    def busy_count(self) -> int:
        return len(self.running)

    def snapshot(self, now: float) -> Snapshot:
        return Snapshot(self.lm_index, now, bytes(self.flags))


# -- eventually-consistent global view (one per global scheduler) -----------

class GlobalView:
    """A scheduler's availability flags for every worker in the DC.

    Free counts per partition are kept internally consistent with the flags;
    they may of course disagree with the true cluster state until the next
    update. Partition and worker visit orders are a per-scheduler seeded
    shuffle, and claims advance a round-robin cursor to the partition that
    supplied the worker so consecutive claims saturate one partition before
    moving on.
    """

    def __init__(self, topo: Topology, gm_index: int, rng: random.Random):
        self.topo = topo
        self.gm_index = gm_index
        total = topo.total_workers
        wpp = topo.workers_per_partition
        self.flags = bytearray(b"\x01" * total)
        self.part_free = array("i", [wpp] * topo.partition_count)
        internal = [topo.partition_id(lm, gm_index)
                    for lm in range(topo.lm_count)]
        external = [topo.partition_id(lm, gm)
                    for lm in range(topo.lm_count)
                    for gm in range(topo.gm_count) if gm != gm_index]
        rng.shuffle(internal)
        rng.shuffle(external)
        self.internal_pids = array("i", internal)
        self.external_pids = array("i", external)
        order = []
        offsets = array("i", [0] * (topo.partition_count + 1))
        for pid in range(topo.partition_count):
            workers = list(range(pid * wpp, (pid + 1) * wpp))
            rng.shuffle(workers)
            order.extend(workers)
            offsets[pid + 1] = len(order)
        self.worker_order = array("i", order)
        self.order_off = offsets
        self.internal_cursor = 0
        self.external_cursor = 0
        self.last_update: dict[int, float] = {}

    def claim(self) -> int:
        """Pick and optimistically mark busy a view-free worker, or -1."""
        w, cur = _core.claim_next(self.flags, self.part_free,
                                  self.internal_pids, self.internal_cursor,
                                  self.worker_order, self.order_off)
        if w >= 0:
            self.internal_cursor = cur
            return w
        if len(self.external_pids):
            w, cur = _core.claim_next(self.flags, self.part_free,
                                      self.external_pids,
                                      self.external_cursor,
                                      self.worker_order, self.order_off)
            if w >= 0:
                self.external_cursor = cur
                return w
        return -1

    def set_free(self, widx: int) -> None:
        if self.flags[widx] == 0:
            self.flags[widx] = 1
            self.part_free[widx // self.topo.workers_per_partition] += 1

    def set_busy(self, widx: int) -> None:
        if self.flags[widx] == 1:
            self.flags[widx] = 0
            self.part_free[widx // self.topo.workers_per_partition] -= 1

    def apply_snapshot(self, snap: Snapshot) -> bool:
        """Wholesale-replace one cluster's flags; stale timestamps ignored."""
        last = self.last_update.get(snap.lm_index)
        if last is not None and snap.taken_at < last:
            return False
        self.last_update[snap.lm_index] = snap.taken_at
        topo = self.topo
        base, _end = topo.cluster_range(snap.lm_index)
        _core.refresh_cluster(self.flags, self.part_free, snap.flags, base,
                              snap.lm_index * topo.gm_count,
                              (snap.lm_index + 1) * topo.gm_count,
                              topo.workers_per_partition)
        return True

    def free_total(self) -> int:
        return sum(self.part_free)
