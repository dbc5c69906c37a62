"""Eagle-style hybrid scheduler.

Long jobs go to one centralized scheduler that places tasks greedily on free
workers of the long partition (every worker outside the reserved short
partition), queues centrally when none are free, and pushes a timestamped
bit vector of long-task locations to the workers on every placement. Short
jobs go to distributed schedulers that probe like Sparrow; a worker currently
executing a long task rejects the probe and returns its stored bit vector,
and the scheduler re-sends the probe to a worker the freshest vector marks
long-free, falling back to a random short-partition worker on a second
rejection. On task completion a worker holds on for one round-trip while its
scheduler looks up the next unscheduled task of the same job (sticky batch
probing) before releasing itself to its queue.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .cluster import Topology, worker_label
from .kernel import Simulation, TaskFinished
from .metrics import RunRecorder, TaskRun
from .workload import JobSpec, LONG


@dataclass(slots=True)
class Probe:
    job_id: int
    sched: str
    resends: int   # reject/re-send round trips this reservation has cost
    final: bool    # short-partition fallback probes always queue


@dataclass(slots=True)
class ProbeReject:
    job_id: int
    resends: int
    bits: Optional[bytes]
    bits_ts: float


@dataclass(slots=True)
class Callback:
    job_id: int
    worker: int
    waited: float
    resends: int


@dataclass(slots=True)
class Assign:
    run: TaskRun


@dataclass(slots=True)
class Decline:
    job_id: int


@dataclass(slots=True)
class TaskDone:
    run: TaskRun


@dataclass(slots=True)
class BitsPush:
    """Long-task location vector broadcast by the centralized scheduler."""
    ts: float
    bits: bytes


@dataclass(slots=True)
class _JobState:
    job: JobSpec
    next_task: int = 0

    @property
    def exhausted(self) -> bool:
        return self.next_task >= self.job.task_count


class CentralScheduler:
    """Places long jobs with its own up-to-date view of the long partition."""

    def __init__(self, fw: "EagleFleet"):
        self.fw = fw
        self.entity_id = "cs"
        self.jobs: dict[int, _JobState] = {}
        self.free = deque(fw.long_partition)
        self.bits = bytearray(fw.topo.total_workers)
        self.central_queue: deque[int] = deque()  # job ids with unplaced tasks

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        self.fw.recorder.job_submitted(job, self.entity_id)
        st = self.jobs[job.job_id] = _JobState(job)
        placed = False
        while self.free and not st.exhausted:
            self._dispatch(sim, st, self.free.popleft(), hops=2)
            placed = True
        if not st.exhausted:
            self.central_queue.append(job.job_id)
        if placed:
            self._broadcast(sim)

    def _dispatch(self, sim: Simulation, st: _JobState, worker: int,
                  hops: int) -> None:
        task = st.job.tasks[st.next_task]
        st.next_task += 1
        run = TaskRun(st.job.job_id, task.index, task.duration, worker=worker,
                      sched=self.entity_id, is_long=True, path_hops=hops)
        self.bits[worker] = 1
        sim.send_message(self.entity_id, self.fw.worker_ids[worker],
                         Assign(run))

    def _broadcast(self, sim: Simulation) -> None:
        push = BitsPush(sim.now, bytes(self.bits))
        for w in range(self.fw.topo.total_workers):
            sim.send_message(self.entity_id, self.fw.worker_ids[w], push)

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        if msg.__class__ is not TaskDone:
            raise TypeError(f"centralized scheduler got {msg!r}")
        run = msg.run
        if self.fw.recorder.task_acked(run, sim.now, run.path_hops,
                                       run.worker_queue):
            self.fw.finished += 1
        self.bits[run.worker] = 0
        st = self.jobs[run.job_id]
        if not st.exhausted:
            # sticky: the worker pulls the next task of the same job
            self._dispatch(sim, st, run.worker, hops=3)
            self._broadcast(sim)
            return
        while self.central_queue:
            st2 = self.jobs[self.central_queue[0]]
            if st2.exhausted:
                self.central_queue.popleft()
                continue
            self._dispatch(sim, st2, run.worker, hops=2)
            if st2.exhausted:
                self.central_queue.popleft()
            self._broadcast(sim)
            return
        self.free.append(run.worker)
        sim.send_message(self.entity_id, self.fw.worker_ids[run.worker],
                         Decline(run.job_id))


class DistScheduler:
    """Probing scheduler for short jobs, with rejection-informed re-sends."""

    def __init__(self, fw: "EagleFleet", index: int):
        self.fw = fw
        self.entity_id = f"ds/{index}"
        self.jobs: dict[int, _JobState] = {}
        self.bits: Optional[bytes] = None
        self.bits_ts = -1.0

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        self.fw.recorder.job_submitted(job, self.entity_id)
        self.jobs[job.job_id] = _JobState(job)
        total = self.fw.topo.total_workers
        n_probes = min(self.fw.d * job.task_count, total)
        targets = self.fw.rng.sample(range(total), n_probes)
        self.fw.recorder.add_probes(n_probes)
        for w in targets:
            sim.send_message(self.entity_id, self.fw.worker_ids[w],
                             Probe(job.job_id, self.entity_id, 0, False))

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is Callback:
            self._on_callback(sim, msg)
        elif cls is ProbeReject:
            self._on_reject(sim, msg)
        elif cls is TaskDone:
            self._on_done(sim, msg.run)
        else:
            raise TypeError(f"distributed scheduler got {msg!r}")

    def _on_callback(self, sim: Simulation, cb: Callback) -> None:
        st = self.jobs.get(cb.job_id)
        if st is None or st.exhausted:
            self.fw.recorder.cancelled_reservations += 1
            sim.send_message(self.entity_id, self.fw.worker_ids[cb.worker],
                             Decline(cb.job_id))
            return
        task = st.job.tasks[st.next_task]
        st.next_task += 1
        run = TaskRun(st.job.job_id, task.index, task.duration,
                      worker=cb.worker, sched=self.entity_id,
                      path_hops=4 + 2 * cb.resends, worker_queue=cb.waited)
        sim.send_message(self.entity_id, self.fw.worker_ids[cb.worker],
                         Assign(run))

    def _on_reject(self, sim: Simulation, rej: ProbeReject) -> None:
        self.fw.rejections += 1
        if rej.bits is not None and rej.bits_ts > self.bits_ts:
            self.bits, self.bits_ts = rej.bits, rej.bits_ts
        st = self.jobs.get(rej.job_id)
        if st is None or st.exhausted:
            return  # every task already dispatched; drop the probe
        if rej.resends == 0:
            target = self._pick_long_free()
            if target is not None:
                self.fw.recorder.add_probes(1)
                sim.send_message(self.entity_id, self.fw.worker_ids[target],
                                 Probe(rej.job_id, self.entity_id, 1, False))
                return
        # rejected again (or no usable vector): random short-partition pick
        pool = self.fw.short_partition or range(self.fw.topo.total_workers)
        target = self.fw.rng.choice(pool)
        self.fw.recorder.add_probes(1)
        sim.send_message(self.entity_id, self.fw.worker_ids[target],
                         Probe(rej.job_id, self.entity_id, rej.resends + 1,
                               True))

    def _pick_long_free(self) -> Optional[int]:
        if self.bits is None:
            return self.fw.rng.choice(range(self.fw.topo.total_workers))
        candidates = [w for w in range(self.fw.topo.total_workers)
                      if not self.bits[w]]
        if not candidates:
            return None
        return self.fw.rng.choice(candidates)

    def _on_done(self, sim: Simulation, run: TaskRun) -> None:
        if self.fw.recorder.task_acked(run, sim.now, run.path_hops,
                                       run.worker_queue):
            self.fw.finished += 1
        st = self.jobs[run.job_id]
        if not st.exhausted:
            # sticky: hand the freed worker the job's next unscheduled task
            task = st.job.tasks[st.next_task]
            st.next_task += 1
            nxt = TaskRun(st.job.job_id, task.index, task.duration,
                          worker=run.worker, sched=self.entity_id,
                          path_hops=3)
            sim.send_message(self.entity_id, self.fw.worker_ids[run.worker],
                             Assign(nxt))
        else:
            sim.send_message(self.entity_id, self.fw.worker_ids[run.worker],
                             Decline(run.job_id))


class EagleWorker:
    """Queue of reservations and direct tasks; rejects probes while a long
    task is executing; holds for one round-trip after each completion."""

    __slots__ = ("fw", "widx", "entity_id", "queue", "running", "awaiting",
                 "bits", "bits_ts")

    def __init__(self, fw: "EagleFleet", widx: int):
        self.fw = fw
        self.widx = widx
        self.entity_id = fw.worker_ids[widx]
        self.queue: deque = deque()
        self.running: Optional[TaskRun] = None
        self.awaiting = False
        self.bits: Optional[bytes] = None
        self.bits_ts = -1.0

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is Probe:
            # fallback probes always queue; they target the short partition,
            # which never runs long tasks, so this only matters when that
            # partition is empty
            if (self.running is not None and self.running.is_long
                    and not msg.final):
                sim.send_message(self.entity_id, msg.sched,
                                 ProbeReject(msg.job_id, msg.resends,
                                             self.bits, self.bits_ts))
                return
            self.fw.recorder.worker_queue_entries += 1
            self.queue.append(("res", msg.sched, msg.job_id, msg.resends,
                               sim.now))
            self._poll(sim)
        elif cls is Assign:
            self.awaiting = False
            if self.running is None:
                self._start(sim, msg.run)
            else:
                # direct dispatch raced onto a busy worker: queue it
                self.fw.recorder.worker_queue_entries += 1
                self.queue.append(("task", msg.run, sim.now))
        elif cls is Decline:
            self.awaiting = False
            self._poll(sim)
        elif cls is BitsPush:
            if msg.ts >= self.bits_ts:
                self.bits, self.bits_ts = msg.bits, msg.ts
        else:
            raise TypeError(f"worker got unexpected message {msg!r}")

    def _poll(self, sim: Simulation) -> None:
        if self.running is not None or self.awaiting or not self.queue:
            return
        entry = self.queue.popleft()
        if entry[0] == "res":
            _, sched, job_id, resends, arrived = entry
            self.awaiting = True
            sim.send_message(self.entity_id, sched,
                             Callback(job_id, self.widx, sim.now - arrived,
                                      resends))
        else:
            _, run, arrived = entry
            run.worker_queue = sim.now - arrived
            self._start(sim, run)

    def _start(self, sim: Simulation, run: TaskRun) -> None:
        assert self.running is None
        run.worker = self.widx
        self.running = run
        run.exec_start = sim.now
        self.fw.recorder.task_started(run, sim.now)
        sim.schedule_event(sim.now + run.duration,
                           TaskFinished(self.entity_id, run))

    def on_task_finished(self, sim: Simulation, run: TaskRun) -> None:
        self.fw.recorder.task_finished(run, sim.now)
        self.running = None
        self.awaiting = True  # hold for the sticky round-trip
        sim.send_message(self.entity_id, run.sched, TaskDone(run))


class EagleFleet:
    """Centralized + distributed schedulers over a flat worker pool."""

    def __init__(self, sim: Simulation, topo: Topology, recorder: RunRecorder,
                 total_jobs: int, seed: int, d: int = 2,
                 short_fraction: float = 0.1,
                 scheduler_count: Optional[int] = None):
        if d < 1:
            raise ValueError("probe ratio d must be >= 1")
        if not 0 <= short_fraction < 1:
            raise ValueError("short_fraction must be in [0, 1)")
        self.topo = topo
        self.recorder = recorder
        self.d = d
        self.total_jobs = total_jobs
        self.finished = 0
        self.rejections = 0
        self.rng = random.Random(seed)
        total = topo.total_workers
        n_short = int(short_fraction * total)
        # tail of the index range is reserved for short tasks
        self.short_partition = list(range(total - n_short, total))
        self.long_partition = list(range(total - n_short))
        self.worker_ids = [f"w/{worker_label(topo, w)}"
                           for w in range(total)]
        self._rr = 0
        count = scheduler_count or topo.gm_count
        self.cs = CentralScheduler(self)
        self.dss = [DistScheduler(self, i) for i in range(count)]
        self.workers = [EagleWorker(self, w) for w in range(total)]
        sim.add_entity(self.cs.entity_id, self.cs)
        for ds in self.dss:
            sim.add_entity(ds.entity_id, ds)
        for wk in self.workers:
            sim.add_entity(wk.entity_id, wk)

    def work_remaining(self) -> bool:
        return self.finished < self.total_jobs

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        # jobs larger than the DC are fine here: sticky probing and the
        # central queue both reuse workers within one job
        if job.job_class == LONG:
            if not self.long_partition:
                raise ValueError("long job with an empty long partition")
            self.cs.on_job(sim, job)
        else:
            ds = self.dss[self._rr % len(self.dss)]
            self._rr += 1
            ds.on_job(sim, job)
