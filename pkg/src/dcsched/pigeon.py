"""Pigeon-style federated scheduler.

State-blind distributors spray a job's tasks round-robin across all group
coordinators. Each coordinator owns a worker group: a task is launched on a
free worker or queued at the coordinator in a high- (short job) or low-
(long job) priority queue. Some workers per group are reserved for
high-priority tasks only. When a worker frees, the coordinator dequeues with
weighted fair queuing: after `weight` consecutive high picks the next pick
must be low if one is queued and the worker is not reserved. Tasks sent to a
saturated group stay there; they are never migrated to another group.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .cluster import Topology, worker_label
from .kernel import Simulation, TaskFinished
from .metrics import RunRecorder, TaskRun
from .workload import JobSpec, LONG


@dataclass(slots=True)
class GroupTask:
    run: TaskRun


@dataclass(slots=True)
class Assign:
    run: TaskRun


@dataclass(slots=True)
class WorkerDone:
    run: TaskRun


@dataclass(slots=True)
class DoneRelay:
    """Coordinator forwards a completion to the job's distributor."""
    run: TaskRun


class Distributor:
    def __init__(self, fw: "PigeonFleet", index: int):
        self.fw = fw
        self.entity_id = f"pd/{index}"
        self.cursor = index  # stagger distributors across groups

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        self.fw.recorder.job_submitted(job, self.entity_id)
        groups = self.fw.coordinators
        for task in job.tasks:
            run = TaskRun(job.job_id, task.index, task.duration,
                          sched=self.entity_id,
                          is_long=job.job_class == LONG, path_hops=4)
            coord = groups[self.cursor % len(groups)]
            self.cursor += 1
            sim.send_message(self.entity_id, coord.entity_id, GroupTask(run))

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        if msg.__class__ is not DoneRelay:
            raise TypeError(f"distributor got unexpected message {msg!r}")
        run = msg.run
        if self.fw.recorder.task_acked(run, sim.now, run.path_hops,
                                       run.worker_queue):
            self.fw.finished += 1


class Coordinator:
    """Owns one worker group; queues define priority, WFQ defines dequeue."""

    def __init__(self, fw: "PigeonFleet", index: int, workers: list[int],
                 reserved: int):
        self.fw = fw
        self.index = index
        self.entity_id = f"pc/{index}"
        self.workers = workers
        # reserved workers execute high-priority tasks only
        self.reserved = frozenset(workers[:reserved])
        self.free_plain = deque(w for w in workers if w not in self.reserved)
        self.free_reserved = deque(w for w in workers if w in self.reserved)
        self.queue_high: deque[TaskRun] = deque()
        self.queue_low: deque[TaskRun] = deque()
        self.high_streak = 0

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is GroupTask:
            self._place(sim, msg.run)
        elif cls is WorkerDone:
            self._on_done(sim, msg.run)
        else:
            raise TypeError(f"coordinator got unexpected message {msg!r}")

    def _place(self, sim: Simulation, run: TaskRun) -> None:
        if run.is_long:
            if self.free_plain:
                self._dispatch(sim, run, self.free_plain.popleft(), "low",
                               "place")
            else:
                self.queue_low.append(run)
        else:
            if self.free_plain:
                self._dispatch(sim, run, self.free_plain.popleft(), "high",
                               "place")
            elif self.free_reserved:
                self._dispatch(sim, run, self.free_reserved.popleft(), "high",
                               "place")
            else:
                self.queue_high.append(run)

    def _dispatch(self, sim: Simulation, run: TaskRun, worker: int,
                  prio: str, source: str) -> None:
        run.worker = worker
        self.fw.recorder.dispatch_log.append(
            (source, self.index, prio, worker in self.reserved))
        sim.send_message(self.entity_id, self.fw.worker_ids[worker],
                         Assign(run))

    def _on_done(self, sim: Simulation, run: TaskRun) -> None:
        sim.send_message(self.entity_id, run.sched, DoneRelay(run))
        self._feed(sim, run.worker)

    def _feed(self, sim: Simulation, worker: int) -> None:
        """Weighted-fair dequeue onto a worker that just became free."""
        if worker in self.reserved:
            if self.queue_high:
                self.high_streak += 1
                self._dispatch(sim, self.queue_high.popleft(), worker, "high",
                               "feed")
            else:
                self.free_reserved.append(worker)
            return
        if (self.high_streak >= self.fw.weight and self.queue_low):
            self.high_streak = 0
            self._dispatch(sim, self.queue_low.popleft(), worker, "low",
                           "feed")
        elif self.queue_high:
            self.high_streak += 1
            self._dispatch(sim, self.queue_high.popleft(), worker, "high",
                           "feed")
        elif self.queue_low:
            self.high_streak = 0
            self._dispatch(sim, self.queue_low.popleft(), worker, "low",
                           "feed")
        else:
            self.free_plain.append(worker)


class PigeonWorker:
    """Single-slot worker reporting completions to its coordinator."""

    __slots__ = ("fw", "widx", "entity_id", "coord", "running")

    def __init__(self, fw: "PigeonFleet", widx: int, coord: str):
        self.fw = fw
        self.widx = widx
        self.entity_id = fw.worker_ids[widx]
        self.coord = coord
        self.running: Optional[TaskRun] = None

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        if msg.__class__ is not Assign:
            raise TypeError(f"worker got unexpected message {msg!r}")
        run = msg.run
        if self.running is not None:
            raise RuntimeError(f"worker {self.widx} double-booked")
        self.running = run
        run.exec_start = sim.now
        self.fw.recorder.task_started(run, sim.now)
        sim.schedule_event(sim.now + run.duration,
                           TaskFinished(self.entity_id, run))

    def on_task_finished(self, sim: Simulation, run: TaskRun) -> None:
        self.fw.recorder.task_finished(run, sim.now)
        self.running = None
        sim.send_message(self.entity_id, self.coord, WorkerDone(run))


class PigeonFleet:
    def __init__(self, sim: Simulation, topo: Topology, recorder: RunRecorder,
                 total_jobs: int, weight: int = 2,
                 reserved_per_group: int = 2,
                 group_count: Optional[int] = None,
                 distributor_count: Optional[int] = None):
        if weight < 1:
            raise ValueError("WFQ weight must be >= 1")
        if reserved_per_group < 0:
            raise ValueError("reserved_per_group must be >= 0")
        self.topo = topo
        self.recorder = recorder
        self.weight = weight
        self.total_jobs = total_jobs
        self.finished = 0
        self._rr = 0
        total = topo.total_workers
        self.worker_ids = [f"w/{worker_label(topo, w)}"
                           for w in range(total)]
        groups = group_count or topo.lm_count
        if groups > total:
            raise ValueError("more groups than workers")
        # contiguous groups, remainder spread over the first ones
        size, extra = divmod(total, groups)
        self.coordinators: list[Coordinator] = []
        start = 0
        for g in range(groups):
            count = size + (1 if g < extra else 0)
            members = list(range(start, start + count))
            start += count
            # keep at least one unreserved worker so low tasks cannot starve
            reserved = min(reserved_per_group, max(len(members) - 1, 0))
            self.coordinators.append(Coordinator(self, g, members, reserved))
        dists = distributor_count or topo.gm_count
        self.distributors = [Distributor(self, i) for i in range(dists)]
        self.workers = []
        for coord in self.coordinators:
            for w in coord.workers:
                self.workers.append(PigeonWorker(self, w, coord.entity_id))
        for c in self.coordinators:
            sim.add_entity(c.entity_id, c)
        for d in self.distributors:
            sim.add_entity(d.entity_id, d)
        for wk in sorted(self.workers, key=lambda w: w.widx):
            sim.add_entity(wk.entity_id, wk)

    def work_remaining(self) -> bool:
        return self.finished < self.total_jobs

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        dist = self.distributors[self._rr % len(self.distributors)]
        self._rr += 1
        dist.on_job(sim, job)
