"""Sparrow-style distributed scheduler: batch sampling with late binding.

Per job of n tasks a scheduler sends d*n reservation probes to distinct
random workers. Workers queue reservations; when one reaches the queue head
the worker calls the scheduler back, which answers with the next undispatched
task or a cancellation. Tasks therefore go to the first n workers to respond.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .cluster import Topology, worker_label
from .kernel import Simulation, TaskFinished
from .metrics import RunRecorder, TaskRun
from .workload import JobSpec


@dataclass(slots=True)
class Probe:
    job_id: int
    sched: str


@dataclass(slots=True)
class Callback:
    """A reservation reached a worker's queue head."""
    job_id: int
    worker: int
    waited: float


@dataclass(slots=True)
class Assign:
    run: TaskRun


@dataclass(slots=True)
class Decline:
    """No task left for the reservation: cancel it."""
    job_id: int


@dataclass(slots=True)
class TaskDone:
    run: TaskRun


@dataclass(slots=True)
class _JobState:
    job: JobSpec
    next_task: int = 0


class SparrowScheduler:
    def __init__(self, fw: "SparrowFleet", index: int):
        self.fw = fw
        self.entity_id = f"ss/{index}"
        self.jobs: dict[int, _JobState] = {}

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        self.fw.recorder.job_submitted(job, self.entity_id)
        self.jobs[job.job_id] = _JobState(job)
        total = self.fw.topo.total_workers
        n_probes = min(self.fw.d * job.task_count, total)
        targets = self.fw.rng.sample(range(total), n_probes)
        self.fw.recorder.add_probes(n_probes)
        for w in targets:
            sim.send_message(self.entity_id, self.fw.worker_ids[w],
                             Probe(job.job_id, self.entity_id))

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is Callback:
            # reservations may reach queue heads long after the job's last
            # task completed; those late callbacks are cancelled here
            st = self.jobs[msg.job_id]
            if st.next_task < st.job.task_count:
                task = st.job.tasks[st.next_task]
                st.next_task += 1
                run = TaskRun(st.job.job_id, task.index, task.duration,
                              worker=msg.worker, sched=self.entity_id,
                              is_long=st.job.job_class == "long",
                              path_hops=4, worker_queue=msg.waited)
                sim.send_message(self.entity_id,
                                 self.fw.worker_ids[msg.worker],
                                 Assign(run))
            else:
                self.fw.recorder.cancelled_reservations += 1
                sim.send_message(self.entity_id,
                                 self.fw.worker_ids[msg.worker],
                                 Decline(msg.job_id))
        elif cls is TaskDone:
            run = msg.run
            if self.fw.recorder.task_acked(run, sim.now, run.path_hops,
                                           run.worker_queue):
                self.fw.finished += 1
        else:
            raise TypeError(f"scheduler got unexpected message {msg!r}")


class SparrowWorker:
    """Worker with a reservation queue; idles while a callback is in flight."""

    __slots__ = ("fw", "widx", "entity_id", "queue", "running", "awaiting")

    def __init__(self, fw: "SparrowFleet", widx: int):
        self.fw = fw
        self.widx = widx
        self.entity_id = fw.worker_ids[widx]
        self.queue: deque = deque()  # (sched_id, job_id, arrival)
        self.running: Optional[TaskRun] = None
        self.awaiting = False

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is Probe:
            self.fw.recorder.worker_queue_entries += 1
            self.queue.append((msg.sched, msg.job_id, sim.now))
            self._poll(sim)
        elif cls is Assign:
            self.awaiting = False
            self._start(sim, msg.run)
        elif cls is Decline:
            self.awaiting = False
            self._poll(sim)
        else:
            raise TypeError(f"worker got unexpected message {msg!r}")

    def _poll(self, sim: Simulation) -> None:
        if self.running is not None or self.awaiting or not self.queue:
            return
        sched, job_id, arrived = self.queue.popleft()
        self.awaiting = True
        sim.send_message(self.entity_id, sched,
                         Callback(job_id, self.widx, sim.now - arrived))

    def _start(self, sim: Simulation, run: TaskRun) -> None:
        assert self.running is None
        self.running = run
        run.exec_start = sim.now
        self.fw.recorder.task_started(run, sim.now)
        sim.schedule_event(sim.now + run.duration,
                           TaskFinished(self.entity_id, run))

    def on_task_finished(self, sim: Simulation, run: TaskRun) -> None:
        self.fw.recorder.task_finished(run, sim.now)
        self.running = None
        sim.send_message(self.entity_id, run.sched, TaskDone(run))
        self._poll(sim)


class SparrowFleet:
    """Schedulers + flat worker pool; jobs round-robin across schedulers."""

    def __init__(self, sim: Simulation, topo: Topology, recorder: RunRecorder,
                 total_jobs: int, seed: int, d: int = 2,
                 scheduler_count: Optional[int] = None):
        if d < 1:
            raise ValueError("probe ratio d must be >= 1")
        self.topo = topo
        self.recorder = recorder
        self.d = d
        self.total_jobs = total_jobs
        self.finished = 0
        self.rng = random.Random(seed)
        self._rr = 0
        self.worker_ids = [f"w/{worker_label(topo, w)}"
                           for w in range(topo.total_workers)]
        count = scheduler_count or topo.gm_count
        self.schedulers = [SparrowScheduler(self, i) for i in range(count)]
        self.workers = [SparrowWorker(self, w)
                        for w in range(topo.total_workers)]
        for s in self.schedulers:
            sim.add_entity(s.entity_id, s)
        for wk in self.workers:
            sim.add_entity(wk.entity_id, wk)

    def work_remaining(self) -> bool:
        return self.finished < self.total_jobs

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        if job.task_count > self.topo.total_workers:
            raise ValueError(
                f"job {job.job_id} has more tasks ({job.task_count}) than "
                f"the DC has workers; reservations cannot cover it")
        sched = self.schedulers[self._rr % len(self.schedulers)]
        self._rr += 1
        sched.on_job(sim, job)
