"""Federated scheduler with an eventually-consistent global availability view.

Global managers (GMs) hold a stale-tolerant picture of every worker and map
whole jobs optimistically, preferring their own partitions and borrowing
from other GMs' partitions (repartition) when their own are saturated.
Local managers (LMs) own the truth for one cluster: they verify each mapping,
launch the valid ones, and bounce the rest back in a single batched reply
that piggybacks a full cluster snapshot. Rejected tasks requeue at the front
of the GM's queue. Periodic LM heartbeats refresh every GM's view; when a
borrowed worker frees, the owning GM is notified immediately (or left to the
next heartbeat, per config).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .cluster import (ClusterState, GlobalView, Snapshot, Topology,
                      worker_label)
from .kernel import HeartbeatTick, Simulation, TaskFinished
from .metrics import RunRecorder, TaskRun
from .workload import JobSpec, LONG

OWNER_NOTIFY_IMMEDIATE = "immediate"
OWNER_NOTIFY_HEARTBEAT = "heartbeat"


# -- wire messages -----------------------------------------------------------

@dataclass(slots=True)
class MapBatch:
    """Task-to-worker mappings from one GM, all targeting one LM's cluster."""
    gm_index: int
    mappings: list


@dataclass(slots=True)
class BatchReply:
    lm_index: int
    launched: list
    invalid: list
    snapshot: Optional[Snapshot]  # attached iff any mapping was invalid


@dataclass(slots=True)
class LaunchTask:
    run: TaskRun


@dataclass(slots=True)
class WorkerDone:
    run: TaskRun


@dataclass(slots=True)
class TaskDone:
    run: TaskRun


@dataclass(slots=True)
class FreedNotice:
    """LM tells a partition's owner that a borrowed worker completed."""
    worker: int


@dataclass(slots=True)
class StateUpdate:
    snapshot: Snapshot


@dataclass(slots=True)
class _JobState:
    job: JobSpec
    attempts: list


class GlobalManager:
    """One scheduling entity holding a GlobalView and a FIFO job queue."""

    def __init__(self, fw: "MeghaCluster", gm_index: int, rng):
        self.fw = fw
        self.gm_index = gm_index
        self.entity_id = f"gm/{gm_index}"
        self.view = GlobalView(fw.topo, gm_index, rng)
        # queue items: (job state, deque of task indices left to map)
        self.queue: deque = deque()
        self.jobs: dict[int, _JobState] = {}

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        st = _JobState(job, [0] * job.task_count)
        self.jobs[job.job_id] = st
        self.fw.recorder.job_submitted(job, self.entity_id)
        self.queue.append((st, deque(range(job.task_count))))
        self.drain(sim)

    def drain(self, sim: Simulation) -> None:
        """Map queued tasks until the queue empties or the view shows no
        free worker; mappings are batched per target LM, size-capped."""
        topo = self.fw.topo
        while self.queue:
            st, pending = self.queue[0]
            per_lm: dict[int, list] = {}
            while pending:
                w = self.view.claim()
                if w < 0:
                    break
                idx = pending.popleft()
                st.attempts[idx] += 1
                run = TaskRun(st.job.job_id, idx, st.job.tasks[idx].duration,
                              worker=w, sched=self.entity_id,
                              borrowed=topo.owner_gm_of(w) != self.gm_index,
                              is_long=st.job.job_class == LONG,
                              path_hops=3 + 2 * (st.attempts[idx] - 1))
                per_lm.setdefault(topo.lm_of(w), []).append(run)
            limit = self.fw.batch_limit
            for lm, runs in per_lm.items():
                for i in range(0, len(runs), limit):
                    chunk = runs[i:i + limit]
                    self.fw.recorder.add_mappings(len(chunk))
                    sim.send_message(self.entity_id, f"lm/{lm}",
                                     MapBatch(self.gm_index, chunk))
            if pending:
                return  # view exhausted; this job stays at the front
            self.queue.popleft()

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is TaskDone:
            self._on_task_done(sim, msg.run)
        elif cls is BatchReply:
            self._on_reply(sim, msg)
        elif cls is StateUpdate:
            self.view.apply_snapshot(msg.snapshot)
            if self.queue:
                self.drain(sim)
        elif cls is FreedNotice:
            self.view.set_free(msg.worker)
            if self.queue:
                self.drain(sim)
        else:
            raise TypeError(f"GM got unexpected message {msg!r}")

    def _on_reply(self, sim: Simulation, reply: BatchReply) -> None:
        if reply.snapshot is not None:
            self.view.apply_snapshot(reply.snapshot)
        if reply.invalid:
            self.fw.recorder.add_invalid(len(reply.invalid))
            st = self.jobs[reply.invalid[0].job_id]
            self.queue.appendleft(
                (st, deque(run.task_index for run in reply.invalid)))
        self.drain(sim)

    def _on_task_done(self, sim: Simulation, run: TaskRun) -> None:
        st = self.jobs[run.job_id]
        done = self.fw.recorder.task_acked(run, sim.now, run.path_hops, 0.0)
        if done:
            del self.jobs[run.job_id]  # job completed and removed
            self.fw.finished += 1
        if not run.borrowed:
            # the freed worker may be reused immediately for queued work
            self.view.set_free(run.worker)
        if self.queue:
            self.drain(sim)


class LocalManager:
    """Authoritative manager of one cluster; verifies and launches mappings."""

    def __init__(self, fw: "MeghaCluster", lm_index: int):
        self.fw = fw
        self.lm_index = lm_index
        self.entity_id = f"lm/{lm_index}"
        self.state = ClusterState(fw.topo, lm_index)

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        cls = msg.__class__
        if cls is MapBatch:
            self._on_batch(sim, msg)
        elif cls is WorkerDone:
            self._on_worker_done(sim, msg.run)
        else:
            raise TypeError(f"LM got unexpected message {msg!r}")

    def _on_batch(self, sim: Simulation, batch: MapBatch) -> None:
        launched, invalid = [], []
        for run in batch.mappings:
            if self.state.try_launch(run.worker, run):
                launched.append(run)
                sim.send_message(self.entity_id,
                                 self.fw.worker_ids[run.worker],
                                 LaunchTask(run))
            else:
                invalid.append(run)
        snap = self.state.snapshot(sim.now) if invalid else None
        sim.send_message(self.entity_id, f"gm/{batch.gm_index}",
                         BatchReply(self.lm_index, launched, invalid, snap))

    def _on_worker_done(self, sim: Simulation, run: TaskRun) -> None:
        self.state.release(run.worker)
        if run.borrowed and self.fw.owner_notify == OWNER_NOTIFY_IMMEDIATE:
            owner = self.fw.topo.owner_gm_of(run.worker)
            sim.send_message(self.entity_id, f"gm/{owner}",
                             FreedNotice(run.worker))

    def on_heartbeat(self, sim: Simulation) -> None:
        if not self.fw.work_remaining():
            return  # let the queue drain; do not re-arm
        snap = self.state.snapshot(sim.now)
        for gm in range(self.fw.topo.gm_count):
            sim.send_message(self.entity_id, f"gm/{gm}", StateUpdate(snap))
        sim.schedule_event(sim.now + self.fw.heartbeat,
                           HeartbeatTick(self.entity_id))


class MeghaWorker:
    """A scheduling unit: runs exactly one task, no worker-side queue."""

    __slots__ = ("fw", "widx", "lm_index", "entity_id", "running")

    def __init__(self, fw: "MeghaCluster", widx: int):
        self.fw = fw
        self.widx = widx
        self.lm_index = fw.topo.lm_of(widx)
        self.entity_id = fw.worker_ids[widx]
        self.running: Optional[TaskRun] = None

    def on_message(self, sim: Simulation, src: str, msg) -> None:
        if msg.__class__ is not LaunchTask:
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
        sim.send_message(self.entity_id, f"lm/{self.lm_index}",
                         WorkerDone(run))
        sim.send_message(self.entity_id, run.sched, TaskDone(run))


class MeghaCluster:
    """Wires GMs, LMs, and workers onto a simulation and dispatches jobs."""

    def __init__(self, sim: Simulation, topo: Topology, recorder: RunRecorder,
                 total_jobs: int, seed_rngs, batch_limit: int = 50,
                 heartbeat: float = 5.0, heartbeat_offset: float = 0.0,
                 owner_notify: str = OWNER_NOTIFY_IMMEDIATE):
        self.topo = topo
        self.recorder = recorder
        self.batch_limit = batch_limit
        self.heartbeat = heartbeat
        self.owner_notify = owner_notify
        self.total_jobs = total_jobs
        self.finished = 0
        self._rr = 0
        self.worker_ids = [f"w/{worker_label(topo, w)}"
                           for w in range(topo.total_workers)]
        self.gms = [GlobalManager(self, g, seed_rngs(g))
                    for g in range(topo.gm_count)]
        self.lms = [LocalManager(self, l) for l in range(topo.lm_count)]
        self.workers = [MeghaWorker(self, w)
                        for w in range(topo.total_workers)]
        for gm in self.gms:
            sim.add_entity(gm.entity_id, gm)
        for lm in self.lms:
            sim.add_entity(lm.entity_id, lm)
        for wk in self.workers:
            sim.add_entity(wk.entity_id, wk)
        if heartbeat > 0:
            for lm in self.lms:
                sim.schedule_event(heartbeat_offset + heartbeat,
                                   HeartbeatTick(lm.entity_id))

    def work_remaining(self) -> bool:
        return self.finished < self.total_jobs

    def on_job(self, sim: Simulation, job: JobSpec) -> None:
        gm = self.gms[self._rr % len(self.gms)]
        self._rr += 1
        gm.on_job(sim, job)
