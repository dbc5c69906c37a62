"""Deterministic discrete-event engine with a constant-latency message fabric.

Entities (schedulers, cluster managers, workers) are plain objects registered
under string ids. A single run is strictly sequential: events are processed
in nondecreasing fire-time order, ties broken by insertion order, so a run is
a pure function of (config, seed). Entity processing takes zero virtual time;
only network hops and queuing advance anything.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Optional


class SimError(Exception):
    """Base class for simulator faults."""


class CausalityError(SimError):
    """An event was scheduled in the past (a scheduler implementation bug)."""


class UnknownEntityError(SimError):
    """A message was addressed to an unregistered entity."""


class LivelockError(SimError):
    """The event-count safety limit was exceeded."""


@dataclass(slots=True)
class JobArrival:
    job: Any


@dataclass(slots=True)
class MessageDelivery:
    src: str
    dst: str
    msg: Any


@dataclass(slots=True)
class TaskFinished:
    worker: str
    run: Any


@dataclass(slots=True)
class HeartbeatTick:
    lm: str


#: default network delay per message hop, in virtual seconds (0.5 ms)
DEFAULT_NET_DELAY = 0.0005


class Simulation:
    """Virtual clock + ordered event queue + message fabric."""

    def __init__(self, net_delay: float = DEFAULT_NET_DELAY,
                 max_events: int = 100_000_000,
                 event_log: Optional[list] = None):
        if net_delay <= 0:
            raise ValueError("net_delay must be > 0")
        self.net_delay = net_delay
        self.max_events = max_events
        self.now = 0.0
        self.event_log = event_log
        self._queue: list = []
        self._seq = 0
        self._entities: dict[str, Any] = {}
        self._job_handler: Optional[Callable] = None
        self.messages_sent = 0
        self.messages_delivered = 0
        self.events_processed = 0

    # -- setup ------------------------------------------------------------

    def add_entity(self, entity_id: str, handler: Any) -> None:
        if entity_id in self._entities:
            raise ValueError(f"duplicate entity id {entity_id!r}")
        self._entities[entity_id] = handler

    def set_job_handler(self, fn: Callable) -> None:
        """`fn(sim, job)` is invoked for every JobArrival event."""
        self._job_handler = fn

    # -- event scheduling --------------------------------------------------

    def schedule_event(self, t: float, payload: Any) -> int:
        """Enqueue `payload` to fire at virtual time `t`; returns the event id."""
        if t < self.now:
            raise CausalityError(
                f"event scheduled at t={t} before now={self.now}")
        eid = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (t, eid, payload))
        return eid

    def send_message(self, src: str, dst: str, msg: Any) -> int:
        """Deliver `msg` to entity `dst` after one network hop."""
        if dst not in self._entities:
            raise UnknownEntityError(f"unknown destination entity {dst!r}")
        self.messages_sent += 1
        return self.schedule_event(self.now + self.net_delay,
                                   MessageDelivery(src, dst, msg))

    # -- main loop ---------------------------------------------------------

    def run_until_idle(self) -> float:
        """Process events until the queue drains; returns the final clock."""
        queue = self._queue
        log = self.event_log
        while queue:
            t, _eid, payload = heapq.heappop(queue)
            self.now = t
            self.events_processed += 1
            if self.events_processed > self.max_events:
                raise LivelockError(
                    f"exceeded {self.max_events} events at t={t}; "
                    f"next payload {payload!r}")
            cls = payload.__class__
            if cls is MessageDelivery:
                self.messages_delivered += 1
                if log is not None:
                    log.append((t, payload.dst, "message",
                                f"from={payload.src} "
                                f"{payload.msg.__class__.__name__}"))
                self._entities[payload.dst].on_message(
                    self, payload.src, payload.msg)
            elif cls is TaskFinished:
                if log is not None:
                    log.append((t, payload.worker, "task_end",
                                f"job={payload.run.job_id} "
                                f"task={payload.run.task_index}"))
                self._entities[payload.worker].on_task_finished(
                    self, payload.run)
            elif cls is JobArrival:
                if log is not None:
                    log.append((t, "dispatcher", "job_arrival",
                                f"job={payload.job.job_id}"))
                if self._job_handler is None:
                    raise SimError("no job handler registered")
                self._job_handler(self, payload.job)
            elif cls is HeartbeatTick:
                if log is not None:
                    log.append((t, payload.lm, "heartbeat", ""))
                self._entities[payload.lm].on_heartbeat(self)
            else:  # pragma: no cover - payloads are created by this module
                raise SimError(f"unknown event payload {payload!r}")
        return self.now
