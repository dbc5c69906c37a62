import random
import re

import pytest

from dcsched.cluster import (LABEL_RE, ClusterState, ConfigError, GlobalView,
                             SimStateError, all_labels, build_topology,
                             parse_worker_label, resolve_topology,
                             worker_label)
from dcsched.metrics import TaskRun


def test_three_by_three_topology():
    topo = build_topology(3, 3, 3)
    assert topo.total_workers == 27
    assert "A1_1" in all_labels(topo)


def test_single_worker_topology():
    topo = build_topology(1, 1, 1)
    assert all_labels(topo) == ["A1_1"]


def test_zero_counts_rejected():
    with pytest.raises(ConfigError):
        build_topology(0, 3, 3)


def test_resolver_accepts_near_target_sizes():
    topo = resolve_topology(total_workers=13000)
    assert abs(topo.total_workers - 13000) <= 130
    # an explicit 8x10x163 layout (13040 workers) fits the 1% budget too
    assert abs(build_topology(8, 10, 163).total_workers - 13000) / 13000 <= 0.01


def test_resolver_prefers_exact_factorizations_near_default_shape():
    topo = resolve_topology(total_workers=1000)
    assert topo.total_workers == 1000
    assert (topo.gm_count, topo.lm_count) == (10, 10)


def test_resolver_needs_some_input():
    with pytest.raises(ConfigError):
        resolve_topology()
    with pytest.raises(ConfigError):
        resolve_topology(gm_count=3)  # partial explicit counts


def test_labels_round_trip_and_match_grammar():
    topo = build_topology(3, 4, 2)
    for widx in range(topo.total_workers):
        label = worker_label(topo, widx)
        assert LABEL_RE.match(label)
        assert parse_worker_label(topo, label) == widx


def test_labels_beyond_z():
    topo = build_topology(30, 1, 1)
    labels = all_labels(topo)
    assert labels[0] == "A1_1"
    assert labels[26] == "AA1_1"
    assert parse_worker_label(topo, "AA1_1") == 26


def test_bad_label_rejected():
    topo = build_topology(2, 2, 2)
    with pytest.raises(ValueError):
        parse_worker_label(topo, "a1_1")
    with pytest.raises(ValueError):
        parse_worker_label(topo, "Z9_9")


def _run(job_id=0, idx=0, dur=1.0, worker=0):
    return TaskRun(job_id, idx, dur, worker=worker)


def test_cluster_state_launch_and_reject():
    topo = build_topology(2, 2, 2)
    state = ClusterState(topo, lm_index=0)
    w = topo.worker_index(0, 0, 0)
    assert state.try_launch(w, _run(worker=w)) is True
    assert state.try_launch(w, _run(job_id=1, worker=w)) is False  # busy
    assert state.busy_count() == 1
    state.release(w)
    assert state.busy_count() == 0
    assert state.try_launch(w, _run(job_id=2, worker=w)) is True


def test_cluster_state_rejects_foreign_worker():
    topo = build_topology(2, 2, 2)
    state = ClusterState(topo, lm_index=0)
    foreign = topo.worker_index(1, 0, 0)
    with pytest.raises(ValueError):
        state.try_launch(foreign, _run(worker=foreign))


def test_release_of_idle_worker_is_an_error():
    topo = build_topology(1, 1, 2)
    state = ClusterState(topo, 0)
    with pytest.raises(SimStateError):
        state.release(0)


def test_snapshot_is_a_pure_copy():
    topo = build_topology(1, 1, 3)
    state = ClusterState(topo, 0)
    snap = state.snapshot(1.5)
    assert snap.taken_at == 1.5
    assert snap.flags == b"\x01\x01\x01"
    state.try_launch(1, _run(worker=1))
    assert snap.flags == b"\x01\x01\x01"  # later mutations invisible
    assert state.snapshot(2.0).flags == b"\x01\x00\x01"


def _view(topo, gm=0, seed=1):
    return GlobalView(topo, gm, random.Random(seed))


def test_view_claims_internal_before_external():
    topo = build_topology(2, 1, 2)
    view = _view(topo, gm=0)
    internal = {topo.worker_index(0, 0, s) for s in range(2)}
    first, second = view.claim(), view.claim()
    assert {first, second} == internal
    third = view.claim()
    assert third not in internal  # repartition onto the other GM's workers
    assert view.claim() not in internal
    assert view.claim() == -1  # view exhausted


def test_view_counts_follow_claims_and_frees():
    topo = build_topology(2, 2, 3)
    view = _view(topo)
    assert view.free_total() == 12
    w = view.claim()
    assert view.free_total() == 11
    view.set_free(w)
    assert view.free_total() == 12
    view.set_free(w)  # idempotent
    assert view.free_total() == 12
    view.set_busy(w)
    view.set_busy(w)
    assert view.free_total() == 11


def test_snapshot_application_replaces_wholesale():
    topo = build_topology(2, 2, 2)
    view = _view(topo)
    state = ClusterState(topo, 0)
    base, _ = topo.cluster_range(0)
    state.try_launch(base + 1, _run(worker=base + 1))
    state.try_launch(base + 2, _run(job_id=1, worker=base + 2))
    assert view.apply_snapshot(state.snapshot(1.0)) is True
    assert view.free_total() == 4 + 2  # cluster 0 has 2 free, cluster 1 all 4
    assert view.flags[base + 1] == 0 and view.flags[base + 2] == 0


def test_stale_snapshot_ignored():
    topo = build_topology(1, 2, 2)
    view = _view(topo)
    state = ClusterState(topo, 0)
    state.try_launch(0, _run(worker=0))
    newer = state.snapshot(5.0)
    state.release(0)
    older = state.snapshot(1.0)  # earlier timestamp, different content
    assert view.apply_snapshot(newer) is True
    assert view.flags[0] == 0
    assert view.apply_snapshot(older) is False
    assert view.flags[0] == 0  # regression prevented


def test_snapshot_idempotent():
    topo = build_topology(1, 1, 4)
    view = _view(topo)
    state = ClusterState(topo, 0)
    state.try_launch(2, _run(worker=2))
    snap = state.snapshot(3.0)
    view.apply_snapshot(snap)
    once = bytes(view.flags), list(view.part_free)
    view.apply_snapshot(snap)
    assert (bytes(view.flags), list(view.part_free)) == once


def test_busy_workers_equal_in_flight_tasks():
    rng = random.Random(9)
    topo = build_topology(2, 2, 3)
    state = ClusterState(topo, 0)
    base, end = topo.cluster_range(0)
    active = set()
    for step in range(500):
        if active and rng.random() < 0.4:
            w = rng.choice(sorted(active))
            state.release(w)
            active.discard(w)
        else:
            w = rng.randrange(base, end)
            ok = state.try_launch(w, _run(job_id=step, worker=w))
            assert ok == (w not in active)
            if ok:
                active.add(w)
        assert state.busy_count() == len(active)
        flags_busy = sum(1 for b in state.flags if b == 0)
        assert flags_busy == len(active)
