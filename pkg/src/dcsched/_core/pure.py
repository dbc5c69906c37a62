"""Pure-Python reference implementation of the view-scan kernels.

Semantics must stay in lockstep with ``_speedups.pyx``; the two are checked
against each other in the test suite.
"""


def claim_next(flags, part_free, pids, start, worker_order, order_off):
    """Claim the first free worker, scanning partitions cyclically from `start`.

    `flags` is one byte per worker (1 = free), `part_free` the per-partition
    free counts, `pids` the partition visit order, and `worker_order` /
    `order_off` the flattened per-partition worker visit orders. On success
    the worker is marked busy, its partition count is decremented, and
    (worker, cursor_position) is returned; (-1, start) means the view shows
    no free worker in any listed partition.
    """
    n = len(pids)
    for k in range(n):
        i = start + k
        if i >= n:
            i -= n
        p = pids[i]
        if part_free[p] <= 0:
            continue
        for j in range(order_off[p], order_off[p + 1]):
            w = worker_order[j]
            if flags[w]:
                flags[w] = 0
                part_free[p] -= 1
                return w, i
        raise AssertionError("partition free count out of sync with flags")
    return -1, start


def refresh_cluster(flags, part_free, snapshot, base, pid_lo, pid_hi, wpp):
    """Overwrite one cluster's flags wholesale and recount its partitions."""
    flags[base:base + len(snapshot)] = snapshot
    off = base
    for p in range(pid_lo, pid_hi):
        part_free[p] = flags.count(1, off, off + wpp)
        off += wpp
