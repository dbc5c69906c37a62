# Compiled twins of dcsched._core.pure. Keep the logic byte-for-byte
# equivalent: the simulator's determinism contract spans both backends.

def claim_next(unsigned char[:] flags, int[:] part_free, int[:] pids,
               Py_ssize_t start, int[:] worker_order, int[:] order_off):
    cdef Py_ssize_t n = pids.shape[0]
    cdef Py_ssize_t k, i, j
    cdef int p, w
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


def refresh_cluster(unsigned char[:] flags, int[:] part_free,
                    const unsigned char[:] snapshot, Py_ssize_t base,
                    Py_ssize_t pid_lo, Py_ssize_t pid_hi, Py_ssize_t wpp):
    cdef Py_ssize_t m = snapshot.shape[0]
    cdef Py_ssize_t p, j, off
    cdef int count
    for j in range(m):
        flags[base + j] = snapshot[j]
    off = base
    for p in range(pid_lo, pid_hi):
        count = 0
        for j in range(off, off + wpp):
            if flags[j] == 1:
                count += 1
        part_free[p] = count
        off += wpp
