# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled eviction kernels.

Mirror of ``_pure``: same signatures, same tie-breaking, same SplitMix64
stream, so results are bit-identical for a given seed.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport qsort
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef enum:
    CAUSE_CLEAN = 0
    CAUSE_STALE_ORACLE = 1
    CAUSE_STALE_RANDOM = 2
    CAUSE_POLICY = 3

from predcache.policies._pure import InvariantError


cdef inline uint64_t _sm_next(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline Py_ssize_t _sm_index(uint64_t* state, Py_ssize_t m) nogil:
    cdef double u = <double>(_sm_next(state) >> 11) * (1.0 / 9007199254740992.0)
    return <Py_ssize_t>(u * m)


cdef int _cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<int64_t*>a)[0]
    cdef int64_t y = (<int64_t*>b)[0]
    return (x > y) - (x < y)


def next_arrivals(const int64_t[::1] req):
    cdef Py_ssize_t n = req.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    if n == 0:
        return out
    cdef int64_t top = 0
    for i in range(n):
        if req[i] > top:
            top = req[i]
    last_arr = np.full(top + 1, n + 1, dtype=np.int64)
    cdef int64_t[::1] last = last_arr
    for i in range(n - 1, -1, -1):
        o[i] = last[req[i]]
        last[req[i]] = i + 1
    return out


cdef class _Cache:
    """Resident slots plus element -> slot index."""
    cdef int64_t k
    cdef int64_t size
    cdef int64_t[::1] slots
    cdef int64_t[::1] slot_of

    def __init__(self, int64_t k, int64_t universe):
        self.k = k
        self.size = 0
        self.slots = np.full(k, -1, dtype=np.int64)
        self.slot_of = np.full(max(universe, 1), -1, dtype=np.int64)

    cdef inline bint has(self, int64_t e):
        return self.slot_of[e] >= 0

    cdef inline void add(self, int64_t e):
        self.slots[self.size] = e
        self.slot_of[e] = self.size
        self.size += 1

    cdef inline void replace(self, int64_t old, int64_t new):
        cdef int64_t s = self.slot_of[old]
        self.slot_of[old] = -1
        self.slots[s] = new
        self.slot_of[new] = s


cdef object _finish(int64_t misses, int64_t fills, cnp.ndarray log, Py_ssize_t nlog, clean):
    return misses, fills, log[:nlog].copy(), np.array(clean, dtype=np.int64)


def _check_k(int64_t k):
    if k < 1:
        raise ValueError("cache size k must be at least 1")


def run_lru(const int64_t[::1] req, int64_t k, int64_t universe):
    return _run_recency(req, k, universe, True)


def run_fifo(const int64_t[::1] req, int64_t k, int64_t universe):
    return _run_recency(req, k, universe, False)


cdef _run_recency(const int64_t[::1] req, int64_t k, int64_t universe, bint touch_on_hit):
    _check_k(k)
    cdef Py_ssize_t n = req.shape[0], i, s
    cdef _Cache c = _Cache(k, universe)
    stamp_arr = np.zeros(max(universe, 1), dtype=np.int64)
    cdef int64_t[::1] stamp = stamp_arr
    log_arr = np.empty((n, 5), dtype=np.int64)
    cdef int64_t[:, ::1] log = log_arr
    cdef Py_ssize_t nlog = 0
    cdef int64_t misses = 0, fills = 0, z, v, best
    for i in range(n):
        z = req[i]
        if c.has(z):
            if touch_on_hit:
                stamp[z] = i + 1
            continue
        misses += 1
        if c.size < k:
            fills += 1
            c.add(z)
        else:
            v = c.slots[0]
            best = stamp[v]
            for s in range(1, k):
                if stamp[c.slots[s]] < best:
                    v = c.slots[s]
                    best = stamp[v]
            c.replace(v, z)
            log[nlog, 0] = i + 1
            log[nlog, 1] = v
            log[nlog, 2] = CAUSE_POLICY
            log[nlog, 3] = 0
            log[nlog, 4] = 0
            nlog += 1
        stamp[z] = i + 1
    return _finish(misses, fills, log_arr, nlog, [])


def run_blind(const int64_t[::1] req, const double[::1] preds, int64_t k, int64_t universe, bint fixed):
    _check_k(k)
    cdef Py_ssize_t n = req.shape[0], i, s
    cdef _Cache c = _Cache(k, universe)
    pred_arr = np.zeros(max(universe, 1), dtype=np.float64)
    cdef double[::1] pred = pred_arr
    log_arr = np.empty((n, 5), dtype=np.int64)
    cdef int64_t[:, ::1] log = log_arr
    cdef Py_ssize_t nlog = 0
    cdef int64_t misses = 0, fills = 0, z, v, e
    cdef double pos, bp
    for i in range(n):
        z = req[i]
        pred[z] = preds[i]
        if c.has(z):
            continue
        misses += 1
        if c.size < k:
            fills += 1
            c.add(z)
            continue
        pos = <double>(i + 1)
        v = -1
        if fixed:
            for s in range(k):
                e = c.slots[s]
                if pred[e] < pos and (v < 0 or e < v):
                    v = e
        if v < 0:
            for s in range(k):
                e = c.slots[s]
                if v < 0 or pred[e] > bp or (pred[e] == bp and e < v):
                    v = e
                    bp = pred[e]
        c.replace(v, z)
        log[nlog, 0] = i + 1
        log[nlog, 1] = v
        log[nlog, 2] = CAUSE_POLICY
        log[nlog, 3] = 0
        log[nlog, 4] = 0
        nlog += 1
    return _finish(misses, fills, log_arr, nlog, [])


cdef inline Py_ssize_t _collect_unmarked(_Cache c, int64_t[::1] mark_phase, int64_t r,
                                         int64_t[::1] buf):
    cdef Py_ssize_t s, m = 0
    cdef int64_t e
    for s in range(c.k):
        e = c.slots[s]
        if mark_phase[e] != r:
            buf[m] = e
            m += 1
    return m


cdef inline int64_t _random_unmarked(_Cache c, int64_t[::1] mark_phase, int64_t r,
                                     int64_t[::1] buf, uint64_t* rng):
    cdef Py_ssize_t m = _collect_unmarked(c, mark_phase, r, buf)
    qsort(&buf[0], m, sizeof(int64_t), _cmp_i64)
    return buf[_sm_index(rng, m)]


def run_marker(const int64_t[::1] req, int64_t k, int64_t universe, uint64_t seed):
    _check_k(k)
    cdef Py_ssize_t n = req.shape[0], i, s
    cdef _Cache c = _Cache(k, universe)
    cdef int64_t U = max(universe, 1)
    mark_arr = np.zeros(U, dtype=np.int64)
    stale_arr = np.zeros(U, dtype=np.int64)
    buf_arr = np.empty(k, dtype=np.int64)
    cdef int64_t[::1] mark_phase = mark_arr, stale_phase = stale_arr, buf = buf_arr
    log_arr = np.empty((n, 5), dtype=np.int64)
    cdef int64_t[:, ::1] log = log_arr
    cdef Py_ssize_t nlog = 0
    cdef int64_t misses = 0, fills = 0, z, v, r = 1, nmarked = 0, cause
    cdef uint64_t rng = seed
    clean_arr = np.zeros(n + 2, dtype=np.int64)
    cdef int64_t[::1] clean = clean_arr
    for i in range(n):
        z = req[i]
        if c.has(z):
            if mark_phase[z] != r:
                mark_phase[z] = r
                nmarked += 1
            continue
        misses += 1
        if c.size < k:
            fills += 1
            c.add(z)
            clean[r - 1] += 1
            mark_phase[z] = r
            nmarked += 1
            continue
        if nmarked == k:
            r += 1
            nmarked = 0
            for s in range(k):
                stale_phase[c.slots[s]] = r
        if stale_phase[z] == r:
            cause = CAUSE_STALE_RANDOM
        else:
            clean[r - 1] += 1
            cause = CAUSE_CLEAN
        v = _random_unmarked(c, mark_phase, r, buf, &rng)
        c.replace(v, z)
        mark_phase[z] = r
        nmarked += 1
        log[nlog, 0] = i + 1
        log[nlog, 1] = v
        log[nlog, 2] = cause
        log[nlog, 3] = r
        log[nlog, 4] = 0
        nlog += 1
    return _finish(misses, fills, log_arr, nlog, clean_arr[:r] if n else clean_arr[:1])


def run_predictive_marker(const int64_t[::1] req, const double[::1] preds, int64_t k,
                          int64_t universe, double threshold, uint64_t seed):
    _check_k(k)
    cdef Py_ssize_t n = req.shape[0], i, s, m
    cdef _Cache c = _Cache(k, universe)
    cdef int64_t U = max(universe, 1)
    mark_arr = np.zeros(U, dtype=np.int64)
    stale_arr = np.zeros(U, dtype=np.int64)
    rep_phase_arr = np.zeros(U, dtype=np.int64)
    rep_chain_arr = np.zeros(U, dtype=np.int64)
    pred_arr = np.zeros(U, dtype=np.float64)
    chain_arr = np.zeros(n + 2, dtype=np.int64)
    buf_arr = np.empty(k, dtype=np.int64)
    cdef int64_t[::1] mark_phase = mark_arr, stale_phase = stale_arr
    cdef int64_t[::1] rep_phase = rep_phase_arr, rep_chain = rep_chain_arr
    cdef int64_t[::1] chain_len = chain_arr, buf = buf_arr
    cdef double[::1] pred = pred_arr
    log_arr = np.empty((n, 5), dtype=np.int64)
    cdef int64_t[:, ::1] log = log_arr
    cdef Py_ssize_t nlog = 0
    cdef int64_t misses = 0, fills = 0, z, v, e, r = 1, nmarked = 0, cause, chain, nchains = 0
    cdef bint oracle
    cdef double bp
    cdef uint64_t rng = seed
    clean_arr = np.zeros(n + 2, dtype=np.int64)
    cdef int64_t[::1] clean = clean_arr
    for i in range(n):
        z = req[i]
        pred[z] = preds[i]
        if c.has(z):
            if mark_phase[z] != r:
                mark_phase[z] = r
                nmarked += 1
            continue
        misses += 1
        if c.size < k:
            fills += 1
            c.add(z)
            clean[r - 1] += 1
            mark_phase[z] = r
            nmarked += 1
            continue
        if nmarked == k:
            r += 1
            nmarked = 0
            nchains = 0
            for s in range(k):
                stale_phase[c.slots[s]] = r
        if stale_phase[z] == r:
            if rep_phase[z] != r:
                raise InvariantError(
                    f"stale element {z} missed at position {i + 1} without owning a chain")
            rep_phase[z] = 0
            chain = rep_chain[z]
            chain_len[chain] += 1
            oracle = chain_len[chain] <= threshold
            cause = CAUSE_STALE_ORACLE if oracle else CAUSE_STALE_RANDOM
        else:
            clean[r - 1] += 1
            nchains += 1
            chain = nchains
            chain_len[chain] = 1
            oracle = 1.0 <= threshold
            cause = CAUSE_CLEAN
        if oracle:
            v = -1
            for s in range(k):
                e = c.slots[s]
                if mark_phase[e] == r:
                    continue
                if v < 0 or pred[e] > bp or (pred[e] == bp and e < v):
                    v = e
                    bp = pred[e]
        else:
            v = _random_unmarked(c, mark_phase, r, buf, &rng)
        rep_phase[v] = r
        rep_chain[v] = chain
        c.replace(v, z)
        mark_phase[z] = r
        nmarked += 1
        log[nlog, 0] = i + 1
        log[nlog, 1] = v
        log[nlog, 2] = cause
        log[nlog, 3] = r
        log[nlog, 4] = chain
        nlog += 1
    return _finish(misses, fills, log_arr, nlog, clean_arr[:r] if n else clean_arr[:1])
