# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matching kernels.

Exact matching loads the synthetic rows, projected on the selected columns,
into an open-addressing hash table and probes it with every attack row. Hash
hits are verified cell by cell, so collisions never produce false matches.
Hamming kernels first copy the compared columns into contiguous rows and\ncount mismatches without branches. The main loops run without the GIL.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

cnp.import_array()

ctypedef struct Slot:
    uint64_t h
    Py_ssize_t row  # -1 marks an empty slot


cdef inline Py_ssize_t _table_size(Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t size = 16
    while size < 2 * n:
        size <<= 1
    return size


cdef inline uint64_t _splitmix(uint64_t x) noexcept nogil:
    x += 0x9E3779B97F4A7C15ULL
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef inline uint64_t _row_hash(const int32_t[:, ::1] m, Py_ssize_t r,
                               const Py_ssize_t* cols, Py_ssize_t nc) noexcept nogil:
    cdef uint64_t h = 0x243F6A8885A308D3ULL
    cdef Py_ssize_t j
    for j in range(nc):
        h = _splitmix(h ^ (<uint64_t>(<uint64_t>m[r, cols[j]] + 1) * 0x100000001B3ULL))
    return h


cdef inline bint _rows_equal(const int32_t[:, ::1] a, Py_ssize_t ra,
                             const int32_t[:, ::1] s, Py_ssize_t rs,
                             const Py_ssize_t* cols, Py_ssize_t nc) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(nc):
        if a[ra, cols[j]] != s[rs, cols[j]]:
            return False
    return True


cdef void _exact(const int32_t[:, ::1] a, const int32_t[:, ::1] s,
                 const Py_ssize_t* cols, Py_ssize_t nc,
                 Slot* table, Py_ssize_t size, uint8_t* out) noexcept nogil:
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t ns = s.shape[0]
    cdef Py_ssize_t mask = size - 1
    cdef Py_ssize_t i, pos
    cdef uint64_t h
    for i in range(size):
        table[i].row = -1
    for i in range(ns):
        h = _row_hash(s, i, cols, nc)
        pos = <Py_ssize_t>(h & <uint64_t>mask)
        while table[pos].row != -1:
            if table[pos].h == h and _rows_equal(s, table[pos].row, s, i, cols, nc):
                break
            pos = (pos + 1) & mask
        if table[pos].row == -1:
            table[pos].h = h
            table[pos].row = i
    for i in range(na):
        out[i] = 0
        h = _row_hash(a, i, cols, nc)
        pos = <Py_ssize_t>(h & <uint64_t>mask)
        while table[pos].row != -1:
            if table[pos].h == h and _rows_equal(a, i, s, table[pos].row, cols, nc):
                out[i] = 1
                break
            pos = (pos + 1) & mask


cdef inline int _distance(const int32_t* x, const int32_t* y, Py_ssize_t nc) noexcept nogil:
    # branchless count: mismatches on random data defeat the branch predictor
    cdef int d = 0
    cdef Py_ssize_t j
    for j in range(nc):
        d += x[j] != y[j]
    return d


cdef void _hamming_packed(const int32_t[:, ::1] a, const int32_t[:, ::1] s, int threshold,
                          uint8_t* out) noexcept nogil:
    # rows hold only the compared columns, contiguous
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t ns = s.shape[0]
    cdef Py_ssize_t nc = a.shape[1]
    cdef Py_ssize_t i, r
    for i in range(na):
        out[i] = 0
        for r in range(ns):
            if _distance(&a[i, 0], &s[r, 0], nc) <= threshold:
                out[i] = 1
                break


def match_flags(const int32_t[:, ::1] attack, const int32_t[:, ::1] synth, cols, int threshold=0):
    cdef cnp.ndarray[Py_ssize_t, ndim=1] c = np.ascontiguousarray(cols, dtype=np.intp)
    cdef Py_ssize_t nc = c.shape[0]
    cdef cnp.ndarray[uint8_t, ndim=1] out = np.zeros(attack.shape[0], dtype=np.uint8)
    cdef Py_ssize_t size = _table_size(synth.shape[0])
    cdef Slot* table = NULL
    cdef Py_ssize_t* cp = <Py_ssize_t*>c.data
    cdef uint8_t* op = <uint8_t*>out.data
    if threshold == 0:
        table = <Slot*>malloc(size * sizeof(Slot))
        if table == NULL:
            raise MemoryError()
        with nogil:
            _exact(attack, synth, cp, nc, table, size, op)
        free(table)
    else:
        _hamming_cols(attack, synth, c, threshold, op)
    return out


cdef void _hamming_cols(const int32_t[:, ::1] attack, const int32_t[:, ::1] synth,
                        cnp.ndarray cols, int threshold, uint8_t* out):
    cdef const int32_t[:, ::1] pa = np.ascontiguousarray(np.asarray(attack)[:, cols])
    cdef const int32_t[:, ::1] ps = np.ascontiguousarray(np.asarray(synth)[:, cols])
    if pa.shape[0] == 0 or ps.shape[0] == 0 or pa.shape[1] == 0:
        for i in range(pa.shape[0]):
            out[i] = ps.shape[0] > 0
        return
    with nogil:
        _hamming_packed(pa, ps, threshold, out)


def subset_tp_fp(const int32_t[:, ::1] attack, member, const int32_t[:, ::1] synth,
                 masks, int threshold=0):
    cdef cnp.ndarray[uint8_t, ndim=1] mem = np.ascontiguousarray(member, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] msk = np.ascontiguousarray(masks, dtype=np.uint8)
    cdef Py_ssize_t nk = msk.shape[0]
    cdef Py_ssize_t m = msk.shape[1] if msk.ndim == 2 else 0
    cdef Py_ssize_t na = attack.shape[0]
    cdef cnp.ndarray[int64_t, ndim=2] out = np.zeros((nk, 2), dtype=np.int64)
    cdef Py_ssize_t* cols = <Py_ssize_t*>malloc((m + 1) * sizeof(Py_ssize_t))
    cdef uint8_t* flags = <uint8_t*>malloc((na + 1) * sizeof(uint8_t))
    cdef Py_ssize_t size = _table_size(synth.shape[0])
    cdef Slot* table = <Slot*>malloc(size * sizeof(Slot))
    cdef Py_ssize_t k, j, nc, i
    cdef int64_t tp, fp
    if cols == NULL or flags == NULL or table == NULL:
        free(cols); free(flags); free(table)
        raise MemoryError()
    with nogil:
        for k in range(nk):
            nc = 0
            for j in range(m):
                if msk[k, j]:
                    cols[nc] = j
                    nc += 1
            if threshold == 0:
                _exact(attack, synth, cols, nc, table, size, flags)
            else:
                with gil:
                    _hamming_cols(attack, synth, np.flatnonzero(msk[k]), threshold, flags)
            tp = 0
            fp = 0
            for i in range(na):
                if flags[i]:
                    if mem[i]:
                        tp += 1
                    else:
                        fp += 1
            out[k, 0] = tp
            out[k, 1] = fp
    free(cols); free(flags); free(table)
    return out


def min_hamming(const int32_t[:, ::1] src, const int32_t[:, ::1] dst, cols, bint exclude_self=False):
    cdef Py_ssize_t nc = len(cols)
    cdef const int32_t[:, ::1] ps = np.ascontiguousarray(np.asarray(src)[:, np.asarray(cols, dtype=np.intp)])
    cdef const int32_t[:, ::1] pd = np.ascontiguousarray(np.asarray(dst)[:, np.asarray(cols, dtype=np.intp)])
    cdef Py_ssize_t ns = ps.shape[0]
    cdef Py_ssize_t nd = pd.shape[0]
    cdef cnp.ndarray[int32_t, ndim=1] out = np.empty(ns, dtype=np.int32)
    cdef Py_ssize_t i, r
    cdef int best, d
    if nc == 0:
        for i in range(ns):
            out[i] = 0 if nd > (1 if exclude_self else 0) else 1
        return out
    with nogil:
        for i in range(ns):
            best = <int>nc + 1
            for r in range(nd):
                if exclude_self and r == i:
                    continue
                d = _distance(&ps[i, 0], &pd[r, 0], nc)
                if d < best:
                    best = d
                    if best == 0:
                        break
            out[i] = best
    return out
