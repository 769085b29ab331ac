# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in _pykernels.py. Same signatures, same results."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t

cnp.import_array()


def tm_run(next_state, write, move, long start, long halt, long blank, tape_input, long budget):
    cdef int32_t[:, ::1] ns = np.ascontiguousarray(next_state, dtype=np.int32)
    cdef int32_t[:, ::1] wr = np.ascontiguousarray(write, dtype=np.int32)
    cdef int32_t[:, ::1] mv = np.ascontiguousarray(move, dtype=np.int32)
    cdef int32_t[::1] inp = np.ascontiguousarray(tape_input, dtype=np.int32)
    cdef Py_ssize_t n = inp.shape[0]
    cdef Py_ssize_t origin = budget + 1
    cdef Py_ssize_t size = n + 2 * budget + 3
    buf_arr = np.full(size, blank, dtype=np.int32)
    cdef int32_t[::1] buf = buf_arr
    cdef Py_ssize_t i
    for i in range(n):
        buf[origin + i] = inp[i]
    cdef long state = start
    cdef Py_ssize_t head = origin
    cdef Py_ssize_t lo = origin
    cdef Py_ssize_t hi = origin + n - 1 if n > 0 else origin
    cdef long steps = 0
    cdef int32_t sym
    with nogil:
        while state != halt and steps < budget:
            sym = buf[head]
            buf[head] = wr[state, sym]
            head += mv[state, sym]
            state = ns[state, sym]
            steps += 1
            if head < lo:
                lo = head
            elif head > hi:
                hi = head
    cells = [int(x) for x in buf_arr[lo:hi + 1]]
    return state == halt, int(steps), int(state), int(head - origin), int(lo - origin), cells


def answer_codes(true_codes, parent_status, u, double s, double eta, double rho):
    cdef int64_t[::1] tc = np.ascontiguousarray(true_codes, dtype=np.int64)
    cdef int64_t[::1] ps = np.ascontiguousarray(parent_status, dtype=np.int64)
    cdef double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = tc.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i
    cdef bint wrong
    cdef int64_t j, truth
    with nogil:
        for i in range(n):
            if not uu[i, 0] < s:
                out[i] = -1
                continue
            if ps[i] >= 0 and uu[i, 1] < rho:
                wrong = ps[i] == 1
            else:
                wrong = uu[i, 2] < eta
            truth = tc[i]
            if wrong:
                j = <int64_t>(uu[i, 3] * 3.0)
                if j > 2:
                    j = 2
                out[i] = j if j < truth else j + 1
            else:
                out[i] = truth
    return [int(x) for x in out_arr]


def contains_sum(masks, weights, uint64_t query):
    cdef uint64_t[::1] m = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double acc = 0.0
    with nogil:
        for i in range(m.shape[0]):
            if m[i] & query == query:
                acc += w[i]
    return acc


def contains_count(masks, uint64_t query):
    cdef uint64_t[::1] m = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t i
    cdef long n = 0
    with nogil:
        for i in range(m.shape[0]):
            if m[i] & query == query:
                n += 1
    return n
