# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same contract as ``rectree.kernels._numpy``; see that module for the
shared conventions.  Accumulations use Kahan compensation so results stay
accurate independent of group size.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND_NAME = "compiled"


def morton_encode(points, int depth):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = \
        np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef int dim = pts.shape[1]
    if depth * dim > 62:
        raise ValueError(f"depth {depth} with dim {dim} overflows 62-bit Morton codes")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = np.zeros(n, dtype=np.int64)
    cdef double scale = 2.0 ** depth
    cdef Py_ssize_t i
    cdef int b, k
    cdef long long code, idx
    for i in range(n):
        code = 0
        for k in range(dim):
            idx = <long long> floor(pts[i, k] * scale)
            for b in range(depth):
                code |= ((idx >> b) & 1) << (b * dim + k)
        codes[i] = code
    return codes


def morton_decode(codes, int depth, int dim):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cds = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t m = cds.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] idx = np.zeros((m, dim), dtype=np.int64)
    cdef Py_ssize_t i
    cdef int b, k
    cdef long long code
    for i in range(m):
        code = cds[i]
        for b in range(depth):
            for k in range(dim):
                idx[i, k] |= ((code >> (b * dim + k)) & 1) << b
    return idx


def group_moments(points, starts):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = \
        np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef int dim = pts.shape[1]
    cdef Py_ssize_t m = st.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] means = np.zeros((m, dim), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scatters = np.zeros(m, dtype=np.float64)
    cdef Py_ssize_t g, lo, hi, i
    cdef int k
    cdef double acc, comp, y, t, d, sq
    for g in range(m):
        lo = st[g]
        hi = st[g + 1] if g + 1 < m else n
        counts[g] = hi - lo
        for k in range(dim):
            acc = 0.0
            comp = 0.0
            for i in range(lo, hi):
                y = pts[i, k] - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            means[g, k] = acc / (hi - lo)
        acc = 0.0
        comp = 0.0
        for i in range(lo, hi):
            sq = 0.0
            for k in range(dim):
                d = pts[i, k] - means[g, k]
                sq += d * d
            y = sq - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        scatters[g] = acc
    return counts, means, scatters


def nearest_centers(points, centers):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = \
        np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] cts = \
        np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t kk = cts.shape[0]
    cdef int dim = pts.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sqd = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, best
    cdef int k
    cdef double d, acc, bestd
    for i in range(n):
        best = 0
        bestd = -1.0
        for j in range(kk):
            acc = 0.0
            for k in range(dim):
                d = pts[i, k] - cts[j, k]
                acc += d * d
            if bestd < 0.0 or acc < bestd:
                bestd = acc
                best = j
        labels[i] = best
        sqd[i] = bestd
    return labels, sqd
