# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-query kernels for distance-based classifiers.

Prototypes of all classes are stored in one C-contiguous ``(N, q)`` array;
``starts`` holds the ``M + 1`` row offsets of the classes. Reductions use four
fixed accumulators so results do not depend on compiler reassociation.
"""

import numpy as np

from libc.math cimport fabs


cdef inline double _sq_dist(const double *a, const double *b, Py_ssize_t q) noexcept nogil:
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0, t
    cdef Py_ssize_t k = 0
    while k + 4 <= q:
        t = a[k] - b[k]
        s0 += t * t
        t = a[k + 1] - b[k + 1]
        s1 += t * t
        t = a[k + 2] - b[k + 2]
        s2 += t * t
        t = a[k + 3] - b[k + 3]
        s3 += t * t
        k += 4
    while k < q:
        t = a[k] - b[k]
        s0 += t * t
        k += 1
    return (s0 + s1) + (s2 + s3)


def sq_dists(const double[::1] x, const double[:, ::1] protos):
    cdef Py_ssize_t n = protos.shape[0], q = protos.shape[1], i
    if x.shape[0] != q:
        raise ValueError(f"test vector has dimension {x.shape[0]}, prototypes have {q}")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if q == 0:
        o[:] = 0.0
        return out
    with nogil:
        for i in range(n):
            o[i] = _sq_dist(&protos[i, 0], &x[0], q)
    return out


def class_min_sq_dists(const double[::1] x, const double[:, ::1] protos,
                       const Py_ssize_t[::1] starts):
    cdef Py_ssize_t m = starts.shape[0] - 1, q = protos.shape[1], c, i
    cdef double best, d
    if x.shape[0] != q:
        raise ValueError(f"test vector has dimension {x.shape[0]}, prototypes have {q}")
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for c in range(m):
            best = _sq_dist(&protos[starts[c], 0], &x[0], q)
            for i in range(starts[c] + 1, starts[c + 1]):
                d = _sq_dist(&protos[i, 0], &x[0], q)
                if d < best:
                    best = d
            o[c] = best
    return out


def pvrc_xi(const double[::1] x, const double[:, ::1] protos,
            const Py_ssize_t[::1] starts, const double[::1] qinv,
            const Py_ssize_t[::1] qinv_starts, const double[::1] scales,
            const unsigned char[::1] shift):
    """Return ``|B Q^-1 B^T|`` for every class.

    ``qinv`` holds the row-major inverses of the scale-balanced bordered
    matrices back to back; class ``c`` uses ``scales[c]`` to undo the
    balancing. For classes with ``shift[c]`` set, the smallest distance ``D``
    is taken out of the border first and ``2 D`` added back, which is exact
    whenever the inverse belongs to an unloaded ones-bordered matrix and
    avoids cancellation for distant classes.
    """
    cdef Py_ssize_t m = starts.shape[0] - 1, q = protos.shape[1]
    cdef Py_ssize_t c, i, j, k, nproto, size, base, max_size = 1
    cdef double s, row, acc, dmin
    if x.shape[0] != q:
        raise ValueError(f"test vector has dimension {x.shape[0]}, prototypes have {q}")
    if shift.shape[0] != m or scales.shape[0] != m:
        raise ValueError("scales and shift need one entry per class")
    for c in range(m):
        if starts[c + 1] - starts[c] + 1 > max_size:
            max_size = starts[c + 1] - starts[c] + 1
    border_arr = np.empty(max_size, dtype=np.float64)
    cdef double[::1] b = border_arr
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for c in range(m):
            nproto = starts[c + 1] - starts[c]
            size = nproto + 1
            s = scales[c]
            for i in range(nproto):
                b[i] = _sq_dist(&protos[starts[c] + i, 0], &x[0], q)
            dmin = 0.0
            if shift[c]:
                dmin = b[0]
                for i in range(1, nproto):
                    if b[i] < dmin:
                        dmin = b[i]
            for i in range(nproto):
                b[i] = (b[i] - dmin) / s
            b[nproto] = 1.0
            base = qinv_starts[c]
            acc = 0.0
            for i in range(size):
                row = 0.0
                for j in range(size):
                    row = row + qinv[base + i * size + j] * b[j]
                acc = acc + b[i] * row
            o[c] = fabs(acc + 2.0 * dmin / s) * s
    return out
