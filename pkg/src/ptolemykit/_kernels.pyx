# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Quadruple and triple scans over a dense distance matrix.

Every routine mirrors ``_kernels_py`` operation for operation, so both
backends agree bit for bit, including the tie-break (first hit in
lexicographic order wins).
"""
import numpy as np

from libc.math cimport fabs, INFINITY


cdef inline double _max3(double a, double b, double c) nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    return m


def ptolemy_scan(const double[:, ::1] D, double floor):
    """Minimum relative Ptolemy defect over 4-subsets and their three pairings.

    Returns ``(min_rel, i, j, k, l, pairing, count)``; pairing 0 is ij|kl,
    1 is ik|jl, 2 is il|jk.
    """
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t i, j, k, l
    cdef Py_ssize_t bi = -1, bj = -1, bk = -1, bl = -1, bp = -1
    cdef double p1, p2, p3, scale, r
    cdef double best = INFINITY
    cdef long long count = 0
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    for l in range(k + 1, n):
                        p1 = D[i, j] * D[k, l]
                        p2 = D[i, k] * D[j, l]
                        p3 = D[i, l] * D[j, k]
                        scale = _max3(p1, p2, p3)
                        if scale < floor:
                            scale = floor
                        count += 1
                        r = ((p2 + p3) - p1) / scale
                        if r < best:
                            best = r
                            bi = i; bj = j; bk = k; bl = l; bp = 0
                        r = ((p1 + p3) - p2) / scale
                        if r < best:
                            best = r
                            bi = i; bj = j; bk = k; bl = l; bp = 1
                        r = ((p1 + p2) - p3) / scale
                        if r < best:
                            best = r
                            bi = i; bj = j; bk = k; bl = l; bp = 2
    return best, bi, bj, bk, bl, bp, count


def triangle_scan(const double[:, ::1] D, double floor):
    """Minimum relative triangle slack over 3-subsets.

    Returns ``(min_rel, i, j, k, side, count)``; side 0 tests D[i,j], 1 tests
    D[i,k], 2 tests D[j,k] against the sum of the other two.
    """
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t bi = -1, bj = -1, bk = -1, bs = -1
    cdef double a, b, c, scale, r
    cdef double best = INFINITY
    cdef long long count = 0
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    a = D[i, j]
                    b = D[i, k]
                    c = D[j, k]
                    scale = _max3(a, b, c)
                    if scale < floor:
                        scale = floor
                    count += 1
                    r = ((b + c) - a) / scale
                    if r < best:
                        best = r
                        bi = i; bj = j; bk = k; bs = 0
                    r = ((a + c) - b) / scale
                    if r < best:
                        best = r
                        bi = i; bj = j; bk = k; bs = 1
                    r = ((a + b) - c) / scale
                    if r < best:
                        best = r
                        bi = i; bj = j; bk = k; bs = 2
    return best, bi, bj, bk, bs, count


def circle_scan(const double[:, ::1] D, const Py_ssize_t[::1] order, double floor):
    """Maximum relative violation of the cyclic Ptolemy equality.

    For positions a < b < c < d of ``order`` with x, y, z, w the points there,
    the violation is |xy*zw + yz*wx - xz*yw| / max(products, floor).
    Returns ``(max_rel, a, b, c, d, count)``.
    """
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t a, b, c, d, x, y, z, w
    cdef Py_ssize_t ba = -1, bb = -1, bc = -1, bd = -1
    cdef double p1, p2, p3, scale, r
    cdef double worst = -INFINITY
    cdef long long count = 0
    with nogil:
        for a in range(m):
            for b in range(a + 1, m):
                for c in range(b + 1, m):
                    for d in range(c + 1, m):
                        x = order[a]; y = order[b]; z = order[c]; w = order[d]
                        p1 = D[x, y] * D[z, w]
                        p2 = D[y, z] * D[w, x]
                        p3 = D[x, z] * D[y, w]
                        scale = _max3(p1, p2, p3)
                        if scale < floor:
                            scale = floor
                        count += 1
                        r = fabs((p1 + p2) - p3) / scale
                        if r > worst:
                            worst = r
                            ba = a; bb = b; bc = c; bd = d
    return worst, ba, bb, bc, bd, count
