# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels. Mirrors ``_pykernels`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


cdef inline double _dist(double ax, double ay, double bx, double by) noexcept nogil:
    cdef double dx = ax - bx
    cdef double dy = ay - by
    return sqrt(dx * dx + dy * dy)


def distances(const double[:, ::1] points, double x, double y):
    cdef Py_ssize_t n = points.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _dist(points[i, 0], points[i, 1], x, y)
    return out


def nearest_positive(const double[:, ::1] points, const double[::1] weights,
                     double x, double y, Py_ssize_t k):
    cdef Py_ssize_t n = points.shape[0], i, pos, filled = 0
    if k <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.empty(k, dtype=np.int64)
    dist = np.empty(k, dtype=np.float64)
    cdef cnp.int64_t[::1] bi = idx
    cdef double[::1] bd = dist
    cdef double d
    with nogil:
        for i in range(n):
            if not weights[i] > 0.0:
                continue
            d = _dist(points[i, 0], points[i, 1], x, y)
            if filled == k and not d < bd[k - 1]:
                continue
            # insertion keeps (distance, index) order; scan is by index so
            # strict comparison leaves earlier indices ahead on ties
            pos = filled if filled < k else k - 1
            while pos > 0 and d < bd[pos - 1]:
                if pos < k:
                    bd[pos] = bd[pos - 1]
                    bi[pos] = bi[pos - 1]
                pos -= 1
            bd[pos] = d
            bi[pos] = i
            if filled < k:
                filled += 1
    return idx[:filled], dist[:filled]


cdef bint _next_perm(Py_ssize_t[::1] a, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i = k - 2, j, t
    while i >= 0 and a[i] >= a[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = k - 1
    while a[j] <= a[i]:
        j -= 1
    t = a[i]; a[i] = a[j]; a[j] = t
    i += 1
    j = k - 1
    while i < j:
        t = a[i]; a[i] = a[j]; a[j] = t
        i += 1
        j -= 1
    return True


def best_order(double x, double y, const double[:, ::1] pts, const double[::1] w):
    cdef Py_ssize_t k = pts.shape[0], i, a, b
    perm = np.arange(k, dtype=np.intp)
    best = np.arange(k, dtype=np.int64)
    cdef Py_ssize_t[::1] p = perm
    cdef cnp.int64_t[::1] bp = best
    first = np.empty(k, dtype=np.float64)
    leg = np.empty((k, k), dtype=np.float64)
    cdef double[::1] f = first
    cdef double[:, ::1] L = leg
    cdef double c, best_cost = INFINITY
    with nogil:
        for a in range(k):
            f[a] = _dist(pts[a, 0], pts[a, 1], x, y) / w[a]
            for b in range(k):
                L[a, b] = _dist(pts[a, 0], pts[a, 1], pts[b, 0], pts[b, 1]) / w[b]
        while True:
            c = f[p[0]]
            for i in range(k - 1):
                c = c + L[p[i], p[i + 1]]
            if c < best_cost:
                best_cost = c
                for i in range(k):
                    bp[i] = p[i]
            if not _next_perm(p, k):
                break
    return best, float(best_cost)


def greedy_deposit(const double[:, ::1] points, double[::1] weights, double x, double y,
                   double mass, double zero_tol):
    cdef Py_ssize_t n = points.shape[0], i, j
    cdef double remaining = mass, cost = 0.0, shipped = 0.0, best, d, wj, amt, left
    sinks = []
    amounts = []
    while remaining > zero_tol:
        j = -1
        best = INFINITY
        with nogil:
            for i in range(n):
                if weights[i] > 0.0:
                    d = _dist(points[i, 0], points[i, 1], x, y)
                    if d < best:
                        best = d
                        j = i
        if j < 0:
            break
        wj = weights[j]
        if wj <= remaining:
            amt = wj
            weights[j] = 0.0
            remaining = remaining - wj
        else:
            amt = remaining
            left = wj - remaining
            weights[j] = left if left > zero_tol else 0.0
            remaining = 0.0
        cost = cost + amt * best
        shipped = shipped + amt
        sinks.append(j)
        amounts.append(amt)
    return (np.array(sinks, dtype=np.int64), np.array(amounts, dtype=float),
            cost, shipped)


def weighted_distance_sum(const double[:, ::1] points, const double[::1] weights,
                          double x, double y):
    cdef Py_ssize_t n = points.shape[0], i
    cdef double s = 0.0
    with nogil:
        for i in range(n):
            if weights[i] != 0.0:
                s = s + weights[i] * _dist(points[i, 0], points[i, 1], x, y)
    return s


def within_range(const double[:, ::1] targets, const double[:, ::1] agents, double r):
    cdef Py_ssize_t n = targets.shape[0], m = agents.shape[0], i, a
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    with nogil:
        for i in range(n):
            for a in range(m):
                if _dist(targets[i, 0], targets[i, 1], agents[a, 0], agents[a, 1]) <= r:
                    o[i] = 1
                    break
    return out.view(bool)
