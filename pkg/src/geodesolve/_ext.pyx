# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors ``_fallback`` function by function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


def jacobi_eigh(a_in, double tol=1e-12, int max_sweeps=100):
    cdef cnp.ndarray[double, ndim=2] A = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[double, ndim=2] V = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = A
    cdef double[:, ::1] v = V
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, fro, apq, theta, t, c, s, akp, akq, thresh
    fro = 0.0
    for p in range(n):
        for q in range(n):
            fro += a[p, q] * a[p, q]
    fro = sqrt(fro)
    thresh = tol * (fro if fro > 1.0 else 1.0)
    while True:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        off = sqrt(off)
        if off <= thresh:
            return np.diag(A).copy(), V, sweep, True
        if sweep >= max_sweeps:
            return np.diag(A).copy(), V, sweep, False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + hypot(theta, 1.0))
                else:
                    t = -1.0 / (-theta + hypot(theta, 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq


def edge_diff_sq(x_in, tail_in, head_in):
    cdef const double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const cnp.intp_t[::1] tail = np.ascontiguousarray(tail_in, dtype=np.intp)
    cdef const cnp.intp_t[::1] head = np.ascontiguousarray(head_in, dtype=np.intp)
    cdef Py_ssize_t m = tail.shape[0], K = x.shape[1], e, k
    diff_arr = np.empty((m, K), dtype=np.float64)
    sq_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] diff = diff_arr
    cdef double[::1] sq = sq_arr
    cdef double acc, dk
    for e in range(m):
        acc = 0.0
        for k in range(K):
            dk = x[tail[e], k] - x[head[e], k]
            diff[e, k] = dk
            acc += dk * dk
        sq[e] = acc
    return diff_arr, sq_arr


def quartic_fg(x_in, tail_in, head_in, d2_in):
    cdef const double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const cnp.intp_t[::1] tail = np.ascontiguousarray(tail_in, dtype=np.intp)
    cdef const cnp.intp_t[::1] head = np.ascontiguousarray(head_in, dtype=np.intp)
    cdef const double[::1] d2 = np.ascontiguousarray(d2_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], K = x.shape[1], m = tail.shape[0], e, k, u, w
    grad_arr = np.zeros((n, K), dtype=np.float64)
    cdef double[:, ::1] g = grad_arr
    cdef double f = 0.0, r, acc, dk, coef
    for e in range(m):
        u = tail[e]
        w = head[e]
        acc = 0.0
        for k in range(K):
            dk = x[u, k] - x[w, k]
            acc += dk * dk
        r = acc - d2[e]
        f += r * r
        coef = 4.0 * r
        for k in range(K):
            dk = coef * (x[u, k] - x[w, k])
            g[u, k] += dk
            g[w, k] -= dk
    return f, grad_arr
