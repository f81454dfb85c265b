"""Pure numpy implementations of the compiled kernels in ``_ext.pyx``."""
import math

import numpy as np


def jacobi_eigh(a_in, tol=1e-12, max_sweeps=100):
    a = np.array(a_in, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    fro = np.sqrt(np.sum(a * a))
    thresh = tol * max(fro, 1.0)
    iu = np.triu_indices(n, 1)
    sweep = 0
    while True:
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off <= thresh:
            return np.diag(a).copy(), v, sweep, True
        if sweep >= max_sweeps:
            return np.diag(a).copy(), v, sweep, False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + math.hypot(theta, 1.0))
                else:
                    t = -1.0 / (-theta + math.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq


def edge_diff_sq(x, tail, head):
    x = np.asarray(x, dtype=float)
    diff = x[tail] - x[head]
    return diff, np.einsum("ij,ij->i", diff, diff)


def quartic_fg(x, tail, head, d2):
    x = np.asarray(x, dtype=float)
    diff = x[tail] - x[head]
    r = np.einsum("ij,ij->i", diff, diff) - d2
    ge = (4.0 * r)[:, None] * diff
    g = np.zeros_like(x)
    np.add.at(g, tail, ge)
    np.add.at(g, head, -ge)
    return float(r @ r), g
