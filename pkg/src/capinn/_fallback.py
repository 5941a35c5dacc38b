"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np


def jacobi_sweeps(a, v, tol_abs, max_sweeps):
    n = a.shape[0]
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(2.0 * float(np.dot(a[iu], a[iu])))
        if off <= tol_abs:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q]
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return -1


def _phis(t, upto):
    t2 = t * t
    s = 1.0 - t2
    ph = [s, -2.0 * t * s, s * (6.0 * t2 - 2.0), t * s * (16.0 - 24.0 * t2), s * (16.0 - 120.0 * t2 + 120.0 * t2 * t2)]
    return ph[:upto]


def tanh_jet_fwd(x0, xs):
    K = len(xs)
    t = np.tanh(np.asarray(x0, dtype=np.float64))
    p = _phis(t, K)
    a1 = xs[0]
    ys = [p[0] * a1]
    if K >= 2:
        a2 = xs[1]
        a1s = a1 * a1
        ys.append(p[0] * a2 + p[1] * a1s)
    if K >= 3:
        a3 = xs[2]
        ys.append(p[0] * a3 + 3.0 * p[1] * a1 * a2 + p[2] * a1s * a1)
    if K >= 4:
        ys.append(p[0] * xs[3] + p[1] * (4.0 * a1 * a3 + 3.0 * a2 * a2) + 6.0 * p[2] * a1s * a2 + p[3] * a1s * a1s)
    return t, ys


def tanh_jet_bwd(t, xs, g0, gs):
    K = len(xs)
    p = _phis(t, K + 1)
    zero = np.zeros_like(xs[0])
    c = [zero if g is None else g for g in gs]
    a = list(xs)
    a1 = a[0]
    acc = c[0] * p[1] * a1
    h = [c[0] * p[0]]
    if K >= 2:
        a2, a1s = a[1], a1 * a1
        acc = acc + c[1] * (p[1] * a2 + p[2] * a1s)
        h[0] = h[0] + 2.0 * c[1] * p[1] * a1
        h.append(c[1] * p[0])
    if K >= 3:
        a3 = a[2]
        acc = acc + c[2] * (p[1] * a3 + 3.0 * p[2] * a1 * a2 + p[3] * a1s * a1)
        h[0] = h[0] + c[2] * (3.0 * p[1] * a2 + 3.0 * p[2] * a1s)
        h[1] = h[1] + 3.0 * c[2] * p[1] * a1
        h.append(c[2] * p[0])
    if K >= 4:
        acc = acc + c[3] * (p[1] * a[3] + p[2] * (4.0 * a1 * a3 + 3.0 * a2 * a2) + 6.0 * p[3] * a1s * a2 + p[4] * a1s * a1s)
        h[0] = h[0] + c[3] * (4.0 * p[1] * a3 + 12.0 * p[2] * a1 * a2 + 4.0 * p[3] * a1s * a1)
        h[1] = h[1] + c[3] * (6.0 * p[1] * a2 + 6.0 * p[2] * a1s)
        h[2] = h[2] + 4.0 * c[3] * p[1] * a1
        h.append(c[3] * p[0])
    gx0 = acc.sum(axis=0)
    if g0 is not None:
        gx0 = gx0 + g0 * p[0]
    return gx0, h
