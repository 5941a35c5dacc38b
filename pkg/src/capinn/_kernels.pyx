# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Each function mirrors one in ``_fallback.py``."""
from libc.math cimport sqrt, fabs, tanh

import numpy as np


def jacobi_sweeps(double[:, ::1] a, double[:, ::1] v, double tol_abs, int max_sweeps):
    """Cyclic Jacobi sweeps on ``a`` (in place), accumulating rotations into ``v``.

    Returns the number of sweeps performed, or -1 if the off-diagonal norm is
    still above ``tol_abs`` after ``max_sweeps``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, apq, theta, t, c, s, akp, akq, vkp, vkq, app, aqq

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        off = sqrt(2.0 * off)
        if off <= tol_abs:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
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
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


cdef void _phis(const double[::1] t, double[:, ::1] ph, int upto) noexcept nogil:
    # ph[j - 1, m] = tanh^(j) at the point whose tanh is t[m], j = 1..upto
    cdef Py_ssize_t m
    cdef double tt, s, t2
    for m in range(t.shape[0]):
        tt = t[m]
        t2 = tt * tt
        s = 1.0 - t2
        ph[0, m] = s
        if upto >= 2:
            ph[1, m] = -2.0 * tt * s
        if upto >= 3:
            ph[2, m] = s * (6.0 * t2 - 2.0)
        if upto >= 4:
            ph[3, m] = tt * s * (16.0 - 24.0 * t2)
        if upto >= 5:
            ph[4, m] = s * (16.0 - 120.0 * t2 + 120.0 * t2 * t2)


def tanh_jet_fwd(x0, xs):
    """Raw derivatives of tanh along a jet.

    ``x0`` has shape (M,); ``xs`` is a list of K arrays of shape (D, M)
    holding input coefficients 1..K (direction-major). Returns ``(t, ys)``.
    """
    cdef int K = len(xs)
    cdef const double[::1] v0 = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t M = v0.shape[0]
    cdef Py_ssize_t D = xs[0].shape[0]
    cdef Py_ssize_t d, m
    t_arr = np.empty(M)
    ph_arr = np.empty((4, M))
    cdef double[::1] t = t_arr
    cdef double[:, ::1] ph = ph_arr
    ys = [np.empty((D, M)) for _ in range(K)]
    cdef const double[:, ::1] a1 = xs[0]
    cdef const double[:, ::1] a2 = xs[1] if K >= 2 else xs[0]
    cdef const double[:, ::1] a3 = xs[2] if K >= 3 else xs[0]
    cdef const double[:, ::1] a4 = xs[3] if K >= 4 else xs[0]
    cdef double[:, ::1] y1 = ys[0]
    cdef double[:, ::1] y2 = ys[1] if K >= 2 else ys[0]
    cdef double[:, ::1] y3 = ys[2] if K >= 3 else ys[0]
    cdef double[:, ::1] y4 = ys[3] if K >= 4 else ys[0]
    cdef double p1, p2, p3, p4, b1, b2, b1s
    with nogil:
        for m in range(M):
            t[m] = tanh(v0[m])
        _phis(t, ph, K)
        for d in range(D):
            for m in range(M):
                p1 = ph[0, m]
                b1 = a1[d, m]
                y1[d, m] = p1 * b1
                if K >= 2:
                    p2 = ph[1, m]
                    b2 = a2[d, m]
                    b1s = b1 * b1
                    y2[d, m] = p1 * b2 + p2 * b1s
                    if K >= 3:
                        p3 = ph[2, m]
                        y3[d, m] = p1 * a3[d, m] + 3.0 * p2 * b1 * b2 + p3 * b1s * b1
                        if K >= 4:
                            p4 = ph[3, m]
                            y4[d, m] = (p1 * a4[d, m] + p2 * (4.0 * b1 * a3[d, m] + 3.0 * b2 * b2)
                                        + 6.0 * p3 * b1s * b2 + p4 * b1s * b1s)
    return t_arr, ys


def tanh_jet_bwd(t, xs, g0, gs):
    """Cotangents of the inputs of :func:`tanh_jet_fwd`.

    ``g0`` (M,) and ``gs`` (K arrays of (D, M)) are output cotangents;
    ``None`` entries mean zero. Returns ``(gx0, gxs)``.
    """
    cdef int K = len(xs)
    cdef const double[::1] tv = t
    cdef Py_ssize_t M = tv.shape[0]
    cdef Py_ssize_t D = xs[0].shape[0]
    cdef Py_ssize_t d, m
    zero = np.zeros((D, M))
    gs = [zero if g is None else g for g in gs]
    ph_arr = np.empty((5, M))
    cdef double[:, ::1] ph = ph_arr
    gx0_arr = np.zeros(M) if g0 is None else np.array(g0, dtype=np.float64)
    cdef double[::1] gx0 = gx0_arr
    gxs = [np.empty((D, M)) for _ in range(K)]
    cdef const double[:, ::1] a1 = xs[0]
    cdef const double[:, ::1] a2 = xs[1] if K >= 2 else xs[0]
    cdef const double[:, ::1] a3 = xs[2] if K >= 3 else xs[0]
    cdef const double[:, ::1] a4 = xs[3] if K >= 4 else xs[0]
    cdef const double[:, ::1] c1 = gs[0]
    cdef const double[:, ::1] c2 = gs[1] if K >= 2 else gs[0]
    cdef const double[:, ::1] c3 = gs[2] if K >= 3 else gs[0]
    cdef const double[:, ::1] c4 = gs[3] if K >= 4 else gs[0]
    cdef double[:, ::1] h1 = gxs[0]
    cdef double[:, ::1] h2 = gxs[1] if K >= 2 else gxs[0]
    cdef double[:, ::1] h3 = gxs[2] if K >= 3 else gxs[0]
    cdef double[:, ::1] h4 = gxs[3] if K >= 4 else gxs[0]
    cdef double p1, p2, p3, p4, p5, b1, b2, b3, b1s, e1, e2, e3, e4, acc
    cdef bint has_g0 = g0 is not None
    with nogil:
        _phis(tv, ph, K + 1)
        if has_g0:
            for m in range(M):
                gx0[m] *= ph[0, m]
        for d in range(D):
            for m in range(M):
                p1 = ph[0, m]
                p2 = ph[1, m]
                b1 = a1[d, m]
                e1 = c1[d, m]
                acc = e1 * p2 * b1
                if K == 1:
                    h1[d, m] = e1 * p1
                else:
                    p3 = ph[2, m]
                    b2 = a2[d, m]
                    b1s = b1 * b1
                    e2 = c2[d, m]
                    acc = acc + e2 * (p2 * b2 + p3 * b1s)
                    if K == 2:
                        h1[d, m] = e1 * p1 + 2.0 * e2 * p2 * b1
                        h2[d, m] = e2 * p1
                    else:
                        p4 = ph[3, m]
                        b3 = a3[d, m]
                        e3 = c3[d, m]
                        acc = acc + e3 * (p2 * b3 + 3.0 * p3 * b1 * b2 + p4 * b1s * b1)
                        if K == 3:
                            h1[d, m] = e1 * p1 + 2.0 * e2 * p2 * b1 + e3 * (3.0 * p2 * b2 + 3.0 * p3 * b1s)
                            h2[d, m] = e2 * p1 + 3.0 * e3 * p2 * b1
                            h3[d, m] = e3 * p1
                        else:
                            p5 = ph[4, m]
                            e4 = c4[d, m]
                            acc = acc + e4 * (p2 * a4[d, m] + p3 * (4.0 * b1 * b3 + 3.0 * b2 * b2)
                                              + 6.0 * p4 * b1s * b2 + p5 * b1s * b1s)
                            h1[d, m] = (e1 * p1 + 2.0 * e2 * p2 * b1 + e3 * (3.0 * p2 * b2 + 3.0 * p3 * b1s)
                                        + e4 * (4.0 * p2 * b3 + 12.0 * p3 * b1 * b2 + 4.0 * p4 * b1s * b1))
                            h2[d, m] = e2 * p1 + 3.0 * e3 * p2 * b1 + e4 * (6.0 * p2 * b2 + 6.0 * p3 * b1s)
                            h3[d, m] = e3 * p1 + 4.0 * e4 * p2 * b1
                            h4[d, m] = e4 * p1
                gx0[m] += acc
    return gx0_arr, gxs
