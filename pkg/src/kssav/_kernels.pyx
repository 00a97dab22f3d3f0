# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels. See ``_kernels_py`` for the reference versions."""
from libc.math cimport log, log1p, fabs

BACKEND = "cython"


def entropy(const double[::1] u, const double[::1] ml, double eps, double C, double[::1] g_out):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double v, lv, l1v, E1 = 0.0
    cdef double hi = 1.0 - eps
    for i in range(n):
        v = u[i]
        if v < eps:
            v = eps
        elif v > hi:
            v = hi
        lv = log(v)
        l1v = log1p(-v)
        g_out[i] = lv - l1v
        E1 += ml[i] * (v * lv + (1.0 - v) * l1v + C)
    return E1


def mobility_values(const long[:, ::1] elements, const double[:, ::1] kloc,
                    const long[:, ::1] slots, const double[::1] u, double[::1] data_out):
    cdef Py_ssize_t e, a, k = elements.shape[1], kk = kloc.shape[1]
    cdef Py_ssize_t ne = elements.shape[0]
    cdef double ubar, mob
    data_out[:] = 0.0
    for e in range(ne):
        ubar = u[elements[e, 0]]
        for a in range(1, k):
            ubar = ubar + u[elements[e, a]]
        ubar = ubar / k
        if ubar < 0.0:
            ubar = 0.0
        elif ubar > 1.0:
            ubar = 1.0
        mob = ubar * (1.0 - ubar)
        for a in range(kk):
            data_out[slots[e, a]] += mob * kloc[e, a]


def quadform(const int[::1] indptr, const int[::1] indices, const double[::1] data,
             const double[::1] x):
    cdef Py_ssize_t i, p, j, n = indptr.shape[0] - 1
    cdef double d, acc = 0.0
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                d = x[i] - x[j]
                acc += -data[p] * (d * d)
    return acc


def edge_max(const int[::1] indptr, const int[::1] indices, const double[::1] data,
             const double[::1] c):
    cdef Py_ssize_t i, p, j, n = indptr.shape[0] - 1
    cdef double v, best = 0.0
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                v = fabs(data[p]) * fabs(c[j] - c[i])
                if v > best:
                    best = v
    return best


def sav_update(const int[::1] indptr, const int[::1] indices, const double[::1] data,
               const double[::1] ml, const double[::1] u, const double[::1] c,
               const double[::1] s, double r, double dt, double chi, double Du,
               double[::1] u_out, double[::1] As_out):
    cdef Py_ssize_t i, p, n = indptr.shape[0] - 1
    cdef double acc_s, acc_c, sMu = 0.0, sL1 = 0.0, coef, sAs, denom, theta, w
    # u_out temporarily holds A c
    for i in range(n):
        acc_s = 0.0
        acc_c = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc_s += data[p] * s[indices[p]]
            acc_c += data[p] * c[indices[p]]
        As_out[i] = acc_s
        u_out[i] = acc_c
        sMu += s[i] * (ml[i] * u[i])
    coef = Du * (0.5 * sMu - r)
    for i in range(n):
        u_out[i] = ml[i] * u[i] / dt + chi * u_out[i] + coef * As_out[i]
        sL1 += s[i] * u_out[i]
    sAs = quadform(indptr, indices, data, s)
    denom = 1.0 + 0.5 * Du * dt * sAs
    theta = dt * sL1 / denom
    w = 0.5 * Du * dt * theta
    for i in range(n):
        u_out[i] = (dt * u_out[i] - w * As_out[i]) / ml[i]
    return theta, denom, r + 0.5 * (theta - sMu)
