# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Cox partial likelihood sweep, weighted PAVA, and the
current-status objective/derivative sums. Pure-NumPy twins live in
``kstepmle._pykernels``; contracts must match exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, log

cnp.import_array()


def suffix_logsumexp(const double[::1] w):
    """L[i] = log sum_{j>=i} exp(w[j]), computed with a running max shift."""
    cdef Py_ssize_t n = w.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] lse = out
    cdef double m = -np.inf
    cdef double ssum = 0.0
    cdef double wi
    cdef Py_ssize_t i
    for i in range(n - 1, -1, -1):
        wi = w[i]
        if wi > m:
            ssum = ssum * exp(m - wi) + 1.0
            m = wi
        else:
            ssum += exp(wi - m)
        lse[i] = m + log(ssum)
    return out


def rc_logpl(const double[::1] w, const cnp.intp_t[::1] event_pos, const cnp.intp_t[::1] risk_start):
    """Cox partial log likelihood from per-subject scores in time order."""
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t m = event_pos.shape[0]
    cdef double[::1] lse = suffix_logsumexp(w)
    cdef double total = 0.0
    cdef Py_ssize_t e
    for e in range(m):
        total += w[event_pos[e]] - lse[risk_start[e]]
    return total


def pava(const double[::1] y, const double[::1] w):
    """Weighted least-squares nondecreasing fit (pool adjacent violators)."""
    cdef Py_ssize_t m = y.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m)
    cdef double[::1] res = out
    cdef double[::1] level = np.empty(m)
    cdef double[::1] weight = np.empty(m)
    cdef cnp.intp_t[::1] size = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t i, b, pos, k
    cdef Py_ssize_t j = -1
    cdef double tot
    for i in range(m):
        j += 1
        level[j] = y[i]
        weight[j] = w[i]
        size[j] = 1
        while j > 0 and level[j - 1] > level[j]:
            tot = weight[j - 1] + weight[j]
            level[j - 1] = (weight[j - 1] * level[j - 1] + weight[j] * level[j]) / tot
            weight[j - 1] = tot
            size[j - 1] += size[j]
            j -= 1
    pos = 0
    for b in range(j + 1):
        for k in range(size[b]):
            res[pos + k] = level[b]
        pos += size[b]
    return out


def cs_objective(const double[::1] v, const double[::1] c, const signed char[::1] delta,
                 const cnp.intp_t[::1] gidx):
    """Current-status log likelihood at hazard values v (one per knot)."""
    cdef Py_ssize_t n = c.shape[0]
    cdef double total = 0.0
    cdef double x
    cdef Py_ssize_t i
    for i in range(n):
        x = v[gidx[i]] * c[i]
        if delta[i]:
            total += log(-expm1(-x))
        else:
            total -= x
    return total


def cs_grad_curv(const double[::1] v, const double[::1] c, const signed char[::1] delta,
                 const cnp.intp_t[::1] gidx, Py_ssize_t n_groups):
    """Per-knot gradient and negative curvature sums of the CS likelihood."""
    cdef cnp.ndarray[double, ndim=1] grad = np.zeros(n_groups)
    cdef cnp.ndarray[double, ndim=1] curv = np.zeros(n_groups)
    cdef double[::1] g = grad
    cdef double[::1] h = curv
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, gi
    cdef double x, q, om, ci
    for i in range(n):
        gi = gidx[i]
        ci = c[i]
        x = v[gi] * ci
        if delta[i]:
            q = exp(-x)
            om = -expm1(-x)
            g[gi] += ci * q / om
            h[gi] += ci * ci * q / (om * om)
        else:
            g[gi] -= ci
    return grad, curv
