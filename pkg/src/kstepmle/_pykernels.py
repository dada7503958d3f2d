"""Pure-NumPy fallbacks for the compiled kernels.

Same contracts as ``kstepmle._speedups``; selected by ``kstepmle.kernels``
when the extension is unavailable or KSTEPMLE_PURE_PYTHON is set.
"""

import numpy as np


def suffix_logsumexp(w):
    """L[i] = log sum_{j>=i} exp(w[j]), computed with a running max shift."""
    return np.ascontiguousarray(np.logaddexp.accumulate(w[::-1])[::-1])


def rc_logpl(w, event_pos, risk_start):
    """Cox partial log likelihood from per-subject scores in time order.

    w[j] is the linear predictor of the j-th subject sorted by observed
    time; event_pos/risk_start index events and their risk-set suffixes.
    """
    lse = suffix_logsumexp(w)
    return float(np.sum(w[event_pos]) - np.sum(lse[risk_start]))


def pava(y, w):
    """Weighted least-squares nondecreasing fit (pool adjacent violators)."""
    m = y.shape[0]
    level = np.empty(m)
    weight = np.empty(m)
    size = np.empty(m, dtype=np.intp)
    j = -1
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
    out = np.empty(m)
    pos = 0
    for b in range(j + 1):
        out[pos:pos + size[b]] = level[b]
        pos += size[b]
    return out


def cs_objective(v, c, delta, gidx):
    """Current-status log likelihood at hazard values v (one per knot).

    Per observation: delta=1 contributes log(1 - exp(-v*c)), delta=0
    contributes -v*c, with c the covariate multiplier exp(theta'z).
    """
    x = v[gidx] * c
    terms = np.where(delta == 1, np.log(-np.expm1(-x)), -x)
    return float(terms.sum())


def cs_grad_curv(v, c, delta, gidx, n_groups):
    """Per-knot gradient and negative curvature sums of the CS likelihood."""
    x = v[gidx] * c
    q = np.exp(-x)
    om = -np.expm1(-x)
    event = delta == 1
    g_obs = np.where(event, c * q / om, -c)
    h_obs = np.where(event, c * c * q / (om * om), 0.0)
    grad = np.bincount(gidx, weights=g_obs, minlength=n_groups)
    curv = np.bincount(gidx, weights=h_obs, minlength=n_groups)
    return grad, curv
