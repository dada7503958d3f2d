"""Backend parity: the compiled kernels must match the pure-NumPy twins."""

import numpy as np
import pytest

from kstepmle import _pykernels, kernels


def _random_rc_inputs(rng, n):
    w = rng.normal(size=n) * 3.0
    delta = rng.random(n) < 0.7
    if not delta.any():
        delta[0] = True
    y = np.sort(rng.random(n))
    event_pos = np.flatnonzero(delta)
    risk_start = np.searchsorted(y, y[event_pos], side="left")
    return w, event_pos.astype(np.intp), risk_start.astype(np.intp)


def test_suffix_logsumexp_matches_fallback():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 100, 1000):
        w = rng.normal(size=n) * 10.0
        np.testing.assert_allclose(
            kernels.suffix_logsumexp(w), _pykernels.suffix_logsumexp(w),
            rtol=1e-13, atol=1e-13,
        )


def test_suffix_logsumexp_extreme_scores_stable():
    # spread of +-30 in the exponent must not overflow or lose the max term
    w = np.array([30.0, -30.0, 25.0, -25.0, 0.0])
    out = kernels.suffix_logsumexp(w)
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(np.logaddexp.reduce(w), abs=1e-12)
    assert out[-1] == 0.0


def test_rc_logpl_matches_fallback():
    rng = np.random.default_rng(1)
    for n in (2, 10, 500):
        w, ep, rs = _random_rc_inputs(rng, n)
        a = kernels.rc_logpl(w, ep, rs)
        b = _pykernels.rc_logpl(w, ep, rs)
        assert a == pytest.approx(b, rel=1e-13, abs=1e-12)


def test_pava_matches_fallback_and_is_monotone():
    rng = np.random.default_rng(2)
    for n in (1, 2, 7, 300):
        y = rng.normal(size=n)
        w = rng.random(n) + 0.1
        a = kernels.pava(y, w)
        b = _pykernels.pava(y, w)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        assert np.all(np.diff(a) >= 0)


def test_cs_kernels_match_fallback():
    rng = np.random.default_rng(3)
    for n in (1, 4, 200):
        m = max(1, n // 2)
        v = np.sort(rng.random(m)) + 0.01
        gidx = np.sort(rng.integers(0, m, size=n)).astype(np.intp)
        c = np.exp(rng.normal(size=n))
        delta = (rng.random(n) < 0.5).astype(np.int8)
        fa = kernels.cs_objective(v, c, delta, gidx)
        fb = _pykernels.cs_objective(v, c, delta, gidx)
        assert fa == pytest.approx(fb, rel=1e-13, abs=1e-12)
        ga, ha = kernels.cs_grad_curv(v, c, delta, gidx, m)
        gb, hb = _pykernels.cs_grad_curv(v, c, delta, gidx, m)
        np.testing.assert_allclose(ga, gb, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(ha, hb, rtol=1e-12, atol=1e-12)


def test_readonly_inputs_accepted():
    w = np.array([1.0, 0.5, -0.2])
    w.flags.writeable = False
    kernels.suffix_logsumexp(w)
    y = np.array([3.0, 1.0, 2.0])
    wt = np.array([1.0, 3.0, 1.0])
    y.flags.writeable = False
    wt.flags.writeable = False
    kernels.pava(y, wt)
