"""Finite-difference operators, the remainder-rate function, step schedules."""

import numpy as np
import pytest

from kstepmle.coxrc import analytic_info_rc, analytic_score_rc, build_risk_sets
from kstepmle.kstep import required_steps
from kstepmle.numdiff import (StepSchedule, profile_information, profile_score,
                              remainder_rate, step_schedule)
from kstepmle.profiles import CachingProfile, QuadraticProfile

from test_coxrc import TWO_POINT


def test_score_exact_quadratic_bias():
    pl = QuadraticProfile(center=0.3, curvature=1.0, n=100)
    out = profile_score(pl, [1.0], 0.01)
    assert out[0] == pytest.approx(-0.705, abs=1e-12)


def test_score_bias_is_half_step_per_axis():
    pl = QuadraticProfile(center=[0.1, -0.2], curvature=np.eye(2), n=50)
    s = 0.02
    out = profile_score(pl, [0.5, 0.5], s)
    exact = -(np.array([0.5, 0.5]) - np.array([0.1, -0.2]))
    np.testing.assert_allclose(out, exact - s / 2.0, atol=1e-12)


def test_score_matches_cox_oracle():
    pl_index = build_risk_sets(TWO_POINT)
    from kstepmle.coxrc import RightCensoredProfile

    pl = RightCensoredProfile(TWO_POINT)
    got = profile_score(pl, [0.0], 1e-5)
    want = analytic_score_rc(pl_index, [0.0]) / 2.0
    assert got[0] == pytest.approx(want[0], abs=1e-4)


def test_score_call_count_and_errors():
    pl = CachingProfile(QuadraticProfile(center=0.0, n=10))
    profile_score(pl, [0.0], 0.1)
    assert pl.calls == 2  # dim + 1
    with pytest.raises(ValueError):
        profile_score(pl, [0.0], 0.0)
    with pytest.raises(ValueError):
        profile_score(pl, [0.0], -1.0)


def test_information_exact_on_quadratics_any_step():
    h = np.array([[2.0, 0.3], [0.3, 1.0]])
    pl = QuadraticProfile(center=[0.0, 0.0], curvature=h, n=77)
    for t in (1e-3, 0.1, 1.0):
        out = profile_information(pl, [0.4, -0.2], t)
        np.testing.assert_allclose(out, h, atol=1e-9)
        np.testing.assert_array_equal(out, out.T)


def test_information_identity_curvature_off_diagonal_zero():
    pl = QuadraticProfile(center=[0.0, 0.0], curvature=np.eye(2), n=10)
    out = profile_information(pl, [1.0, 1.0], 0.05)
    assert out[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_information_matches_cox_oracle():
    from kstepmle.coxrc import RightCensoredProfile

    pl = RightCensoredProfile(TWO_POINT)
    got = profile_information(pl, [0.0], 1e-3)
    want = analytic_info_rc(build_risk_sets(TWO_POINT), [0.0]) / 2.0
    assert got[0, 0] == pytest.approx(want[0, 0], abs=1e-3)


def test_information_call_count():
    pl = CachingProfile(QuadraticProfile(center=[0.0, 0.0, 0.0], n=10))
    profile_information(pl, [0.0, 0.0, 0.0], 0.1)
    d = 3
    assert pl.calls == (d * d + 3 * d + 2) // 2


def test_remainder_rate_pinned_values():
    assert remainder_rate(100 ** -0.5, 100, 0.5) == pytest.approx(0.1, abs=1e-12)
    for n in (10, 1000):
        w = n ** (-1.0 / 3.0)
        assert remainder_rate(w, n, 1.0 / 3.0) == pytest.approx(1.0, rel=1e-12)
    assert remainder_rate(0.0, 4, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_remainder_rate_monotone_and_continuous_in_w():
    n = 50
    for r in (0.3, 0.4, 0.5, 0.7):
        w = np.linspace(0.0, 1.0, 400)
        vals = np.array([remainder_rate(x, n, r) for x in w])
        assert np.all(np.diff(vals) >= -1e-12)
        # increments bounded by the branch derivatives: continuous, no jumps
        slope_bound = 3.0 * n * w[1:] ** 2 + (n ** (1.0 - 2.0 * r) if r < 0.5 else 0.0)
        assert np.all(np.diff(vals) <= slope_bound * (w[1] - w[0]) + 1e-12)


def test_remainder_rate_rejects_bad_rate():
    with pytest.raises(ValueError):
        remainder_rate(0.1, 10, 0.25)
    with pytest.raises(ValueError):
        remainder_rate(0.1, 0, 0.5)


def test_schedule_parametric_single_step():
    sched = step_schedule(0.5, 0.5, 100)
    assert len(sched) == 1
    s, t = sched.steps[0]
    assert s == pytest.approx(100 ** -0.75)
    assert t == pytest.approx(100 ** -0.5)
    assert sched.exponents == ((0.75, 0.5),)


def test_schedule_cs_three_steps():
    sched = step_schedule(0.25, 1.0 / 3.0, 200)
    assert len(sched) == required_steps(0.25, 1.0 / 3.0) == 3
    np.testing.assert_allclose(
        sched.exponents, [(3 / 8, 1 / 4), (1 / 2, 1 / 3), (7 / 12, 1 / 3)]
    )


def test_schedule_partly_linear_four_steps():
    sched = step_schedule(0.25, 0.4, 500)
    assert len(sched) == required_steps(0.25, 0.4) == 4
    a_last, b_last = sched.exponents[-1]
    assert a_last == pytest.approx(0.4 + 0.25)
    assert b_last == pytest.approx(0.4)


def test_schedule_length_matches_required_steps_on_grid():
    psis = np.arange(0.05, 0.51, 0.05)
    rates = list(np.arange(0.26, 0.50, 0.03)) + [0.5, 0.75]
    for psi in psis:
        for r in rates:
            assert len(step_schedule(float(psi), float(r), 300)) == required_steps(
                float(psi), float(r)
            ), (psi, r)


def test_schedule_constants_scale_steps():
    a = step_schedule(0.5, 0.5, 100, c_s=1.0, c_t=1.0)
    b = step_schedule(0.5, 0.5, 100, c_s=0.25, c_t=2.0)
    assert b.steps[0][0] == pytest.approx(0.25 * a.steps[0][0])
    assert b.steps[0][1] == pytest.approx(2.0 * a.steps[0][1])


def test_schedule_k_max_extends_with_terminal_pair():
    sched = step_schedule(0.5, 0.5, 100, k_max=4)
    assert len(sched) == 4
    assert sched.steps[0] == sched.steps[3]
    assert sched.pair(10) == sched.steps[-1]


def test_schedule_validation_and_from_pairs():
    with pytest.raises(ValueError):
        step_schedule(0.0, 0.5, 100)
    with pytest.raises(ValueError):
        step_schedule(0.6, 0.5, 100)
    with pytest.raises(ValueError):
        step_schedule(0.25, 0.2, 100)
    sched = StepSchedule.from_pairs([(0.01, 0.1), (0.005, 0.05)])
    assert len(sched) == 2
    with pytest.raises(ValueError):
        StepSchedule.from_pairs([])
    with pytest.raises(ValueError):
        StepSchedule.from_pairs([(0.0, 0.1)])


def test_evaluation_error_carries_theta():
    from kstepmle.errors import EvaluationError
    from kstepmle.profiles import FunctionProfile

    def bad(theta):
        raise RuntimeError("boom")

    pl = FunctionProfile(bad, dim=1, n=10)
    with pytest.raises(EvaluationError, match="theta"):
        profile_score(pl, [0.0], 0.1)
