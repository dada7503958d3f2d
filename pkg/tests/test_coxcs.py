"""Current-status profile: PAVA exactness, closed forms, grid-oracle parity."""

import math

import numpy as np
import pytest

from oracle_monotone import (cs_grid_oracle, monotone_enumeration_argmax,
                             monotone_lattice_argmax)

from kstepmle.coxcs import (CurrentStatusProfile, IcmConfig, StepFunction,
                            log_profile_cs, npmle_hazard_cs, pava)
from kstepmle.data import Dataset, Scheme


def cs_dataset(y, delta, z):
    z = np.asarray(z, dtype=float)
    return Dataset(y=np.asarray(y, float), delta=np.asarray(delta, np.int8),
                   z=z if z.ndim == 2 else z[:, None], scheme=Scheme.CURRENT_STATUS)


def small_case_corpus():
    """All delta patterns for n <= 4, random distinct times and covariates."""
    rng = np.random.default_rng(314)
    cases = []
    for n in (1, 2, 3, 4):
        draws = 2 if n == 4 else 3
        for pattern in range(2 ** n):
            delta = [(pattern >> i) & 1 for i in range(n)]
            for _ in range(draws):
                y = np.sort(rng.uniform(0.2, 3.0, size=n))
                z = rng.uniform(0.0, 1.0, size=n)
                cases.append(cs_dataset(y, delta, z))
    return cases


# ---------- PAVA ----------

def test_pava_monotone_input_unchanged():
    np.testing.assert_array_equal(
        pava([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]), [1.0, 2.0, 3.0]
    )


def test_pava_pooled_mean():
    np.testing.assert_allclose(pava([2.0, 1.0], [1.0, 1.0]), [1.5, 1.5])


def test_pava_weighted_hand_case():
    # pooled block mean (1*3 + 3*1) / 4 = 1.5, last point untouched
    np.testing.assert_allclose(
        pava([3.0, 1.0, 2.0], [1.0, 3.0, 1.0]), [1.5, 1.5, 2.0], atol=1e-15
    )


def test_pava_matches_grid_qp_oracle():
    rng = np.random.default_rng(21)
    for _ in range(10):
        m = int(rng.integers(2, 6))
        y = rng.normal(size=m) * 2.0
        w = rng.random(m) + 0.2
        grid = np.arange(y.min() - 1.0, y.max() + 1.0, 1e-3)
        tables = [-w[g] * (y[g] - grid) ** 2 for g in range(m)]
        _, vec = monotone_lattice_argmax(tables, [grid] * m)
        np.testing.assert_allclose(pava(y, w), vec, atol=2e-3)


def test_pava_idempotent_exactly():
    rng = np.random.default_rng(22)
    y = rng.normal(size=50)
    w = rng.random(50) + 0.1
    once = pava(y, w)
    np.testing.assert_array_equal(pava(once, w), once)


def test_pava_rejects_bad_input():
    with pytest.raises(ValueError):
        pava([], [])
    with pytest.raises(ValueError):
        pava([1.0], [0.0])


# ---------- oracle self-check ----------

def test_dp_oracle_matches_enumeration():
    rng = np.random.default_rng(23)
    for _ in range(5):
        m = int(rng.integers(1, 4))
        grids = [np.sort(rng.uniform(0, 3, size=6)) for _ in range(m)]
        tables = [rng.normal(size=6) for _ in range(m)]
        dp = monotone_lattice_argmax(tables, grids)
        brute = monotone_enumeration_argmax(tables, grids)
        assert dp[0] == pytest.approx(brute[0], abs=1e-12)


# ---------- closed-form solutions ----------

def test_single_censored_obs_hits_lower_clamp():
    res = npmle_hazard_cs(cs_dataset([1.0], [0], [0.3]), [0.7])
    assert res.hazard.values[0] == IcmConfig().lambda_min
    assert res.converged


def test_event_then_censored_closed_form():
    # maximize log(1 - e^{-a}) - b with a <= b: constraint binds, a = log 2
    res = npmle_hazard_cs(cs_dataset([1.0, 2.0], [1, 0], [0.0, 0.0]), [0.0])
    np.testing.assert_allclose(res.hazard.values, math.log(2.0), atol=1e-9)
    assert res.loglik == pytest.approx(-2.0 * math.log(2.0), abs=1e-9)


def test_censored_then_event_pushes_to_clamps():
    cfg = IcmConfig()
    ds = cs_dataset([1.0, 2.0], [0, 1], [0.0, 0.0])
    res = npmle_hazard_cs(ds, [0.0], cfg)
    assert res.hazard.values[0] == cfg.lambda_min
    assert res.hazard.values[1] == cfg.lambda_max
    value, _, _ = cs_grid_oracle(ds, [0.0])
    assert res.loglik == pytest.approx(value, abs=1e-6)
    # the clamped vector attains the oracle maximum (tied beyond ~37 where
    # 1 - exp(-v) rounds to 1, so the oracle argmax itself is not unique)
    clamped = -cfg.lambda_min + math.log(-math.expm1(-cfg.lambda_max))
    assert value == pytest.approx(clamped, abs=1e-9)


# ---------- solver properties ----------

def test_hazard_monotone_and_objective_nondecreasing():
    rng = np.random.default_rng(24)
    for seed in range(5):
        n = 30
        y = np.sort(rng.uniform(0.1, 3.0, size=n))
        delta = (rng.random(n) < 0.5).astype(int)
        z = rng.random(n)
        res = npmle_hazard_cs(cs_dataset(y, delta, z), [0.5])
        assert np.all(np.diff(res.hazard.values) >= 0)
        assert np.all(np.diff(res.objective_trace) >= 0)
        assert res.converged


def test_profile_value_matches_grid_oracle_on_small_corpus():
    for ds in small_case_corpus()[::9]:  # subsample here; full corpus in acceptance
        for theta in (-1.0, 0.0, 1.0):
            value = log_profile_cs(ds, [theta])
            oracle, _, _ = cs_grid_oracle(ds, [theta])
            assert value == pytest.approx(oracle, abs=1e-6)


def test_attained_value_dominates_feasible_candidates():
    rng = np.random.default_rng(25)
    ds = cs_dataset(np.sort(rng.uniform(0.1, 2.0, 8)),
                    (rng.random(8) < 0.5).astype(int), rng.random(8))
    res = npmle_hazard_cs(ds, [0.3])
    cfg = IcmConfig()
    from kstepmle.coxcs import _CsProblem
    from kstepmle import kernels

    problem = _CsProblem(ds)
    c = problem.multipliers(np.array([0.3]))
    for _ in range(200):
        v = np.maximum.accumulate(rng.uniform(cfg.lambda_min, 3.0, problem.m))
        cand = kernels.cs_objective(v, c, problem.delta, problem.gidx)
        assert res.loglik >= cand - 1e-9


def test_doubling_lambda_max_barely_moves_value():
    # clamp sensitivity documented in the solver contract
    rng = np.random.default_rng(26)
    for ds in small_case_corpus()[::25]:
        base = log_profile_cs(ds, [0.5], IcmConfig())
        doubled = log_profile_cs(ds, [0.5], IcmConfig(lambda_max=2e3))
        assert abs(base - doubled) < 1e-4


def test_profile_theta_continuity():
    rng = np.random.default_rng(27)
    for ds in small_case_corpus()[::25]:
        for theta in (-1.0, 0.0, 1.0):
            a = log_profile_cs(ds, [theta])
            b = log_profile_cs(ds, [theta + 1e-6])
            assert abs(a - b) <= 1e-3


def test_evaluator_deterministic_and_warm_start_consistent():
    rng = np.random.default_rng(28)
    n = 40
    ds = cs_dataset(np.sort(rng.uniform(0.1, 3.0, n)),
                    (rng.random(n) < 0.5).astype(int), rng.random(n))
    pl = CurrentStatusProfile(ds)
    first = pl.logpl([0.4])
    assert pl.logpl([0.4]) == first  # bit-identical via the value cache
    # warm-started value stays within solver tolerance of a cold solve
    warm = pl.logpl([0.41])
    cold = log_profile_cs(ds, [0.41])
    assert warm == pytest.approx(cold, abs=1e-6)


def test_non_convergence_warns():
    rng = np.random.default_rng(29)
    n = 30
    ds = cs_dataset(np.sort(rng.uniform(0.1, 3.0, n)),
                    (rng.random(n) < 0.5).astype(int), rng.random(n))
    with pytest.warns(RuntimeWarning):
        res = npmle_hazard_cs(ds, [0.2], IcmConfig(max_iter=2))
    assert not res.converged


def test_empty_and_invalid_inputs():
    with pytest.raises(Exception):
        cs_dataset([], [], [])
    with pytest.raises(ValueError):
        IcmConfig(tol=0.0)
    with pytest.raises(ValueError):
        IcmConfig(lambda_min=1.0, lambda_max=0.5)


# ---------- StepFunction ----------

def test_step_function_evaluation_and_csv(tmp_path):
    sf = StepFunction(knots=np.array([1.0, 2.0]), values=np.array([0.5, 1.5]))
    assert sf(0.5) == 0.0  # zero before the first knot
    assert sf(1.0) == 0.5  # right continuous at the knots
    assert sf(1.99) == 0.5
    assert sf(2.0) == 1.5
    path = tmp_path / "hazard.csv"
    sf.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "knot,value" and len(lines) == 3


def test_step_function_validation():
    with pytest.raises(ValueError):
        StepFunction(knots=np.array([1.0, 1.0]), values=np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        StepFunction(knots=np.array([1.0, 2.0]), values=np.array([0.2, 0.1]))
