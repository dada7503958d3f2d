"""Forward-difference profile score and observed profile information.

The score-like vector at step s has i-th component
[logpl(theta + s e_i) - logpl(theta)] / (n s); the information-like matrix
at step t has (i, j) entry
-[logpl(theta + t e_i + t e_j) + logpl(theta) - logpl(theta + t e_i)
  - logpl(theta + t e_j)] / (n t^2),
both one-sided exactly as the estimator is defined (the forward-difference
bias is part of the method, not an artifact to remove). On an exact
quadratic the information is exact for any t and the score bias is s/2
times the diagonal curvature.

Step sizes follow the theory: with an initial estimate accurate to
n^{-psi} and nuisance rate r, the accuracy exponent e evolves through a
fast stage e -> min(3e/2, min(r, 1/2)) using (s, t) = (n^{-3e/2}, n^{-e}),
then, when r < 1/2, a slow stage e -> min(e/2 + r, 1/2) using
(n^{-(e/2 + r)}, n^{-r}), and a terminal step at (n^{-3/4}, n^{-1/2}) for
r >= 1/2 or (n^{-(r + 1/4)}, n^{-r}) otherwise. Stage lengths come from the
closed-form counts in ``kstep.required_steps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError
from .profiles import CachingProfile, ProfileEvaluator, as_theta

_EXP_SNAP = 1e-9


def _eval(pl: ProfileEvaluator, theta: np.ndarray) -> float:
    try:
        return pl.logpl(theta)
    except Exception as exc:  # noqa: BLE001 - reattach the offending point
        raise EvaluationError(
            f"profile evaluation failed at theta={theta!r}: {exc}"
        ) from exc


def profile_score(pl: ProfileEvaluator, theta, step: float) -> np.ndarray:
    """Forward-difference score estimate; exactly dim+1 evaluator calls."""
    if not step > 0:
        raise ValueError("step must be positive")
    theta = as_theta(theta, pl.dim)
    base = _eval(pl, theta)
    out = np.empty(pl.dim)
    for i in range(pl.dim):
        shifted = theta.copy()
        shifted[i] += step
        out[i] = (_eval(pl, shifted) - base) / (pl.n * step)
    return out


def profile_information(pl: ProfileEvaluator, theta, step: float) -> np.ndarray:
    """Second-difference information estimate; symmetric by construction.

    Uses (d^2 + 3d + 2)/2 distinct evaluator calls via memoization on the
    probe points.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    theta = as_theta(theta, pl.dim)
    cached = pl if isinstance(pl, CachingProfile) else CachingProfile(pl)
    d = pl.dim
    base = _eval(cached, theta)
    singles = np.empty(d)
    for i in range(d):
        shifted = theta.copy()
        shifted[i] += step
        singles[i] = _eval(cached, shifted)
    out = np.empty((d, d))
    denom = pl.n * step * step
    for i in range(d):
        for j in range(i, d):
            shifted = theta.copy()
            shifted[i] += step
            shifted[j] += step
            pair = _eval(cached, shifted)
            val = -(pair + base - singles[i] - singles[j]) / denom
            out[i, j] = val
            out[j, i] = val
    return out


def remainder_rate(w: float, n: int, r: float) -> float:
    """Remainder-rate function of the second-order profile expansion.

    Two branches: max(n w^3, n^{1-2r} w, n^{1/2-2r}) for 1/4 < r < 1/2 and
    max(n w^3, n^{-1/2}) for r >= 1/2.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not r > 0.25:
        raise ValueError("the nuisance rate r must exceed 1/4")
    if w < 0:
        raise ValueError("w must be nonnegative")
    cubic = n * w ** 3
    if r >= 0.5:
        return max(cubic, n ** -0.5)
    return max(cubic, n ** (1.0 - 2.0 * r) * w, n ** (0.5 - 2.0 * r))


@dataclass(frozen=True)
class StepSchedule:
    """Per-iteration step-size pairs (s_k, t_k), optionally exponent-derived."""

    steps: tuple
    exponents: tuple | None = None
    psi: float | None = None
    r: float | None = None
    c_s: float = 1.0
    c_t: float = 1.0
    n: int | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def pair(self, k: int) -> tuple:
        """Step pair for iteration k; the terminal pair repeats past the end."""
        return self.steps[min(k, len(self.steps) - 1)]

    @classmethod
    def from_pairs(cls, pairs) -> "StepSchedule":
        steps = tuple((float(s), float(t)) for s, t in pairs)
        if not steps or any(s <= 0 or t <= 0 for s, t in steps):
            raise ValueError("step pairs must be positive and nonempty")
        return cls(steps=steps)


def _stage_counts(psi: float, r: float) -> tuple[int, int]:
    """Closed-form fast/slow stage lengths (see kstep.required_steps)."""
    from .kstep import _int_ceil

    if r >= 0.5:
        return _int_ceil(math.log(2.0 * psi) / math.log(2.0 / 3.0)), 0
    fast = _int_ceil(math.log(psi / r) / math.log(2.0 / 3.0))
    slow = _int_ceil(math.log(4.0 * r / (4.0 * r - 1.0)) / math.log(2.0) - 1.0)
    return fast, slow


def step_schedule(psi: float, r: float, n: int, c_s: float = 1.0,
                  c_t: float = 1.0, k_max: int | None = None) -> StepSchedule:
    """Exponent-recursion schedule ending at the optimal terminal pair."""
    if not 0.0 < psi <= 0.5:
        raise ValueError("psi must lie in (0, 1/2]")
    if not r > 0.25:
        raise ValueError("the nuisance rate r must exceed 1/4")
    if n < 1:
        raise ValueError("n must be at least 1")
    if c_s <= 0 or c_t <= 0:
        raise ValueError("step constants must be positive")
    parametric = r >= 0.5
    cap = 0.5 if parametric else r
    fast, slow = _stage_counts(psi, r)
    exps = []
    e = psi
    for _ in range(fast):
        exps.append((min(1.5 * e, 0.75), min(e, 0.5)))
        e = min(1.5 * e, cap)
        if cap - e < _EXP_SNAP:
            e = cap
    for _ in range(slow):
        exps.append((e / 2.0 + r, r))
        e = min(e / 2.0 + r, 0.5)
        if 0.5 - e < _EXP_SNAP:
            e = 0.5
    exps.append((0.75, 0.5) if parametric else (r + 0.25, r))
    if k_max is not None:
        while len(exps) < k_max:
            exps.append(exps[-1])
    steps = tuple((c_s * float(n) ** -a, c_t * float(n) ** -b) for a, b in exps)
    return StepSchedule(steps=steps, exponents=tuple(exps), psi=psi, r=r,
                        c_s=c_s, c_t=c_t, n=n)
