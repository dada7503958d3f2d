"""K-step estimator, iteration counts, confidence intervals, reference MLE.

One step solves Pi * delta = Gamma (never an explicit inverse; Pi is
symmetrized first, a no-op given its construction) and adds delta to the
current iterate. The iteration count that reaches the optimal rate is
N = int[log(2 psi) / log(2/3)] + 1 when the nuisance converges at the
parametric rate, and
M = int[log(psi/r) / log(2/3)] + int[log(4r/(4r-1)) / log 2 - 1] + 1
otherwise, with int[x] the smallest nonnegative integer >= x.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .numdiff import StepSchedule, profile_information, profile_score
from .profiles import CachingProfile, ProfileEvaluator, as_theta, in_box

MIN_EIGENVALUE = 1e-10
_INT_FUZZ = 1e-9


class Termination(enum.Enum):
    REACHED_K = "reached_k"
    SINGULAR_PI = "singular_pi"
    DOMAIN_EXIT = "domain_exit"


@dataclass
class KStepTrace:
    """Record of one run: iterates, per-step derivative estimates, steps."""

    iterates: list
    scores: list
    infos: list
    steps_used: list
    termination: Termination

    @property
    def theta_hat(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def k(self) -> int:
        return len(self.iterates) - 1

    def to_dict(self) -> dict:
        return {
            "iterates": [list(map(float, th)) for th in self.iterates],
            "scores": [list(map(float, g)) for g in self.scores],
            "infos": [[list(map(float, row)) for row in p] for p in self.infos],
            "steps_used": [[float(s), float(t)] for s, t in self.steps_used],
            "termination": self.termination.value,
        }


@dataclass(frozen=True)
class InfoEstimate:
    """Positive-definite estimate of the efficient information matrix."""

    matrix: np.ndarray
    source: str  # "pi_at_final" or "sampler_variance"

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "matrix", mat)
        if not np.allclose(mat, mat.T, atol=1e-12):
            raise ValueError("information estimate must be symmetric")
        if np.linalg.eigvalsh(mat).min() <= MIN_EIGENVALUE:
            raise ValueError("information estimate must be positive definite")


def _int_ceil(x: float) -> int:
    """Smallest nonnegative integer >= x, robust to float fuzz."""
    return max(0, math.ceil(x - _INT_FUZZ))


def required_steps(psi: float, r: float) -> int:
    """Iterations needed to reach the optimal rate from an n^{-psi} start."""
    if not 0.0 < psi <= 0.5:
        raise ValueError("psi must lie in (0, 1/2]")
    if not r > 0.25:
        raise ValueError("the nuisance rate r must exceed 1/4")
    if r >= 0.5:
        return _int_ceil(math.log(2.0 * psi) / math.log(2.0 / 3.0)) + 1
    fast = _int_ceil(math.log(psi / r) / math.log(2.0 / 3.0))
    slow = _int_ceil(math.log(4.0 * r / (4.0 * r - 1.0)) / math.log(2.0) - 1.0)
    return fast + slow + 1


def kstep(pl: ProfileEvaluator, theta0, schedule: StepSchedule,
          k: int | None = None) -> KStepTrace:
    """Apply up to k update steps; the terminal pair repeats past the schedule."""
    theta = as_theta(theta0, pl.dim)
    if k is None:
        k = len(schedule)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if not in_box(theta, pl.box):
        raise ValueError(f"starting point {theta} outside the parameter box")
    iterates = [theta.copy()]
    scores, infos, steps_used = [], [], []
    termination = Termination.REACHED_K
    for j in range(k):
        s, t = schedule.pair(j)
        cached = CachingProfile(pl)  # share the base point between score and info
        score = profile_score(cached, theta, s)
        info = profile_information(cached, theta, t)
        info = 0.5 * (info + info.T)
        if np.linalg.eigvalsh(info).min() < MIN_EIGENVALUE:
            termination = Termination.SINGULAR_PI
            break
        theta = theta + np.linalg.solve(info, score)
        iterates.append(theta.copy())
        scores.append(score)
        infos.append(info)
        steps_used.append((s, t))
        if not in_box(theta, pl.box):
            termination = Termination.DOMAIN_EXIT
            break
    return KStepTrace(iterates=iterates, scores=scores, infos=infos,
                      steps_used=steps_used, termination=termination)


def confidence_interval(theta, info: InfoEstimate, n: int, alpha: float):
    """Coordinate-wise (1-alpha) interval theta +- z sqrt(diag(I^{-1})) / sqrt(n)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    z = stats.norm.ppf(1.0 - alpha / 2.0)
    width = z * np.sqrt(np.diag(np.linalg.inv(info.matrix))) / math.sqrt(n)
    return theta - width, theta + width


@dataclass(frozen=True)
class MleResult:
    theta: np.ndarray
    on_boundary: bool
    logpl: float


_SCAN_POINTS = 21
_BOUNDARY_MARGIN = 1e-6


def profile_mle(pl: ProfileEvaluator, box=None, tol: float = 1e-8) -> MleResult:
    """Reference maximizer of the profile likelihood over the box.

    d=1: coarse 21-point scan, then bounded Brent (golden section with
    parabolic steps) in the bracketing cell; d>1: Nelder-Mead with one
    restart. A maximum pinned to the box edge is flagged and returned.
    """
    box = np.asarray(pl.box if box is None else box, dtype=float)
    if box.ndim == 1:
        box = box[None, :]
    d = pl.dim

    def negative(x):
        return -pl.logpl(np.atleast_1d(x))

    if d == 1:
        lo, hi = box[0]
        grid = np.linspace(lo, hi, _SCAN_POINTS)
        values = np.array([pl.logpl(np.array([g])) for g in grid])
        best = int(np.argmax(values))
        left = grid[max(best - 1, 0)]
        right = grid[min(best + 1, _SCAN_POINTS - 1)]
        res = optimize.minimize_scalar(
            negative, bounds=(left, right), method="bounded",
            options={"xatol": tol},
        )
        theta = float(res.x)
        # the bounded solver stays strictly inside its cell; snap edge hits
        if best == 0 and pl.logpl(np.array([lo])) >= -res.fun:
            theta = lo
        elif best == _SCAN_POINTS - 1 and pl.logpl(np.array([hi])) >= -res.fun:
            theta = hi
        theta_vec = np.array([theta])
    else:
        x0 = box.mean(axis=1)
        res = optimize.minimize(negative, x0, method="Nelder-Mead",
                                options={"xatol": tol, "fatol": tol})
        res = optimize.minimize(negative, res.x, method="Nelder-Mead",
                                options={"xatol": tol, "fatol": tol})
        theta_vec = np.clip(res.x, box[:, 0], box[:, 1])

    width = box[:, 1] - box[:, 0]
    on_boundary = bool(
        np.any(theta_vec - box[:, 0] <= _BOUNDARY_MARGIN * width)
        or np.any(box[:, 1] - theta_vec <= _BOUNDARY_MARGIN * width)
    )
    return MleResult(theta=theta_vec, on_boundary=on_boundary,
                     logpl=pl.logpl(theta_vec))
