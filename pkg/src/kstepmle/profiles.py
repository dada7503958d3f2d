"""Profile-likelihood evaluator interface and synthetic surrogates.

An evaluator exposes ``logpl(theta) -> float`` (the log profile likelihood,
nuisance already maximized out), plus ``dim``, ``n`` and a box ``domain``.
Concrete engines live in ``coxrc`` and ``coxcs``; the surrogates here back
tests and diagnostics.
"""

from __future__ import annotations

import numpy as np

DEFAULT_BOX_HALF_WIDTH = 5.0


def default_box(dim: int) -> np.ndarray:
    """Search box [-5, 5]^d used by the built-in engines."""
    box = np.empty((dim, 2))
    box[:, 0] = -DEFAULT_BOX_HALF_WIDTH
    box[:, 1] = DEFAULT_BOX_HALF_WIDTH
    return box


def as_theta(theta, dim: int) -> np.ndarray:
    """Coerce a scalar or sequence to a finite 1-D float vector of length dim."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ValueError(f"theta must have length {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"theta must be finite, got {arr}")
    return arr


def in_box(theta: np.ndarray, box: np.ndarray) -> bool:
    return bool(np.all(theta >= box[:, 0]) and np.all(theta <= box[:, 1]))


class ProfileEvaluator:
    """Base class; subclasses set ``dim``, ``n``, ``box`` and define logpl."""

    dim: int
    n: int
    box: np.ndarray

    def logpl(self, theta) -> float:
        raise NotImplementedError

    def __call__(self, theta) -> float:
        return self.logpl(theta)


class QuadraticProfile(ProfileEvaluator):
    """Exact quadratic surrogate: logpl(theta) = -(n/2)(theta-c)'H(theta-c).

    H is the per-observation curvature; finite-difference operators are
    exact on this surface, which makes it the reference for step-size and
    one-step identities.
    """

    def __init__(self, center, curvature=1.0, n: int = 100, box=None):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.dim = self.center.shape[0]
        h = np.asarray(curvature, dtype=float)
        self.curvature = h * np.eye(self.dim) if h.ndim == 0 else h
        self.n = int(n)
        self.box = default_box(self.dim) if box is None else np.asarray(box, float)

    def logpl(self, theta) -> float:
        diff = as_theta(theta, self.dim) - self.center
        return float(-0.5 * self.n * diff @ self.curvature @ diff)


class FunctionProfile(ProfileEvaluator):
    """Wrap an arbitrary callable as an evaluator (tests, toy targets)."""

    def __init__(self, fn, dim: int = 1, n: int = 100, box=None):
        self._fn = fn
        self.dim = int(dim)
        self.n = int(n)
        self.box = default_box(self.dim) if box is None else np.asarray(box, float)

    def logpl(self, theta) -> float:
        return float(self._fn(as_theta(theta, self.dim)))


class CachingProfile(ProfileEvaluator):
    """Memoize an evaluator on exact theta bits; counts underlying calls."""

    def __init__(self, base: ProfileEvaluator):
        self.base = base
        self.dim = base.dim
        self.n = base.n
        self.box = base.box
        self.calls = 0
        self._cache: dict[bytes, float] = {}

    def logpl(self, theta) -> float:
        arr = as_theta(theta, self.dim)
        key = arr.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            self.calls += 1
            hit = self.base.logpl(arr)
            self._cache[key] = hit
        return hit
