"""Survival observations, synthetic generators, and dataset CSV round trip.

Two censoring schemes are supported. Right-censored: observe Y = min(T, C)
and delta = 1{T <= C}. Current status: observe a single examination time Y
and delta = 1{T <= Y}. Event times follow a proportional-hazards law with
baseline cumulative hazard eta0 (default exp(t) - 1), covariates are iid
Uniform[0,1] per coordinate, and censoring/examination times are
Uniform[0, t_n] with t_n calibrated to a target event fraction.

All generators are deterministic given (model, n, seed); replicate i of a
study uses seed base_seed + i. Streams are counter-based (Philox) so
parallel replication stays reproducible.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .errors import CalibrationError, DataError

# Stream tags keep the data, chain, and search draws of one seed disjoint.
STREAM_DATA = 0x0D47A
STREAM_SAMPLER = 0x5A3B1
STREAM_SEARCH = 0x5EA2C

_CALIBRATION_SEED = 20081203
_CALIBRATION_DRAWS = 100_000
_CALIBRATION_BRACKET = (1e-3, 50.0)


def rng_stream(seed: int, tag: int) -> Generator:
    """Counter-based generator for (seed, stream-tag)."""
    return Generator(Philox(SeedSequence(entropy=[int(seed), int(tag)])))


class Scheme(str, enum.Enum):
    RIGHT_CENSORED = "rc"
    CURRENT_STATUS = "cs"


class RightCensoredObs(NamedTuple):
    y: float
    delta: int
    z: np.ndarray


class CurrentStatusObs(NamedTuple):
    y: float
    delta: int
    z: np.ndarray


class ExpCumulativeHazard:
    """Baseline cumulative hazard eta(t) = exp(t) - 1, inverted in closed form."""

    def cum(self, t):
        return np.expm1(t)

    def inverse(self, u):
        return np.log1p(u)


class CallableCumulativeHazard:
    """User-supplied nondecreasing cumulative hazard; inverse by bisection."""

    def __init__(self, fn, upper: float = 200.0, tol: float = 1e-12):
        self.fn = fn
        self.upper = float(upper)
        self.tol = float(tol)
        if abs(float(fn(0.0))) > 1e-12:
            raise ValueError("cumulative hazard must vanish at t=0")

    def cum(self, t):
        return self.fn(t)

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        if float(self.fn(self.upper)) < np.max(u):
            raise ValueError(
                "cumulative hazard not invertible on the required range "
                f"(upper bracket {self.upper} too small)"
            )
        lo = np.zeros_like(u)
        hi = np.full_like(u, self.upper)
        while np.max(hi - lo) > self.tol:
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.fn(mid)) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class TrueModel:
    """Data-generating truth: coefficient, baseline hazard, censoring endpoint."""

    theta0: np.ndarray
    hazard: object = None
    censor_upper: float = 1.0

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        object.__setattr__(self, "theta0", theta)
        if self.hazard is None:
            object.__setattr__(self, "hazard", ExpCumulativeHazard())
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta0 must be finite")
        if not self.censor_upper > 0:
            raise ValueError("censor_upper must be positive")

    @property
    def d(self) -> int:
        return self.theta0.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Immutable homogeneous sample: times, indicators, covariates."""

    y: np.ndarray
    delta: np.ndarray
    z: np.ndarray
    scheme: Scheme

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        delta = np.ascontiguousarray(self.delta, dtype=np.int8)
        z = np.ascontiguousarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if y.ndim != 1 or z.ndim != 2 or y.shape[0] != z.shape[0] or y.shape != delta.shape:
            raise DataError("inconsistent array shapes for y/delta/z")
        if y.shape[0] < 1:
            raise DataError("dataset must contain at least one observation")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise DataError("observed times must be finite and nonnegative")
        if not np.all((delta == 0) | (delta == 1)):
            raise DataError("delta must be 0/1")
        if not np.all(np.isfinite(z)):
            raise DataError("covariates must be finite")
        for arr in (y, delta, z):
            arr.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int):
        cls = RightCensoredObs if self.scheme is Scheme.RIGHT_CENSORED else CurrentStatusObs
        return cls(float(self.y[i]), int(self.delta[i]), self.z[i])


def event_time_from_uniform(model: TrueModel, u, z) -> np.ndarray:
    """Invert the survival transform: T = eta0^{-1}(-log(u) * exp(-theta0'z))."""
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return model.hazard.inverse(-np.log(u) * np.exp(-(z @ model.theta0)))


def _draw_common(model: TrueModel, n: int, seed: int):
    if n < 1:
        raise ValueError("sample size must be positive")
    rng = rng_stream(seed, STREAM_DATA)
    z = rng.random((n, model.d))
    u = 1.0 - rng.random(n)  # in (0, 1]; keeps -log(u) finite
    t = event_time_from_uniform(model, u, z)
    censor = model.censor_upper * rng.random(n)
    return z, t, censor


def generate_right_censored(model: TrueModel, n: int, seed: int) -> Dataset:
    """n iid right-censored records; C ~ Uniform[0, censor_upper]."""
    z, t, c = _draw_common(model, n, seed)
    y = np.minimum(t, c)
    delta = (t <= c).astype(np.int8)
    return Dataset(y=y, delta=delta, z=z, scheme=Scheme.RIGHT_CENSORED)


def generate_current_status(model: TrueModel, n: int, seed: int) -> Dataset:
    """n iid current-status records; examination time Y ~ Uniform[0, censor_upper]."""
    z, t, y = _draw_common(model, n, seed)
    delta = (t <= y).astype(np.int8)
    return Dataset(y=y, delta=delta, z=z, scheme=Scheme.CURRENT_STATUS)


def calibrate_censoring(model: TrueModel, target_event_fraction: float,
                        scheme: Scheme = Scheme.RIGHT_CENSORED,
                        tol: float = 0.005) -> float:
    """Censoring endpoint t_n with Monte Carlo E[delta] within tol of target.

    Bisection over a fixed bracket against a fixed-seed estimate. delta has
    the same law 1{T <= t_n * V}, V ~ U(0,1), under both schemes, so the
    calibration is scheme-independent.
    """
    del scheme
    if not 0.0 < target_event_fraction < 1.0:
        raise ValueError("target event fraction must lie in (0, 1)")
    rng = rng_stream(_CALIBRATION_SEED, STREAM_DATA)
    z = rng.random((_CALIBRATION_DRAWS, model.d))
    u = 1.0 - rng.random(_CALIBRATION_DRAWS)
    t = event_time_from_uniform(model, u, z)
    v = rng.random(_CALIBRATION_DRAWS)

    def frac(tn: float) -> float:
        return float(np.mean(t <= tn * v))

    lo, hi = _CALIBRATION_BRACKET
    if frac(hi) < target_event_fraction - tol:
        raise CalibrationError(
            f"target event fraction {target_event_fraction} unattainable: "
            f"bracket maximum reaches only {frac(hi):.4f}"
        )
    if frac(lo) > target_event_fraction + tol:
        raise CalibrationError(
            f"target event fraction {target_event_fraction} unattainable: "
            f"bracket minimum already {frac(lo):.4f}"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if frac(mid) < target_event_fraction:
            lo = mid
        else:
            hi = mid
    tn = 0.5 * (lo + hi)
    if abs(frac(tn) - target_event_fraction) > tol:
        raise CalibrationError(
            f"calibration stalled at t_n={tn:.6g} with event fraction {frac(tn):.4f}"
        )
    return tn


# ---------- CSV round trip ----------

def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def write_dataset_csv(dataset: Dataset, path, *, seed=None, theta0=None,
                      censor_upper=None) -> Path:
    """Write `y,delta,z1..zd` rows plus a sidecar JSON manifest; returns its path."""
    p = Path(path)
    header = ["y", "delta"] + [f"z{j + 1}" for j in range(dataset.d)]
    with open(p, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [f"{dataset.y[i]:.17g}", str(int(dataset.delta[i]))]
            row += [f"{v:.17g}" for v in dataset.z[i]]
            writer.writerow(row)
    manifest = {
        "scheme": dataset.scheme.value,
        "n": dataset.n,
        "d": dataset.d,
        "seed": None if seed is None else int(seed),
        "theta0": None if theta0 is None else np.atleast_1d(np.asarray(theta0, float)).tolist(),
        "tn": None if censor_upper is None else float(censor_upper),
    }
    mpath = manifest_path(p)
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return mpath


def read_dataset_csv(path, scheme: Scheme | None = None) -> Dataset:
    """Read a dataset CSV; the scheme comes from the sidecar manifest unless given."""
    p = Path(path)
    if scheme is None:
        mpath = manifest_path(p)
        if not mpath.exists():
            raise DataError(
                f"{p}: no scheme given and no manifest found at {mpath}"
            )
        try:
            with open(mpath) as fh:
                scheme = Scheme(json.load(fh)["scheme"])
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"{mpath}: invalid manifest ({exc})") from exc
    y, delta, z = [], [], []
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{p}: empty file") from None
        if header[:2] != ["y", "delta"] or not all(
            h == f"z{j + 1}" for j, h in enumerate(header[2:])
        ):
            raise DataError(f"{p}: header must be y,delta,z1..zd, got {header}")
        d = len(header) - 2
        if d < 1:
            raise DataError(f"{p}: at least one covariate column required")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{p}: row {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                y.append(float(row[0]))
                dv = int(row[1])
                z.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise DataError(f"{p}: row {lineno}: {exc}") from exc
            if dv not in (0, 1):
                raise DataError(f"{p}: row {lineno}: delta must be 0/1, got {row[1]}")
            delta.append(dv)
    if not y:
        raise DataError(f"{p}: no data rows")
    return Dataset(y=np.array(y), delta=np.array(delta, dtype=np.int8),
                   z=np.array(z), scheme=scheme)
