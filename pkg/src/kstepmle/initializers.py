"""Starting points: lattice search, random search, and the profile sampler.

The lattice search evaluates ceil(c n^{d psi}) regularly spaced points over
the box (legitimate for psi <= 1/4); the random search draws
ceil(c n^{2 psi}) uniform points. The profile sampler is random-walk
Metropolis targeting exp(logpl) restricted to the box under a flat prior;
its post-burn-in mean is a root-n starting point and the inverse of n
times its sample variance estimates the efficient information. The
proposal scale adapts toward 30% acceptance during burn-in only, then
freezes, which preserves the stationary law of the retained draws.

Both searches and the sampler assume the profile maximizer is
asymptotically unique inside the box; that is a modeling assumption, not
something checked from data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import STREAM_SAMPLER, STREAM_SEARCH, rng_stream
from .errors import NumericalError
from .profiles import ProfileEvaluator, as_theta, in_box


@dataclass(frozen=True)
class GridSpec:
    """Lattice layout: box, consistency exponent psi, cardinality constant c."""

    box: np.ndarray
    psi: float = 0.25
    c: float = 10.0

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.box, dtype=float))
        object.__setattr__(self, "box", box)
        if not 0.0 < self.psi <= 0.25:
            raise ValueError("the lattice search requires psi in (0, 1/4]")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if np.any(box[:, 1] <= box[:, 0]):
            raise ValueError("box intervals must have positive length")

    def cardinality(self, n: int) -> int:
        d = self.box.shape[0]
        return math.ceil(self.c * float(n) ** (d * self.psi))

    def lattice(self, n: int) -> np.ndarray:
        """Equal-spacing lattice with at least ``cardinality(n)`` points."""
        d = self.box.shape[0]
        total = self.cardinality(n)
        per_axis = max(1, math.ceil(total ** (1.0 / d) - 1e-9))
        while per_axis ** d < total:
            per_axis += 1
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in self.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, d)


def _argmax_candidates(pl: ProfileEvaluator, points: np.ndarray) -> np.ndarray:
    best_val = -np.inf
    best = None
    failures = 0
    for point in points:
        try:
            val = pl.logpl(point)
        except Exception as exc:  # noqa: BLE001
            failures += 1
            warnings.warn(f"skipping candidate {point}: {exc}", RuntimeWarning,
                          stacklevel=3)
            continue
        if val > best_val:
            best_val = val
            best = point
    if best is None:
        raise NumericalError(f"all {failures} candidate evaluations failed")
    return np.array(best, dtype=float)


def grid_search(pl: ProfileEvaluator, spec: GridSpec) -> np.ndarray:
    """Lattice argmax of the profile likelihood; lexicographic tie-break."""
    points = spec.lattice(pl.n)
    # lexicographic order + strict improvement = smallest winner among ties
    return _argmax_candidates(pl, points)


def stochastic_search(pl: ProfileEvaluator, box, psi: float, c: float,
                      seed: int) -> np.ndarray:
    """Argmax over ceil(c n^{2 psi}) uniform draws on the box."""
    box = np.atleast_2d(np.asarray(box, dtype=float))
    if not 0.0 < psi <= 0.25:
        raise ValueError("the random search requires psi in (0, 1/4]")
    if not c > 0:
        raise ValueError("c must be positive")
    count = math.ceil(c * float(pl.n) ** (2.0 * psi))
    rng = rng_stream(seed, STREAM_SEARCH)
    draws = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, box.shape[0]))
    return _argmax_candidates(pl, draws)


@dataclass(frozen=True)
class SamplerConfig:
    chain_length: int = 5000
    burn_in: int = 1000
    proposal_sd: float | None = None   # default: a tenth of the mean box width
    target_accept: tuple = (0.2, 0.4)
    seed: int = 0
    keep_draws: bool = True

    def __post_init__(self):
        if not 0 <= self.burn_in < self.chain_length:
            raise ValueError("burn_in must satisfy 0 <= burn_in < chain_length")
        if self.proposal_sd is not None and not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be positive")
        lo, hi = self.target_accept
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("target_accept must be an interval inside (0, 1)")


@dataclass
class SamplerOutput:
    post_mean: np.ndarray
    post_variance: np.ndarray
    info_estimate: np.ndarray   # (n * post_variance)^{-1}
    accept_rate: float
    proposal_sd: float
    draws: np.ndarray | None
    failed_evals: int
    accept_warning: bool

    def to_dict(self) -> dict:
        return {
            "post_mean": self.post_mean.tolist(),
            "post_variance": self.post_variance.tolist(),
            "info_estimate": self.info_estimate.tolist(),
            "accept_rate": self.accept_rate,
            "proposal_sd": self.proposal_sd,
            "failed_evals": self.failed_evals,
            "accept_warning": self.accept_warning,
        }


def profile_sampler(pl: ProfileEvaluator, cfg: SamplerConfig,
                    start) -> SamplerOutput:
    """Random-walk Metropolis over the box with burn-in-only adaptation."""
    theta = as_theta(start, pl.dim)
    if not in_box(theta, pl.box):
        raise ValueError(f"sampler start {theta} outside the box")
    rng = rng_stream(cfg.seed, STREAM_SAMPLER)
    widths = pl.box[:, 1] - pl.box[:, 0]
    sd = cfg.proposal_sd if cfg.proposal_sd is not None else 0.1 * float(widths.mean())
    log_sd = math.log(sd)
    target = 0.5 * (cfg.target_accept[0] + cfg.target_accept[1])

    current_lp = pl.logpl(theta)
    kept = np.empty((cfg.chain_length - cfg.burn_in, pl.dim))
    accepted_post = 0
    failed = 0
    for step in range(1, cfg.chain_length + 1):
        proposal = theta + sd * rng.standard_normal(pl.dim)
        accepted = False
        if in_box(proposal, pl.box):
            try:
                prop_lp = pl.logpl(proposal)
            except Exception:  # noqa: BLE001 - failed proposal is rejected
                failed += 1
                prop_lp = None
            if prop_lp is not None and math.log(1.0 - rng.random()) < prop_lp - current_lp:
                theta = proposal
                current_lp = prop_lp
                accepted = True
        if step <= cfg.burn_in:
            # Robbins-Monro on the log scale; frozen after burn-in
            log_sd += (float(accepted) - target) / step ** 0.6
            sd = math.exp(log_sd)
        else:
            kept[step - cfg.burn_in - 1] = theta
            accepted_post += int(accepted)

    accept_rate = accepted_post / (cfg.chain_length - cfg.burn_in)
    post_mean = kept.mean(axis=0)
    centered = kept - post_mean
    post_var = centered.T @ centered / (kept.shape[0] - 1)
    info = np.linalg.inv(pl.n * post_var)
    accept_warning = not 0.05 <= accept_rate <= 0.95
    if accept_warning:
        warnings.warn(
            f"post-burn-in acceptance rate {accept_rate:.3f} outside [0.05, 0.95]",
            RuntimeWarning,
            stacklevel=2,
        )
    if failed:
        warnings.warn(f"{failed} proposal evaluations failed and were rejected",
                      RuntimeWarning, stacklevel=2)
    return SamplerOutput(
        post_mean=post_mean,
        post_variance=post_var,
        info_estimate=info,
        accept_rate=accept_rate,
        proposal_sd=sd,
        draws=kept if cfg.keep_draws else None,
        failed_evals=failed,
        accept_warning=accept_warning,
    )


def write_draws_csv(output: SamplerOutput, path) -> None:
    """Dump retained draws, one row per chain state."""
    if output.draws is None:
        raise ValueError("sampler was run with keep_draws=False")
    header = ",".join(f"theta{j + 1}" for j in range(output.draws.shape[1]))
    np.savetxt(path, output.draws, delimiter=",", header=header, comments="")
