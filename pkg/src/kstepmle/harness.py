"""Replicated Monte Carlo studies under the CLI: estimator-vs-maximizer
summary tables, rate scaling, and confidence-interval coverage.

Each replicate is a pure function of (config, replicate index): generate
data with seed base_seed + i, initialize, run the K-step updates, run the
reference maximizer, assemble a report. Replicates are independent tasks
merged in index order, so aggregates are identical for any worker count.
Failed replicates are recorded and excluded from aggregates, never
silently retried: reseeding on failure would bias the Monte Carlo.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .coxcs import CurrentStatusProfile
from .coxrc import RightCensoredProfile
from .data import (Scheme, TrueModel, calibrate_censoring,
                   generate_current_status, generate_right_censored,
                   rng_stream)
from .initializers import (GridSpec, SamplerConfig, grid_search,
                           profile_sampler, stochastic_search)
from .kstep import (InfoEstimate, Termination, confidence_interval, kstep,
                    profile_mle, required_steps)
from .numdiff import profile_information, step_schedule

_GAP_EXPONENT = {Scheme.RIGHT_CENSORED: 0.75, Scheme.CURRENT_STATUS: 7.0 / 12.0}
_DEFAULT_INIT = {Scheme.RIGHT_CENSORED: "sampler", Scheme.CURRENT_STATUS: "grid"}
_DEFAULT_R = {Scheme.RIGHT_CENSORED: 0.5, Scheme.CURRENT_STATUS: 1.0 / 3.0}
_INITIALIZERS = ("sampler", "grid", "stochastic")
_BOOTSTRAP_STREAM = 0xB0075


@dataclass(frozen=True)
class ExperimentConfig:
    """One study cell; defaults resolve per scheme via ``resolved()``."""

    scheme: Scheme
    n: int
    replicates: int
    theta0: float = 1.0
    target_event_fraction: float = 0.9
    initializer: str | None = None
    psi: float | None = None
    r: float | None = None
    c_s: float = 1.0
    c_t: float = 1.0
    grid_c: float = 10.0
    chain_length: int = 5000
    burn_in: int = 1000
    k: int | None = None
    alpha: float = 0.05
    base_seed: int = 0
    box_half_width: float = 5.0
    workers: int = 1
    censor_upper: float | None = None  # materialized by resolved()

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if not 0.0 < self.target_event_fraction < 1.0:
            raise ValueError("target_event_fraction must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.initializer is not None and self.initializer not in _INITIALIZERS:
            raise ValueError(f"initializer must be one of {_INITIALIZERS}")
        if self.k is not None and self.k < 0:
            raise ValueError("k must be nonnegative")
        if np.ndim(self.theta0) != 0:
            raise ValueError("the harness runs scalar-coefficient studies")

    def resolved(self) -> "ExperimentConfig":
        """Materialize all defaults, including the calibrated censoring endpoint."""
        init = self.initializer or _DEFAULT_INIT[self.scheme]
        psi = self.psi if self.psi is not None else (0.5 if init == "sampler" else 0.25)
        r = self.r if self.r is not None else _DEFAULT_R[self.scheme]
        k = self.k if self.k is not None else required_steps(psi, r)
        censor = self.censor_upper
        if censor is None:
            censor = calibrate_censoring(
                TrueModel(theta0=self.theta0), self.target_event_fraction, self.scheme
            )
        return replace(self, initializer=init, psi=psi, r=r, k=k,
                       censor_upper=censor)

    def box(self) -> np.ndarray:
        return np.array([[-self.box_half_width, self.box_half_width]])

    def to_jsonable(self) -> dict:
        out = asdict(self)
        out["scheme"] = self.scheme.value
        return out


@dataclass
class ReplicateReport:
    replicate: int
    seed: int
    theta_steps: list = field(default_factory=list)  # iterates, step 0..k
    theta_mle: float | None = None
    mle_on_boundary: bool = False
    scaled_gap: float | None = None
    ci_lo: float | None = None
    ci_hi: float | None = None
    covered: bool | None = None
    logpl_final: float | None = None
    logpl_mle: float | None = None
    termination: str | None = None
    error: str | None = None
    elapsed: float = 0.0


def run_replicate(cfg: ExperimentConfig, i: int) -> ReplicateReport:
    """One self-contained replicate; exceptions become a recorded failure."""
    seed = cfg.base_seed + i
    report = ReplicateReport(replicate=i, seed=seed)
    started = time.perf_counter()
    try:
        model = TrueModel(theta0=cfg.theta0, censor_upper=cfg.censor_upper)
        if cfg.scheme is Scheme.RIGHT_CENSORED:
            data = generate_right_censored(model, cfg.n, seed)
            pl = RightCensoredProfile(data, box=cfg.box())
        else:
            data = generate_current_status(model, cfg.n, seed)
            pl = CurrentStatusProfile(data, box=cfg.box())

        sampler_info = None
        if cfg.initializer == "sampler":
            out = profile_sampler(
                pl,
                SamplerConfig(chain_length=cfg.chain_length, burn_in=cfg.burn_in,
                              seed=seed, keep_draws=False),
                np.zeros(1),
            )
            theta0_hat = out.post_mean
            sampler_info = out.info_estimate
        elif cfg.initializer == "grid":
            theta0_hat = grid_search(pl, GridSpec(box=cfg.box(), psi=cfg.psi,
                                                  c=cfg.grid_c))
        else:
            theta0_hat = stochastic_search(pl, cfg.box(), cfg.psi, cfg.grid_c, seed)

        schedule = step_schedule(cfg.psi, cfg.r, cfg.n, cfg.c_s, cfg.c_t)
        trace = kstep(pl, theta0_hat, schedule, cfg.k)
        report.theta_steps = [float(th[0]) for th in trace.iterates]
        report.termination = trace.termination.value
        if trace.termination is not Termination.REACHED_K:
            raise RuntimeError(f"kstep terminated early: {trace.termination.value}")

        mle = profile_mle(pl, cfg.box())
        report.theta_mle = float(mle.theta[0])
        report.mle_on_boundary = mle.on_boundary
        report.logpl_mle = mle.logpl
        report.logpl_final = pl.logpl(trace.theta_hat)

        if sampler_info is not None:
            info = InfoEstimate(matrix=sampler_info, source="sampler_variance")
        else:
            terminal_t = schedule.pair(max(cfg.k - 1, 0))[1]
            pi = profile_information(pl, trace.theta_hat, terminal_t)
            info = InfoEstimate(matrix=0.5 * (pi + pi.T), source="pi_at_final")
        lo, hi = confidence_interval(trace.theta_hat, info, cfg.n, cfg.alpha)
        report.ci_lo, report.ci_hi = float(lo[0]), float(hi[0])
        report.covered = bool(report.ci_lo <= cfg.theta0 <= report.ci_hi)

        expo = _GAP_EXPONENT[cfg.scheme]
        report.scaled_gap = float(
            cfg.n ** expo * abs(report.theta_mle - report.theta_steps[-1])
        )
    except Exception as exc:  # noqa: BLE001 - recorded, never silently dropped
        report.error = f"{type(exc).__name__}: {exc}"
    report.elapsed = time.perf_counter() - started
    return report


def _replicate_task(args):
    return run_replicate(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: list
    aggregate: dict
    stats: dict
    n_failed: int

    @property
    def successes(self) -> list:
        return [r for r in self.reports if r.error is None]


def table_columns(cfg: ExperimentConfig) -> list:
    return ["n"] + [f"theta_step{j}" for j in range(cfg.k + 1)] + [
        "theta_mle", "scaled_gap",
    ]


def _aggregate(cfg: ExperimentConfig, reports: list) -> tuple[dict, dict]:
    good = [r for r in reports if r.error is None]
    if not good:
        return {}, {}
    cols = {}
    for j in range(cfg.k + 1):
        cols[f"theta_step{j}"] = np.array([r.theta_steps[j] for r in good])
    cols["theta_mle"] = np.array([r.theta_mle for r in good])
    cols["scaled_gap"] = np.array([r.scaled_gap for r in good])
    aggregate = {"n": cfg.n}
    stats_out = {"replicates_used": len(good)}
    for name, values in cols.items():
        aggregate[name] = float(np.mean(values))
        med = float(np.median(values))
        stats_out[name] = {
            "mean": float(np.mean(values)),
            "median": med,
            "mad": float(np.median(np.abs(values - med))),
        }
    stats_out["abs_step_gaps"] = {
        f"step{j}": float(np.mean(np.abs(cols[f"theta_step{j}"] - cols["theta_mle"])))
        for j in range(cfg.k + 1)
    }
    stats_out["coverage"] = float(np.mean([r.covered for r in good]))
    return aggregate, stats_out


def _map_replicates(cfg: ExperimentConfig, indices) -> list:
    tasks = [(cfg, i) for i in indices]
    if cfg.workers <= 1:
        return [run_replicate(cfg, i) for i in indices]
    chunk = max(1, len(tasks) // (cfg.workers * 8))
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_replicate_task, tasks, chunksize=chunk))


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """All replicates of one cell; optionally writes CSVs and a manifest."""
    cfg = cfg.resolved()
    started = time.perf_counter()
    reports = _map_replicates(cfg, range(cfg.replicates))
    aggregate, stats_out = _aggregate(cfg, reports)
    failed = sum(1 for r in reports if r.error is not None)
    result = ExperimentResult(config=cfg, reports=reports, aggregate=aggregate,
                              stats=stats_out, n_failed=failed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table_csv([aggregate], table_columns(cfg), out / "table.csv")
        write_replicates_csv(cfg, reports, out / "replicates.csv")
        write_manifest(cfg, out / "manifest.json",
                       wall_time=time.perf_counter() - started,
                       stats={str(cfg.n): stats_out}, n_failed=failed)
    return result


@dataclass
class TableResult:
    rows: list
    stats: dict
    n_failed: int


def run_table(cfg: ExperimentConfig, n_list, out_dir=None) -> TableResult:
    """One aggregate row per sample size, in the reference table layout."""
    n_list = [int(n) for n in n_list]
    started = time.perf_counter()
    # calibration is n-independent; materialize once and share across rows
    base = replace(cfg, n=n_list[0]).resolved()
    rows, all_stats = [], {}
    failed = 0
    for n in n_list:
        result = run_experiment(replace(base, n=n))
        rows.append(result.aggregate)
        all_stats[str(n)] = result.stats
        failed += result.n_failed
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table_csv(rows, table_columns(base), out / "table.csv")
        write_manifest(base, out / "manifest.json",
                       wall_time=time.perf_counter() - started,
                       stats=all_stats, n_failed=failed, n_list=n_list)
    return TableResult(rows=rows, stats=all_stats, n_failed=failed)


@dataclass
class RateStudyResult:
    n_values: list
    mean_gaps: list
    slope: float
    slope_se: float
    failures: int


def loglog_slope(n_values, means) -> float:
    """Least-squares slope of log(mean gap) on log(n)."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(means, dtype=float))
    x = x - x.mean()
    return float(x @ (y - y.mean()) / (x @ x))


def rate_study(cfg: ExperimentConfig, n_list, bootstrap: int = 200) -> RateStudyResult:
    """Scaling of the final-step gap to the MLE, with a bootstrap slope SE."""
    n_list = [int(n) for n in n_list]
    if len(set(n_list)) < 3:
        raise ValueError("rate_study needs at least 3 distinct sample sizes")
    gaps_by_n = []
    failures = 0
    for n in n_list:
        result = run_experiment(replace(cfg, n=n))
        gaps = np.array([abs(r.theta_steps[-1] - r.theta_mle)
                         for r in result.successes])
        if gaps.size == 0 or float(np.mean(gaps)) == 0.0:
            raise ValueError(f"degenerate (zero) gaps at n={n}")
        gaps_by_n.append(gaps)
        failures += result.n_failed
    means = [float(np.mean(g)) for g in gaps_by_n]
    slope = loglog_slope(n_list, means)
    rng = rng_stream(cfg.base_seed, _BOOTSTRAP_STREAM)
    boot = np.empty(bootstrap)
    for b in range(bootstrap):
        resampled = [
            float(np.mean(g[rng.integers(0, g.size, g.size)])) for g in gaps_by_n
        ]
        boot[b] = loglog_slope(n_list, resampled)
    return RateStudyResult(n_values=n_list, mean_gaps=means, slope=slope,
                           slope_se=float(np.std(boot, ddof=1)), failures=failures)


@dataclass
class CoverageResult:
    coverage: float
    ci: tuple
    replicates_used: int
    failures: int


def wilson_interval(successes: int, trials: int, conf: float = 0.95) -> tuple:
    z = stats.norm.ppf(0.5 + conf / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return center - half, center + half


def coverage_study(cfg: ExperimentConfig, alpha: float | None = None) -> CoverageResult:
    """Fraction of replicates whose interval covers the generating coefficient."""
    if cfg.replicates < 100:
        raise ValueError("coverage_study needs at least 100 replicates")
    if alpha is not None:
        cfg = replace(cfg, alpha=alpha)
    result = run_experiment(cfg)
    good = result.successes
    hits = sum(1 for r in good if r.covered)
    return CoverageResult(coverage=hits / len(good),
                          ci=wilson_interval(hits, len(good)),
                          replicates_used=len(good), failures=result.n_failed)


# ---------- writers ----------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_table_csv(rows, columns, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def write_replicates_csv(cfg: ExperimentConfig, reports, path) -> None:
    """Per-replicate rows; timing is deliberately excluded so outputs are
    byte-identical across reruns and worker counts."""
    cols = (["replicate", "seed"] + [f"theta_step{j}" for j in range(cfg.k + 1)]
            + ["theta_mle", "scaled_gap", "ci_lo", "ci_hi", "covered",
               "termination", "error"])
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in reports:
            steps = list(r.theta_steps) + [""] * (cfg.k + 1 - len(r.theta_steps))
            row = [r.replicate, r.seed] + [_fmt(s) if s != "" else "" for s in steps]
            row += [_fmt(r.theta_mle) if r.theta_mle is not None else "",
                    _fmt(r.scaled_gap) if r.scaled_gap is not None else "",
                    _fmt(r.ci_lo) if r.ci_lo is not None else "",
                    _fmt(r.ci_hi) if r.ci_hi is not None else "",
                    "" if r.covered is None else int(r.covered),
                    r.termination or "", r.error or ""]
            writer.writerow(row)


def _git_describe() -> str | None:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5, check=False,
        )
        return out.stdout.strip() or None
    except OSError:
        return None


def write_manifest(cfg: ExperimentConfig, path, *, wall_time: float,
                   stats: dict, n_failed: int, **extra) -> None:
    from importlib.metadata import PackageNotFoundError, version

    from .kernels import BACKEND

    try:
        pkg_version = version("kstepmle")
    except PackageNotFoundError:
        pkg_version = None
    manifest = {
        "config": cfg.to_jsonable(),
        "package_version": pkg_version,
        "git_describe": _git_describe(),
        "kernel_backend": BACKEND,
        "wall_time_seconds": wall_time,
        "n_failed": n_failed,
        "stats": stats,
    }
    manifest.update(extra)
    with open(Path(path), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
