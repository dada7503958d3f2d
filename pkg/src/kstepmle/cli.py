"""Command-line entry point.

Two subcommands: ``fit`` runs initializer -> K-step updates -> confidence
interval on one dataset CSV; ``simulate`` runs the Monte Carlo studies
(summary table, rate scaling, coverage). Configuration can come from a
JSON file (``--config``, ``-`` for stdin) mirroring the experiment config;
explicit flags override file values. Unknown config keys are rejected with
the offending path.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .coxcs import CurrentStatusProfile, npmle_hazard_cs
from .coxrc import RightCensoredProfile
from .data import Scheme, read_dataset_csv
from .errors import DataError, NumericalError
from .harness import (ExperimentConfig, coverage_study, rate_study,
                      run_table, write_manifest, write_table_csv)
from .initializers import (GridSpec, SamplerConfig, grid_search,
                           profile_sampler, stochastic_search, write_draws_csv)
from .kstep import (InfoEstimate, Termination, confidence_interval, kstep,
                    profile_mle, required_steps)
from .numdiff import profile_information, step_schedule

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_PRESETS = {
    "table1": {"scheme": "rc", "initializer": "sampler", "psi": 0.5, "r": 0.5},
    "table2": {"scheme": "cs", "initializer": "grid", "psi": 0.25, "r": 1.0 / 3.0},
}

# key -> (types, validator or None); mirrors ExperimentConfig plus CLI extras
_CONFIG_SCHEMA = {
    "scheme": (str, lambda v: v in ("rc", "cs")),
    "n": ((int, list), None),
    "replicates": (int, None),
    "theta0": ((int, float), None),
    "target_event_fraction": (float, lambda v: 0.0 < v < 1.0),
    "initializer": (str, lambda v: v in ("sampler", "grid", "stochastic")),
    "psi": (float, lambda v: 0.0 < v <= 0.5),
    "r": ((int, float), lambda v: v > 0.25),
    "c_s": ((int, float), lambda v: v > 0),
    "c_t": ((int, float), lambda v: v > 0),
    "grid_c": ((int, float), lambda v: v > 0),
    "chain_length": (int, lambda v: v > 0),
    "burn_in": (int, lambda v: v >= 0),
    "k": (int, lambda v: v >= 0),
    "alpha": (float, lambda v: 0.0 < v < 1.0),
    "base_seed": (int, None),
    "box_half_width": ((int, float), lambda v: v > 0),
    "workers": (int, lambda v: v >= 1),
    "study": (str, lambda v: v in ("table", "rate", "coverage")),
    "out": (str, None),
}


def load_config(source: str) -> dict:
    """Read and validate a JSON config; unknown keys name their path."""
    if source == "-":
        text = sys.stdin.read()
        where = "<stdin>"
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise DataError(f"cannot read config {source}: {exc}") from exc
        where = source
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise DataError(f"{where}: top level must be a JSON object")
    for key, value in raw.items():
        if key not in _CONFIG_SCHEMA:
            raise DataError(f"{where}: unknown key 'config.{key}'")
        types, check = _CONFIG_SCHEMA[key]
        if isinstance(value, bool) or not isinstance(value, types):
            raise DataError(
                f"{where}: config.{key}: expected {types}, got {type(value).__name__}"
            )
        if key == "n" and isinstance(value, list):
            if not value or not all(isinstance(v, int) for v in value):
                raise DataError(f"{where}: config.n: expected int or list of int")
        if check is not None and not isinstance(value, list) and not check(value):
            raise DataError(f"{where}: config.{key}: value {value!r} out of range")
    return raw


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=["rc", "cs"], help="censoring scheme")
    p.add_argument("--config", help="JSON config file ('-' for stdin)")
    p.add_argument("--init", dest="initializer",
                   choices=["sampler", "grid", "stochastic"])
    p.add_argument("--psi", type=float, help="initial-estimate consistency exponent")
    p.add_argument("--r", type=float, help="nuisance convergence rate")
    p.add_argument("--cs", dest="c_s", type=float, help="score step constant")
    p.add_argument("--ct", dest="c_t", type=float, help="information step constant")
    p.add_argument("--k", type=int, help="number of update steps")
    p.add_argument("--alpha", type=float, help="two-sided interval level")
    p.add_argument("--seed", dest="base_seed", type=int)
    p.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kstepmle",
        description="K-step profile-likelihood estimation and Monte Carlo studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate the coefficient of one dataset")
    fit.add_argument("--data", required=True, help="dataset CSV (see docs for layout)")
    _add_common_flags(fit)
    fit.add_argument("--chain-length", type=int, dest="chain_length")
    fit.add_argument("--burn-in", type=int, dest="burn_in")
    fit.add_argument("--grid-c", type=float, dest="grid_c")
    fit.add_argument("--dump-hazard", help="write the profiled hazard CSV (cs only)")
    fit.add_argument("--dump-draws", help="write sampler draws CSV (sampler init only)")

    sim = sub.add_parser("simulate", help="run replicated Monte Carlo studies")
    _add_common_flags(sim)
    sim.add_argument("--preset", choices=sorted(_PRESETS))
    sim.add_argument("--columns", choices=["table1", "table2"],
                     help="explicit table column set (conflicts with --preset)")
    sim.add_argument("--n", type=int, nargs="+", help="sample sizes")
    sim.add_argument("--replicates", type=int)
    sim.add_argument("--theta0", type=float)
    sim.add_argument("--target-events", dest="target_event_fraction", type=float)
    sim.add_argument("--chain-length", type=int, dest="chain_length")
    sim.add_argument("--burn-in", type=int, dest="burn_in")
    sim.add_argument("--grid-c", type=float, dest="grid_c")
    sim.add_argument("--workers", type=int)
    sim.add_argument("--study", choices=["table", "rate", "coverage"])
    sim.add_argument("--allow-failures", action="store_true")
    return parser


def _merge(config: dict, args: argparse.Namespace, keys) -> dict:
    merged = dict(config)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def cmd_fit(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else {}
    merged = _merge(config, args, ["scheme", "initializer", "psi", "r", "c_s",
                                   "c_t", "k", "alpha", "base_seed",
                                   "chain_length", "burn_in", "grid_c"])
    scheme = Scheme(merged["scheme"]) if "scheme" in merged else None
    dataset = read_dataset_csv(args.data, scheme)
    scheme = dataset.scheme

    if scheme is Scheme.RIGHT_CENSORED:
        pl = RightCensoredProfile(dataset)
        r = merged.get("r", 0.5)
        init = merged.get("initializer", "sampler")
    else:
        pl = CurrentStatusProfile(dataset)
        r = merged.get("r", 1.0 / 3.0)
        init = merged.get("initializer", "grid")
    psi = merged.get("psi", 0.5 if init == "sampler" else 0.25)
    seed = merged.get("base_seed", 0)
    grid_c = merged.get("grid_c", 10.0)

    sampler_out = None
    if init == "sampler":
        sampler_out = profile_sampler(
            pl,
            SamplerConfig(chain_length=merged.get("chain_length", 5000),
                          burn_in=merged.get("burn_in", 1000), seed=seed),
            np.zeros(pl.dim),
        )
        theta0_hat = sampler_out.post_mean
        if args.dump_draws:
            write_draws_csv(sampler_out, args.dump_draws)
    elif init == "grid":
        theta0_hat = grid_search(pl, GridSpec(box=pl.box, psi=psi, c=grid_c))
    else:
        theta0_hat = stochastic_search(pl, pl.box, psi, grid_c, seed)

    schedule = step_schedule(psi, r, pl.n, merged.get("c_s", 1.0),
                             merged.get("c_t", 1.0))
    k = merged.get("k", required_steps(psi, r))
    trace = kstep(pl, theta0_hat, schedule, k)
    if trace.termination is not Termination.REACHED_K:
        raise NumericalError(f"kstep terminated early: {trace.termination.value}")

    alpha = merged.get("alpha", 0.05)
    if sampler_out is not None:
        info = InfoEstimate(matrix=sampler_out.info_estimate,
                            source="sampler_variance")
    else:
        t_term = schedule.pair(max(k - 1, 0))[1]
        pi = profile_information(pl, trace.theta_hat, t_term)
        info = InfoEstimate(matrix=0.5 * (pi + pi.T), source="pi_at_final")
    lo, hi = confidence_interval(trace.theta_hat, info, pl.n, alpha)

    if args.dump_hazard:
        if scheme is not Scheme.CURRENT_STATUS:
            raise DataError("--dump-hazard applies to current-status data only")
        npmle_hazard_cs(dataset, trace.theta_hat).hazard.to_csv(args.dump_hazard)

    report = {
        "scheme": scheme.value,
        "n": pl.n,
        "d": pl.dim,
        "initializer": init,
        "theta0_hat": [float(v) for v in np.atleast_1d(theta0_hat)],
        "theta_hat": [float(v) for v in trace.theta_hat],
        "k": k,
        "trace": trace.to_dict(),
        "ci": {"alpha": alpha, "lo": [float(v) for v in lo],
               "hi": [float(v) for v in hi]},
        "info_estimate": {"matrix": info.matrix.tolist(), "source": info.source},
        "sampler": sampler_out.to_dict() if sampler_out is not None else None,
    }
    mle = profile_mle(pl)
    report["mle"] = {"theta": [float(v) for v in mle.theta],
                     "on_boundary": mle.on_boundary}
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.preset and args.columns:
        raise UsageError("--preset and --columns are mutually exclusive")
    config = load_config(args.config) if args.config else {}
    merged = dict(_PRESETS.get(args.preset, {}))
    if args.columns:
        merged.update(_PRESETS["table1" if args.columns == "table1" else "table2"])
    merged.update(config)
    merged = _merge(merged, args, [
        "scheme", "initializer", "psi", "r", "c_s", "c_t", "k", "alpha",
        "base_seed", "replicates", "theta0", "target_event_fraction",
        "chain_length", "burn_in", "grid_c", "workers", "study",
    ])
    if args.n is not None:
        merged["n"] = args.n if len(args.n) > 1 else args.n[0]
    if "scheme" not in merged:
        raise UsageError("a scheme is required (--scheme, --preset, or config)")
    if "replicates" not in merged:
        raise UsageError("--replicates is required (flag or config)")
    study = merged.pop("study", "table")
    config_out = merged.pop("out", None)
    out_dir = args.out or config_out
    n_value = merged.pop("n", None)
    if n_value is None:
        raise UsageError("at least one sample size is required (--n or config)")
    n_list = n_value if isinstance(n_value, list) else [n_value]

    cfg = ExperimentConfig(n=n_list[0], **merged)
    failures = 0
    if study == "table":
        table = run_table(cfg, n_list, out_dir=out_dir)
        failures = table.n_failed
        _print_rows(table.rows)
    elif study == "rate":
        result = rate_study(cfg, n_list)
        failures = result.failures
        print(json.dumps({
            "n": result.n_values, "mean_gaps": result.mean_gaps,
            "slope": result.slope, "slope_se": result.slope_se,
        }, indent=2))
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            rows = [{"n": n, "mean_gap": g}
                    for n, g in zip(result.n_values, result.mean_gaps)]
            write_table_csv(rows, ["n", "mean_gap"], out / "rate.csv")
            write_manifest(cfg.resolved(), out / "manifest.json", wall_time=0.0,
                           stats={"slope": result.slope,
                                  "slope_se": result.slope_se},
                           n_failed=failures)
    else:
        if len(n_list) != 1:
            raise UsageError("coverage runs a single sample size")
        result = coverage_study(cfg)
        failures = result.failures
        print(json.dumps({
            "coverage": result.coverage, "ci": list(result.ci),
            "replicates_used": result.replicates_used,
        }, indent=2))
    if failures and not args.allow_failures:
        print(f"{failures} replicate(s) failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _print_rows(rows) -> None:
    print(json.dumps(rows, indent=2, sort_keys=True))


class UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            return cmd_fit(args)
        return cmd_simulate(args)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
