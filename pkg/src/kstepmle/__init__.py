"""K-step semiparametric maximum likelihood via profile likelihoods.

Built-in engines: Cox regression under right censoring (exact partial
likelihood) and under current-status observation (iterative convex
minorant). The estimator applies Newton-type updates built from one-sided
finite differences of the log profile likelihood, with step sizes on the
theoretically optimal schedule, starting from a lattice search, a random
search, or the posterior mean of a profile sampler.
"""

from .coxcs import (CurrentStatusProfile, IcmConfig, IcmResult, StepFunction,
                    log_profile_cs, npmle_hazard_cs, pava)
from .coxrc import (RightCensoredProfile, RiskSetIndex, analytic_info_rc,
                    analytic_score_rc, build_risk_sets, log_profile_rc)
from .data import (CurrentStatusObs, Dataset, RightCensoredObs, Scheme,
                   TrueModel, calibrate_censoring, generate_current_status,
                   generate_right_censored, read_dataset_csv,
                   write_dataset_csv)
from .harness import (CoverageResult, ExperimentConfig, ExperimentResult,
                      RateStudyResult, ReplicateReport, coverage_study,
                      rate_study, run_experiment, run_table)
from .initializers import (GridSpec, SamplerConfig, SamplerOutput,
                           grid_search, profile_sampler, stochastic_search)
from .kernels import BACKEND as KERNEL_BACKEND
from .kstep import (InfoEstimate, KStepTrace, MleResult, Termination,
                    confidence_interval, kstep, profile_mle, required_steps)
from .numdiff import (StepSchedule, profile_information, profile_score,
                      remainder_rate, step_schedule)
from .profiles import ProfileEvaluator, QuadraticProfile

__version__ = "0.1.0"

__all__ = [
    "CurrentStatusObs",
    "CurrentStatusProfile",
    "CoverageResult",
    "Dataset",
    "ExperimentConfig",
    "ExperimentResult",
    "GridSpec",
    "IcmConfig",
    "IcmResult",
    "InfoEstimate",
    "KERNEL_BACKEND",
    "KStepTrace",
    "MleResult",
    "ProfileEvaluator",
    "QuadraticProfile",
    "RateStudyResult",
    "ReplicateReport",
    "RightCensoredObs",
    "RightCensoredProfile",
    "RiskSetIndex",
    "SamplerConfig",
    "SamplerOutput",
    "Scheme",
    "StepFunction",
    "StepSchedule",
    "Termination",
    "TrueModel",
    "analytic_info_rc",
    "analytic_score_rc",
    "build_risk_sets",
    "calibrate_censoring",
    "confidence_interval",
    "coverage_study",
    "generate_current_status",
    "generate_right_censored",
    "grid_search",
    "kstep",
    "log_profile_cs",
    "log_profile_rc",
    "npmle_hazard_cs",
    "pava",
    "profile_information",
    "profile_mle",
    "profile_sampler",
    "profile_score",
    "rate_study",
    "read_dataset_csv",
    "remainder_rate",
    "required_steps",
    "run_experiment",
    "run_table",
    "step_schedule",
    "stochastic_search",
    "write_dataset_csv",
]
