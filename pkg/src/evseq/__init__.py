"""Anytime-valid one-sided sequential tests as e-processes.

The package turns four classical testing problems (Gaussian effect size,
Gaussian scale, a regression coefficient with nuisance covariates, and a
label-agnostic Bernoulli proportion) into likelihood-ratio e-processes on
invariantly coarsened data.  The running e-value can be monitored after
every observation and compared against 1/alpha at any data-dependent
stopping time without inflating the type-I error; a numerical harness
(``evseq.verify``) certifies the calibration claims rather than assuming
them.
"""

from .core import (
    EffectSpec,
    EProcessState,
    PriorGrid,
    StoppingRule,
    Trajectory,
    TrajectoryRecord,
    evalue,
    initial_state,
    mixture_log_evalue,
    run,
    run_trajectory,
    should_reject,
    statistic,
    step,
)
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DomainError,
    EvseqError,
    NumericalError,
    RegressionStartup,
    StateError,
)
from .estimators import (
    SequentialBernoulliTest,
    SequentialChiSquareTest,
    SequentialRegressionTest,
    SequentialTTest,
)
from .specfun import (
    NoncentralTParams,
    chisq_scaled_logpdf,
    log_gamma,
    nct_logpdf,
    nct_logratio,
    norm_cdf,
)
from .verify import (
    BernoulliGen,
    GaussianGen,
    RademacherGen,
    RegressionGen,
    SimConfig,
    VerificationReport,
    bern_positivity_check,
    epower_estimate,
    evariable_quadrature_check,
    mc_expectation,
    mlr_grid_check,
    rademacher_exact_expectation,
    taylor_coeff_fit,
    type1_error_mc,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliGen",
    "ConfigError",
    "ContractError",
    "DataError",
    "DomainError",
    "EffectSpec",
    "EProcessState",
    "EvseqError",
    "GaussianGen",
    "NoncentralTParams",
    "NumericalError",
    "PriorGrid",
    "RademacherGen",
    "RegressionGen",
    "RegressionStartup",
    "SequentialBernoulliTest",
    "SequentialChiSquareTest",
    "SequentialRegressionTest",
    "SequentialTTest",
    "SimConfig",
    "StateError",
    "StoppingRule",
    "Trajectory",
    "TrajectoryRecord",
    "VerificationReport",
    "bern_positivity_check",
    "chisq_scaled_logpdf",
    "epower_estimate",
    "evalue",
    "evariable_quadrature_check",
    "initial_state",
    "log_gamma",
    "mc_expectation",
    "mixture_log_evalue",
    "mlr_grid_check",
    "nct_logpdf",
    "nct_logratio",
    "norm_cdf",
    "rademacher_exact_expectation",
    "run",
    "run_trajectory",
    "should_reject",
    "statistic",
    "step",
    "taylor_coeff_fit",
    "type1_error_mc",
]
