"""Analytic Bayes factors for repeated-measures ANOVA from summary statistics."""

__version__ = "0.1.0"

from .anova import AnovaTable, rm_anova, summary_from_anova
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DimensionError,
    DomainError,
    MissingMethodError,
    RMBayesError,
)
from .evidence import (
    BayesFactor,
    EvidenceReport,
    Hypothesis,
    Method,
    PriorSpec,
    SummaryStats,
    bic_bf_rm,
    evidence_report,
    gds_integral_oracle,
    pearson_bf_between,
    pearson_bf_rm,
    pearson_prior_density,
    posterior_prob,
    sellke_bound,
)
from .special import f_upper_tail, log_beta, log_gamma, reg_inc_beta
