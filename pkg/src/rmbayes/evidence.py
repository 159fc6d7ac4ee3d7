"""Bayes factors for one-way ANOVA designs computed from summary statistics.

All Bayes factors are carried as natural logs (``log_bf10``). The
repeated-measures Pearson Bayes factor needs only the F statistic and its
degrees of freedom::

    BF10 = G(x/2 + a + 1) G((y-1)/2) / (G((x+y-1)/2) G(a+1))
           * (y / (y + x F)) ** (a - (y-3)/2)

where ``G`` is the gamma function and ``a`` is the Pearson prior shape
``alpha`` in [-1/2, 0].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .quadrature import log_integrate_half_line
from .special import f_upper_tail, log_beta, log_gamma

__all__ = [
    "Method",
    "Hypothesis",
    "SummaryStats",
    "PriorSpec",
    "BayesFactor",
    "EvidenceReport",
    "pearson_bf_rm",
    "pearson_bf_between",
    "bic_bf_rm",
    "sellke_bound",
    "posterior_prob",
    "pearson_prior_density",
    "log_pearson_prior_density",
    "gds_integral_oracle",
    "evidence_report",
]

ALPHA_MIN = -0.5
ALPHA_MAX = 0.0
_LOG_MAX_FLOAT = math.log(np.finfo(float).max)


class Method(str, enum.Enum):
    PEARSON_RM = "pearson-rm"
    PEARSON_BETWEEN = "pearson-between"
    BIC_RM = "bic-rm"
    GDS_ORACLE = "gds-oracle"


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"


def _is_whole(v) -> bool:
    return float(v).is_integer()


@dataclass(frozen=True)
class SummaryStats:
    """An F statistic with its degrees of freedom, as an ANOVA table reports it.

    ``x`` is the treatment df and ``y`` the residual df. When both
    ``n_subjects`` and ``k_conditions`` are given they must agree with the
    repeated-measures dfs ``x = k - 1`` and ``y = (n - 1)(k - 1)``.
    """

    f_stat: float
    x: int
    y: int
    n_subjects: Optional[int] = None
    k_conditions: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.f_stat) or self.f_stat < 0:
            raise DomainError(f"f_stat must be a finite value >= 0, got {self.f_stat!r}")
        for name in ("x", "y"):
            v = getattr(self, name)
            if not _is_whole(v) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if self.n_subjects is not None and (not _is_whole(self.n_subjects) or self.n_subjects < 1):
            raise DomainError(f"n_subjects must be a positive integer, got {self.n_subjects!r}")
        if self.k_conditions is not None and (not _is_whole(self.k_conditions) or self.k_conditions < 2):
            raise DomainError(f"k_conditions must be an integer >= 2, got {self.k_conditions!r}")
        if self.n_subjects is not None and self.k_conditions is not None:
            n, k = self.n_subjects, self.k_conditions
            if self.x != k - 1 or self.y != (n - 1) * (k - 1):
                raise DomainError(
                    f"inconsistent design: n={n}, k={k} implies x={k - 1}, "
                    f"y={(n - 1) * (k - 1)}, got x={self.x}, y={self.y}"
                )

    @classmethod
    def from_design(cls, f_stat: float, n: int, k: int) -> "SummaryStats":
        """Build repeated-measures summary statistics from n subjects and k conditions."""
        if not _is_whole(n) or n < 1 or not _is_whole(k) or k < 2:
            raise DomainError(f"need integer n >= 1 and k >= 2, got n={n!r}, k={k!r}")
        n, k = int(n), int(k)
        return cls(f_stat, k - 1, (n - 1) * (k - 1), n, k)

    def rm_design(self) -> tuple[int, int]:
        """(n, k) for a repeated-measures design, recovered from the dfs if absent."""
        k = self.k_conditions if self.k_conditions is not None else self.x + 1
        if self.n_subjects is not None:
            return int(self.n_subjects), int(k)
        if self.y % self.x:
            raise DomainError(
                f"y={self.y} is not a multiple of x={self.x}; not a one-way repeated-measures design"
            )
        return self.y // self.x + 1, int(k)

    @property
    def residual_ratio(self) -> float:
        """SSR / (SSA + SSR), i.e. y / (y + x F)."""
        return self.y / (self.y + self.x * self.f_stat)


@dataclass(frozen=True)
class PriorSpec:
    """Pearson Type VI prior on the variance ratio tau."""

    alpha: float
    kappa: float
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha <= -1:
            raise DomainError(f"prior alpha must exceed -1, got {self.alpha!r}")
        if not math.isfinite(self.kappa) or self.kappa <= 0:
            raise DomainError(f"prior kappa must be positive, got {self.kappa!r}")
        if not math.isfinite(self.beta) or self.beta <= -1:
            raise DomainError(f"prior beta must exceed -1, got {self.beta!r}")

    @classmethod
    def for_design(cls, alpha: float, n: float, n_total: float, k: int) -> "PriorSpec":
        """kappa = n and beta = (n_total - k)/2 - alpha - 2."""
        return cls(alpha=alpha, kappa=n, beta=(n_total - k) / 2.0 - alpha - 2.0)

    @property
    def mode(self) -> float:
        """Location of the density maximum (0 when beta <= 0)."""
        return max(0.0, self.beta / (self.kappa * (self.alpha + 2.0)))


def _exp_guarded(v: float) -> float:
    return math.inf if v > _LOG_MAX_FLOAT else math.exp(v)


@dataclass(frozen=True)
class BayesFactor:
    log_bf10: float
    method: Method
    alpha_used: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.log_bf10):
            raise DomainError(f"log Bayes factor must be finite, got {self.log_bf10!r}")

    @property
    def bf10(self) -> float:
        return _exp_guarded(self.log_bf10)

    @property
    def bf01(self) -> float:
        return _exp_guarded(-self.log_bf10)

    @property
    def log_bf01(self) -> float:
        return -self.log_bf10

    @property
    def log10_bf10(self) -> float:
        return self.log_bf10 / math.log(10.0)

    @property
    def favored(self) -> Hypothesis:
        # bf10 == 1 goes to H0
        return Hypothesis.H1 if self.log_bf10 > 0 else Hypothesis.H0

    @property
    def directed_bf(self) -> float:
        return _exp_guarded(abs(self.log_bf10))


@dataclass(frozen=True)
class EvidenceReport:
    bf10: float
    bf01: float
    log_bf10: float
    favored: Hypothesis
    directed_bf: float
    posterior_h0: float
    posterior_h1: float
    method: Method
    alpha_used: Optional[float]
    prior_odds_h0: float
    p_value: Optional[float] = None
    sellke_bound_bf10: Optional[float] = None

    @property
    def log10_bf10(self) -> float:
        return self.log_bf10 / math.log(10.0)


def _check_alpha(alpha: float, permissive: bool) -> float:
    if not math.isfinite(alpha):
        raise DomainError(f"alpha must be finite, got {alpha!r}")
    if permissive:
        if alpha <= -1:
            raise DomainError(f"alpha must exceed -1, got {alpha!r}")
    elif not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise DomainError(
            f"alpha must lie in [-1/2, 0], got {alpha!r} (use permissive mode for alpha > -1)"
        )
    return float(alpha)


def pearson_bf_rm(stats: SummaryStats, alpha: float = -0.5, *, permissive: bool = False) -> BayesFactor:
    """Analytic Pearson Bayes factor for a one-way repeated-measures design.

    Only ``stats.f_stat``, ``stats.x`` and ``stats.y`` enter the formula.
    Requires ``y >= 2``.
    """
    alpha = _check_alpha(alpha, permissive)
    x, y = float(stats.x), float(stats.y)
    if y < 2:
        raise DomainError(f"residual df y must be >= 2, got {stats.y}")
    log_bf = (
        log_gamma(x / 2.0 + alpha + 1.0)
        + log_gamma((y - 1.0) / 2.0)
        - log_gamma((x + y - 1.0) / 2.0)
        - log_gamma(alpha + 1.0)
        + (alpha - (y - 3.0) / 2.0) * math.log(stats.residual_ratio)
    )
    return BayesFactor(log_bf, Method.PEARSON_RM, alpha)


def pearson_bf_between(
    f_stat: float, k: int, n_total: int, alpha: float = -0.5, *, permissive: bool = False
) -> BayesFactor:
    """Analytic Pearson Bayes factor for a between-subjects one-way design.

    ``n_total`` is the total number of observations across ``k`` groups.
    """
    alpha = _check_alpha(alpha, permissive)
    if not _is_whole(k) or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k!r}")
    if not _is_whole(n_total) or n_total <= k:
        raise DomainError(f"n_total must be an integer > k, got n_total={n_total!r}, k={k!r}")
    if not math.isfinite(f_stat) or f_stat < 0:
        raise DomainError(f"f_stat must be a finite value >= 0, got {f_stat!r}")
    k, big_n = float(k), float(n_total)
    x, y = k - 1.0, big_n - k
    log_bf = (
        log_gamma(k / 2.0 + alpha + 0.5)
        + log_gamma((big_n - k) / 2.0)
        - log_gamma((big_n - 1.0) / 2.0)
        - log_gamma(alpha + 1.0)
        + (alpha - (big_n - k - 2.0) / 2.0) * math.log(y / (y + x * f_stat))
    )
    return BayesFactor(log_bf, Method.PEARSON_BETWEEN, alpha)


def bic_bf_rm(f_stat: float, n: int, k: int) -> BayesFactor:
    """BIC approximation to the repeated-measures Bayes factor.

    ``log BF01 = ((k-1) ln(nk - n) + (n - nk) ln(1 + F/(n-1))) / 2``
    """
    if not _is_whole(n) or n < 2 or not _is_whole(k) or k < 2:
        raise DomainError(f"need integer n >= 2 and k >= 2, got n={n!r}, k={k!r}")
    if not math.isfinite(f_stat) or f_stat < 0:
        raise DomainError(f"f_stat must be a finite value >= 0, got {f_stat!r}")
    n, k = float(n), float(k)
    log_bf01 = 0.5 * ((k - 1.0) * math.log(n * k - n) + (n - n * k) * math.log1p(f_stat / (n - 1.0)))
    return BayesFactor(-log_bf01, Method.BIC_RM, None)


def sellke_bound(p: float) -> float:
    """Upper bound ``-1 / (e p ln p)`` on BF10 implied by a p-value below 1/e."""
    if not math.isfinite(p) or p <= 0.0 or p >= 1.0 / math.e:
        raise DomainError(f"the Sellke bound needs 0 < p < 1/e (~0.3679), got {p!r}")
    return -1.0 / (math.e * p * math.log(p))


def posterior_prob(bf: BayesFactor, prior_odds_h0: float = 1.0) -> tuple[float, float]:
    """Posterior probabilities ``(p(H0 | y), p(H1 | y))``.

    ``prior_odds_h0`` is p(H0)/p(H1). The smaller probability is computed
    directly from the log posterior odds and the other as its complement.
    """
    if not math.isfinite(prior_odds_h0) or prior_odds_h0 <= 0:
        raise DomainError(f"prior odds must be positive, got {prior_odds_h0!r}")
    log_odds_h1 = bf.log_bf10 - math.log(prior_odds_h0)
    if log_odds_h1 >= 0:
        p0 = 1.0 / (1.0 + math.exp(log_odds_h1)) if log_odds_h1 < _LOG_MAX_FLOAT else 0.0
        return p0, 1.0 - p0
    p1 = 1.0 / (1.0 + math.exp(-log_odds_h1)) if -log_odds_h1 < _LOG_MAX_FLOAT else 0.0
    return 1.0 - p1, p1


def _log_prior_array(tau: np.ndarray, prior: PriorSpec) -> np.ndarray:
    kt = prior.kappa * np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            math.log(prior.kappa)
            + prior.beta * np.log(kt)
            - (prior.alpha + prior.beta + 2.0) * np.log1p(kt)
            - log_beta(prior.alpha + 1.0, prior.beta + 1.0)
        )
    return out


def log_pearson_prior_density(tau: float, prior: PriorSpec) -> float:
    """Log of the Pearson Type VI density; ``-inf`` at tau = 0 when beta > 0."""
    if math.isnan(tau) or tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    if tau == 0.0:
        if prior.beta > 0:
            return -math.inf
        if prior.beta < 0:
            return math.inf
        return math.log(prior.kappa) - log_beta(prior.alpha + 1.0, prior.beta + 1.0)
    return float(_log_prior_array(np.array([tau]), prior)[0])


def pearson_prior_density(tau: float, prior: PriorSpec) -> float:
    """Pearson Type VI prior density on tau at ``tau``."""
    return _exp_guarded(log_pearson_prior_density(tau, prior))


def gds_integral_oracle(
    stats: SummaryStats,
    alpha: float,
    n_eff: float,
    k: int,
    *,
    n: Optional[float] = None,
    rel_tol: float = 1e-9,
    permissive: bool = False,
) -> BayesFactor:
    """Bayes factor by direct numerical integration over the variance ratio.

    Integrates

        (1 + n tau)^((1-k)/2) * (1 - n tau/(1 + n tau) * R)^((1-n_eff)/2) * prior(tau)

    over tau in (0, inf), with ``R = x F / (y + x F)`` and the design-scaled Pearson
    prior (``kappa = n``, ``beta = (n_eff - k)/2 - alpha - 2``). For a
    repeated-measures design pass ``n_eff = n (k - 1)``; for a
    between-subjects design pass the total sample size. ``n`` defaults to
    ``stats.n_subjects``, else ``n_eff / k``; the value of the integral
    does not depend on it.

    Raises
    ------
    ConvergenceError
        If adaptive quadrature cannot meet ``rel_tol``.
    """
    alpha = _check_alpha(alpha, permissive)
    if n is None:
        n = stats.n_subjects if stats.n_subjects is not None else n_eff / k
    prior = PriorSpec.for_design(alpha, n, n_eff, k)
    ratio = stats.x * stats.f_stat / (stats.y + stats.x * stats.f_stat)
    scale = float(n)

    def log_integrand(tau):
        nt = scale * tau
        w = nt / (1.0 + nt)
        return (
            0.5 * (1.0 - k) * np.log1p(nt)
            + 0.5 * (1.0 - n_eff) * np.log1p(-w * ratio)
            + _log_prior_array(tau, prior)
        )

    log_bf = log_integrate_half_line(log_integrand, scale=prior.kappa, rel_tol=rel_tol)
    return BayesFactor(log_bf, Method.GDS_ORACLE, alpha)


def evidence_report(
    stats: SummaryStats,
    alpha: Optional[float] = -0.5,
    method: Method = Method.PEARSON_RM,
    prior_odds_h0: float = 1.0,
    *,
    permissive: bool = False,
) -> EvidenceReport:
    """Bundle a Bayes factor with its direction, posteriors, p-value and Sellke bound.

    For ``PEARSON_BETWEEN`` the design is read from the dfs as ``k = x + 1``
    and ``N = x + y + 1``. ``BIC_RM`` ignores ``alpha``.
    """
    method = Method(method)
    if method is Method.PEARSON_RM:
        bf = pearson_bf_rm(stats, alpha, permissive=permissive)
    elif method is Method.PEARSON_BETWEEN:
        bf = pearson_bf_between(stats.f_stat, stats.x + 1, stats.x + stats.y + 1, alpha, permissive=permissive)
    elif method is Method.BIC_RM:
        n, k = stats.rm_design()
        bf = bic_bf_rm(stats.f_stat, n, k)
    else:
        raise DomainError(f"evidence reports are not produced for method {method.value!r}")
    p0, p1 = posterior_prob(bf, prior_odds_h0)
    p_value = f_upper_tail(stats.f_stat, stats.x, stats.y)
    bound = sellke_bound(p_value) if 0.0 < p_value < 1.0 / math.e else None
    return EvidenceReport(
        bf10=bf.bf10,
        bf01=bf.bf01,
        log_bf10=bf.log_bf10,
        favored=bf.favored,
        directed_bf=bf.directed_bf,
        posterior_h0=p0,
        posterior_h1=p1,
        method=method,
        alpha_used=bf.alpha_used,
        prior_odds_h0=float(prior_odds_h0),
        p_value=p_value,
        sellke_bound_bf10=bound,
    )
