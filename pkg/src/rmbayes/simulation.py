"""Monte Carlo benchmark of summary-statistic Bayes factors under a mixed model.

Datasets follow ``y_ij = mu + a_j + p_i + e_ij`` with treatment effects
``a_j ~ N(0, tau * sigma_eps^2)``, subject effects
``p_i ~ N(0, sigma_eps^2 * rho / (1 - rho))`` and errors
``e_ij ~ N(0, sigma_eps^2)``, so ``rho`` is the intraclass correlation of
two cells from the same subject. Every replicate draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(cell, replicate))``,
which makes results independent of how replicates are scheduled.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .anova import rm_anova
from .errors import DegenerateDataError, DomainError, MissingMethodError
from .evidence import (
    ALPHA_MAX,
    ALPHA_MIN,
    BayesFactor,
    Hypothesis,
    bic_bf_rm,
    pearson_bf_rm,
    posterior_prob,
    SummaryStats,
)

__all__ = [
    "MixedModelSpec",
    "SimulationConfig",
    "TrialResult",
    "AccuracyRow",
    "ConsistencyRow",
    "GridResult",
    "method_label",
    "generate_dataset",
    "run_cell",
    "run_grid",
    "accuracy",
    "consistency",
    "posterior_distribution_export",
    "write_accuracy_csv",
    "write_consistency_csv",
    "load_config",
    "parse_config",
]


@dataclass(frozen=True)
class MixedModelSpec:
    n: int
    k: int = 3
    tau: float = 0.0
    rho: float = 0.0
    mu: float = 0.0
    sigma_eps: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.k) != self.k or self.k < 2:
            raise DomainError(f"k must be an integer >= 2, got {self.k!r}")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise DomainError(f"tau must be >= 0, got {self.tau!r}")
        if not (0.0 <= self.rho < 1.0):
            raise DomainError(f"rho must lie in [0, 1), got {self.rho!r}")
        if not math.isfinite(self.sigma_eps) or self.sigma_eps <= 0:
            raise DomainError(f"sigma_eps must be positive, got {self.sigma_eps!r}")

    @property
    def truth(self) -> Hypothesis:
        return Hypothesis.H1 if self.tau > 0 else Hypothesis.H0

    @property
    def key(self) -> tuple:
        return (self.tau, self.n, self.rho)


def method_label(method: str, alpha: Optional[float] = None) -> str:
    """Column label for a method, e.g. ``pearson(alpha=-0.5)`` or ``bic``."""
    if method == "pearson":
        return f"pearson(alpha={alpha:g})"
    return method


@dataclass(frozen=True)
class SimulationConfig:
    spec_grid: tuple
    replicates: int = 1000
    seed: int = 0
    alphas: tuple = (-0.5, 0.0)
    methods: tuple = ("pearson", "bic")

    def __post_init__(self):
        object.__setattr__(self, "spec_grid", tuple(self.spec_grid))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.spec_grid:
            raise DomainError("simulation grid is empty")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise DomainError(f"replicates must be a positive integer, got {self.replicates!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError(f"seed must be an unsigned integer, got {self.seed!r}")
        unknown = set(self.methods) - {"pearson", "bic"}
        if unknown:
            raise DomainError(f"unknown methods: {sorted(unknown)}")
        if "pearson" in self.methods:
            if not self.alphas:
                raise DomainError("pearson method requires at least one alpha")
            for a in self.alphas:
                if not ALPHA_MIN <= a <= ALPHA_MAX:
                    raise DomainError(f"alpha must lie in [-1/2, 0], got {a!r}")

    @property
    def method_labels(self) -> list[str]:
        labels = []
        for m in self.methods:
            if m == "pearson":
                labels.extend(method_label(m, a) for a in self.alphas)
            else:
                labels.append(method_label(m))
        return labels

    @classmethod
    def benchmark_grid(cls, replicates: int = 1000, seed: int = 0, k: int = 3) -> "SimulationConfig":
        """The 18-cell benchmark grid: tau x n x rho = {0, .5, 1} x {10, 30, 80} x {.2, .8}."""
        grid = [
            MixedModelSpec(n=n, k=k, tau=tau, rho=rho)
            for tau in (0.0, 0.5, 1.0)
            for n in (10, 30, 80)
            for rho in (0.2, 0.8)
        ]
        return cls(grid, replicates=replicates, seed=seed)


@dataclass(frozen=True)
class TrialResult:
    cell: tuple  # (tau, n, rho)
    replicate: int
    f_stat: float
    p_value: float
    log_bf10: dict = field(default_factory=dict)
    chosen: dict = field(default_factory=dict)
    posterior_h1: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AccuracyRow:
    tau: float
    n: int
    rho: float
    method: str
    accuracy: float
    replicates: int


@dataclass(frozen=True)
class ConsistencyRow:
    tau: float
    n: int
    rho: float
    method_a: str
    method_b: str
    agreement: float
    replicates: int


@dataclass
class GridResult:
    trials: list
    accuracy: list
    consistency: list
    excluded: dict  # cell key -> count of degenerate replicates
    methods: list


def generate_dataset(spec: MixedModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one n x k dataset from the random-effects model of ``spec``."""
    var_eps = spec.sigma_eps**2
    sd_a = math.sqrt(spec.tau * var_eps)
    sd_p = math.sqrt(var_eps * spec.rho / (1.0 - spec.rho))
    a = rng.normal(0.0, sd_a, size=spec.k) if sd_a > 0 else np.zeros(spec.k)
    p = rng.normal(0.0, sd_p, size=spec.n) if sd_p > 0 else np.zeros(spec.n)
    e = rng.normal(0.0, spec.sigma_eps, size=(spec.n, spec.k))
    return spec.mu + a[np.newaxis, :] + p[:, np.newaxis] + e


def replicate_rng(seed: int, cell_index: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(cell_index, replicate))
    return np.random.Generator(np.random.PCG64(ss))


def _bayes_factors(stats: SummaryStats, spec: MixedModelSpec, config: SimulationConfig) -> dict:
    out: dict[str, BayesFactor] = {}
    for m in config.methods:
        if m == "pearson":
            for a in config.alphas:
                out[method_label(m, a)] = pearson_bf_rm(stats, a)
        else:
            out[method_label(m)] = bic_bf_rm(stats.f_stat, spec.n, spec.k)
    return out


def _run_replicate(config: SimulationConfig, cell_index: int, replicate: int) -> Optional[TrialResult]:
    spec = config.spec_grid[cell_index]
    data = generate_dataset(spec, replicate_rng(config.seed, cell_index, replicate))
    try:
        table = rm_anova(data)
    except DegenerateDataError:
        return None
    stats = SummaryStats(table.f_stat, table.df_treatment, table.df_residual, spec.n, spec.k)
    bfs = _bayes_factors(stats, spec, config)
    return TrialResult(
        cell=spec.key,
        replicate=replicate,
        f_stat=table.f_stat,
        p_value=table.p_value,
        log_bf10={m: bf.log_bf10 for m, bf in bfs.items()},
        chosen={m: bf.favored for m, bf in bfs.items()},
        posterior_h1={m: posterior_prob(bf)[1] for m, bf in bfs.items()},
    )


def run_cell(config: SimulationConfig, cell_index: int, threads: int = 1) -> tuple[list, int]:
    """Run every replicate of one grid cell; returns (trials, degenerate count)."""
    reps = range(config.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(lambda r: _run_replicate(config, cell_index, r), reps))
    else:
        raw = [_run_replicate(config, cell_index, r) for r in reps]
    trials = [t for t in raw if t is not None]
    return trials, len(raw) - len(trials)


def run_grid(config: SimulationConfig, threads: int = 1) -> GridResult:
    """Simulate every cell of ``config`` and aggregate accuracy and pairwise consistency.

    Output order is (cell as listed in the grid, replicate index) whatever
    ``threads`` is. Degenerate replicates are dropped and counted per cell.
    """
    trials = []
    excluded = {}
    for idx, spec in enumerate(config.spec_grid):
        cell_trials, bad = run_cell(config, idx, threads)
        trials.extend(cell_trials)
        excluded[spec.key] = bad
    labels = config.method_labels
    acc = accuracy(trials, config.spec_grid, labels)
    cons = []
    for a, b in itertools.combinations(labels, 2):
        cons.extend(consistency(trials, a, b))
    return GridResult(trials, acc, cons, excluded, labels)


def _group(trials: Iterable[TrialResult]) -> dict:
    groups: dict[tuple, list] = {}
    for t in trials:
        groups.setdefault(t.cell, []).append(t)
    return groups


def accuracy(trials: Sequence[TrialResult], grid: Sequence[MixedModelSpec], methods: Sequence[str]) -> list:
    """Fraction of replicates per (cell, method) in which the generating model was chosen."""
    groups = _group(trials)
    rows = []
    for spec in grid:
        cell = groups.get(spec.key, [])
        for m in methods:
            hits = sum(1 for t in cell if t.chosen[m] is spec.truth)
            rows.append(AccuracyRow(spec.tau, spec.n, spec.rho, m, hits / len(cell) if cell else math.nan, len(cell)))
    return rows


def consistency(results: Sequence[TrialResult], method_a: str, method_b: str) -> list:
    """Per-cell fraction of replicates in which both methods chose the same model."""
    if not results:
        return []
    for m in (method_a, method_b):
        if m not in results[0].chosen:
            raise MissingMethodError(m)
    rows = []
    for (tau, n, rho), cell in _group(results).items():
        same = sum(1 for t in cell if t.chosen[method_a] is t.chosen[method_b])
        rows.append(ConsistencyRow(tau, n, rho, method_a, method_b, same / len(cell), len(cell)))
    return rows


def _fmt(v: float) -> str:
    return repr(float(v))


def posterior_distribution_export(results: Sequence[TrialResult], stream: TextIO) -> int:
    """Write long-format ``tau,n,rho,method,replicate,posterior_h1`` CSV; returns row count."""
    if not results:
        raise DomainError("no simulation results to export")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tau", "n", "rho", "method", "replicate", "posterior_h1"])
    count = 0
    for t in results:
        tau, n, rho = t.cell
        for m, p in t.posterior_h1.items():
            writer.writerow([_fmt(tau), n, _fmt(rho), m, t.replicate, _fmt(p)])
            count += 1
    return count


def write_accuracy_csv(rows: Sequence[AccuracyRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tau", "n", "rho", "method", "accuracy", "replicates"])
    for r in rows:
        writer.writerow([_fmt(r.tau), r.n, _fmt(r.rho), r.method, _fmt(r.accuracy), r.replicates])


def write_consistency_csv(rows: Sequence[ConsistencyRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tau", "n", "rho", "method_a", "method_b", "agreement", "replicates"])
    for r in rows:
        writer.writerow([_fmt(r.tau), r.n, _fmt(r.rho), r.method_a, r.method_b, _fmt(r.agreement), r.replicates])


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]


def parse_config(text: str) -> SimulationConfig:
    """Parse an INI-style ``[simulation]`` section into a SimulationConfig.

    Keys: ``n``, ``tau``, ``rho`` and ``alphas`` take comma-separated lists;
    ``k``, ``replicates``, ``seed``, ``mu`` and ``sigma_eps`` take scalars;
    ``methods`` lists any of ``pearson``, ``bic``. The grid is the product
    tau x n x rho in that nesting order.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise DomainError(f"malformed config: {exc}") from None
    if not parser.has_section("simulation"):
        raise DomainError("config needs a [simulation] section")
    sec = parser["simulation"]
    known = {"n", "k", "tau", "rho", "mu", "sigma_eps", "replicates", "seed", "alphas", "methods"}
    unknown = set(sec) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    try:
        ns = [int(v) for v in _floats(sec.get("n", "10,30,80"))]
        taus = _floats(sec.get("tau", "0,0.5,1.0"))
        rhos = _floats(sec.get("rho", "0.2,0.8"))
        k = int(sec.get("k", "3"))
        mu = float(sec.get("mu", "0"))
        sigma = float(sec.get("sigma_eps", "1"))
        replicates = int(sec.get("replicates", "1000"))
        seed = int(sec.get("seed", "0"))
        alphas = _floats(sec.get("alphas", "-0.5,0"))
    except ValueError as exc:
        raise DomainError(f"malformed config value: {exc}") from None
    methods = [m.strip() for m in sec.get("methods", "pearson,bic").split(",") if m.strip()]
    grid = [
        MixedModelSpec(n=n, k=k, tau=tau, rho=rho, mu=mu, sigma_eps=sigma)
        for tau in taus
        for n in ns
        for rho in rhos
    ]
    return SimulationConfig(grid, replicates=replicates, seed=seed, alphas=alphas, methods=methods)


def load_config(path) -> SimulationConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
