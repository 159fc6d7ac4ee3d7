import io
import math

import numpy as np
import pytest

from rmbayes.anova import rm_anova
from rmbayes.errors import DomainError, MissingMethodError
from rmbayes.evidence import Hypothesis
from rmbayes.simulation import (
    MixedModelSpec,
    SimulationConfig,
    TrialResult,
    accuracy,
    consistency,
    generate_dataset,
    parse_config,
    posterior_distribution_export,
    replicate_rng,
    run_grid,
)
from rmbayes.special import f_inverse_upper_tail


def test_iid_when_no_effects():
    spec = MixedModelSpec(n=1000, k=100, tau=0.0, rho=0.0, mu=2.5)
    y = generate_dataset(spec, np.random.default_rng(0))
    assert y.shape == (1000, 100)
    assert abs(y.mean() - 2.5) < 0.02
    assert y.std() == pytest.approx(1.0, abs=0.01)


def test_intraclass_correlation():
    spec = MixedModelSpec(n=30, k=3, tau=0.0, rho=0.8)
    estimates = []
    for r in range(2000):
        y = generate_dataset(spec, replicate_rng(5, 0, r))
        t = rm_anova(y)
        ms_subject = t.ssb / (spec.n - 1)
        ms_resid = t.ssr / t.df_residual
        var_p = (ms_subject - ms_resid) / spec.k
        estimates.append((var_p, ms_resid))
    var_p, var_e = np.mean(estimates, axis=0)
    assert var_p / (var_p + var_e) == pytest.approx(0.8, abs=0.03)


def test_null_f_calibration():
    spec = MixedModelSpec(n=10, k=3, tau=0.0, rho=0.5)
    f_crit = f_inverse_upper_tail(0.05, 2, 18)
    hits = sum(rm_anova(generate_dataset(spec, replicate_rng(9, 0, r))).f_stat > f_crit for r in range(5000))
    assert hits / 5000 == pytest.approx(0.05, abs=0.01)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n=10, rho=1.0), dict(n=10, rho=-0.1), dict(n=10, tau=-1.0), dict(n=1), dict(n=10, k=1), dict(n=10, sigma_eps=0.0)],
)
def test_invalid_spec(kwargs):
    with pytest.raises(DomainError):
        MixedModelSpec(**kwargs)


def small_config(replicates=60, seed=3):
    grid = [MixedModelSpec(n=12, tau=0.0, rho=0.2), MixedModelSpec(n=12, tau=1.0, rho=0.8)]
    return SimulationConfig(grid, replicates=replicates, seed=seed)


def test_run_grid_shapes():
    res = run_grid(small_config())
    assert len(res.trials) == 120
    assert res.methods == ["pearson(alpha=-0.5)", "pearson(alpha=0)", "bic"]
    assert len(res.accuracy) == 2 * 3
    assert len(res.consistency) == 2 * 3
    assert all(0.0 <= r.accuracy <= 1.0 and r.replicates == 60 for r in res.accuracy)
    assert sum(res.excluded.values()) == 0


def test_choice_rule_and_posterior_agree():
    res = run_grid(small_config())
    for t in res.trials:
        for m, lbf in t.log_bf10.items():
            assert (t.chosen[m] is Hypothesis.H1) == (lbf > 0)
            assert (t.chosen[m] is Hypothesis.H1) == (t.posterior_h1[m] > 0.5)


def test_null_accuracy_complements_false_alarms():
    res = run_grid(small_config())
    for row in res.accuracy:
        if row.tau == 0:
            cell = [t for t in res.trials if t.cell == (row.tau, row.n, row.rho)]
            false_alarm = sum(t.chosen[row.method] is Hypothesis.H1 for t in cell) / len(cell)
            assert row.accuracy + false_alarm == pytest.approx(1.0, abs=1e-15)


def test_deterministic_across_threads():
    a = run_grid(small_config(), threads=1)
    b = run_grid(small_config(), threads=4)
    assert a.trials == b.trials


def test_seed_changes_results():
    a = run_grid(small_config(seed=1))
    b = run_grid(small_config(seed=2))
    assert [t.f_stat for t in a.trials] != [t.f_stat for t in b.trials]


def test_consistency_self_and_bound():
    res = run_grid(small_config())
    for row in consistency(res.trials, "bic", "bic"):
        assert row.agreement == 1.0
    acc = {(r.tau, r.n, r.rho, r.method): r.accuracy for r in res.accuracy}
    for row in res.consistency:
        a = acc[(row.tau, row.n, row.rho, row.method_a)]
        b = acc[(row.tau, row.n, row.rho, row.method_b)]
        assert row.agreement >= abs(a + b - 1) - 1e-12


def test_consistency_missing_method():
    res = run_grid(small_config(replicates=3))
    with pytest.raises(MissingMethodError):
        consistency(res.trials, "bic", "jzs")


def test_posterior_export():
    grid = [MixedModelSpec(n=8, tau=0.0), MixedModelSpec(n=8, tau=0.5)]
    config = SimulationConfig(grid, replicates=3, seed=0, alphas=(-0.5,), methods=("pearson", "bic"))
    res = run_grid(config)
    buf = io.StringIO()
    rows = posterior_distribution_export(res.trials, buf)
    lines = buf.getvalue().splitlines()
    assert rows == 12 and len(lines) == 13
    assert lines[0] == "tau,n,rho,method,replicate,posterior_h1"
    assert all(0.0 <= float(line.split(",")[-1]) <= 1.0 for line in lines[1:])
    with pytest.raises(DomainError):
        posterior_distribution_export([], io.StringIO())


@pytest.mark.slow
def test_null_medians_order():
    grid = [MixedModelSpec(n=n, tau=0.0, rho=0.2) for n in (10, 30, 80)]
    res = run_grid(SimulationConfig(grid, replicates=400, seed=11))
    for spec in grid:
        cell = [t for t in res.trials if t.cell == spec.key]
        med = {m: np.median([t.posterior_h1[m] for t in cell]) for m in res.methods}
        assert med["pearson(alpha=-0.5)"] < med["pearson(alpha=0)"]
        # The BIC and alpha = -1/2 medians are a near tie under the null.
        assert abs(med["pearson(alpha=-0.5)"] - med["bic"]) <= 0.1 * med["bic"]


@pytest.mark.slow
def test_null_accuracy_increases_with_n():
    grid = [MixedModelSpec(n=n, tau=0.0, rho=0.2) for n in (10, 80)]
    res = run_grid(SimulationConfig(grid, replicates=1000, seed=17))
    acc = {(r.n, r.method): r.accuracy for r in res.accuracy}
    for m in res.methods:
        assert acc[(80, m)] >= acc[(10, m)] - 0.02


class TestConfig:
    def test_parse(self):
        cfg = parse_config(
            "[simulation]\nn = 10, 30\nk = 4\ntau = 0, 1\nrho = 0.2\nreplicates = 5\nseed = 9\n"
            "alphas = -0.5\nmethods = pearson, bic\n"
        )
        assert [(s.tau, s.n, s.rho, s.k) for s in cfg.spec_grid] == [
            (0.0, 10, 0.2, 4), (0.0, 30, 0.2, 4), (1.0, 10, 0.2, 4), (1.0, 30, 0.2, 4)
        ]
        assert cfg.replicates == 5 and cfg.seed == 9 and cfg.alphas == (-0.5,)

    @pytest.mark.parametrize(
        "text",
        [
            "n = 10\n",
            "[simulation]\nbogus = 1\n",
            "[simulation]\nreplicates = 0\n",
            "[simulation]\nalphas = 0.3\n",
            "[simulation]\nmethods = jzs\n",
            "[simulation]\nrho = 1.0\n",
            "[simulation]\nn = ten\n",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            parse_config(text)

    def test_benchmark_grid(self):
        cfg = SimulationConfig.benchmark_grid()
        assert len(cfg.spec_grid) == 18 and cfg.replicates == 1000
