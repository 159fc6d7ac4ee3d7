import io

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rmbayes.errors import DegenerateDataError, DimensionError, DomainError
from rmbayes.anova import read_matrix_csv, rm_anova, summary_from_anova
from rmbayes.evidence import pearson_bf_rm


def lstsq_decomposition(y):
    """Sums of squares from nested effect-coded least-squares fits."""
    n, k = y.shape
    obs = y.ravel()
    subj = np.repeat(np.arange(n), k)
    cond = np.tile(np.arange(k), n)

    def codes(index, levels):
        return np.column_stack([(index == j).astype(float) - (index == levels - 1) for j in range(levels - 1)])

    ones = np.ones((n * k, 1))
    designs = {
        "mean": ones,
        "subject": np.hstack([ones, codes(subj, n)]),
        "treatment": np.hstack([ones, codes(cond, k)]),
        "full": np.hstack([ones, codes(subj, n), codes(cond, k)]),
    }
    rss = {}
    for name, X in designs.items():
        beta, *_ = np.linalg.lstsq(X, obs, rcond=None)
        r = obs - X @ beta
        rss[name] = float(r @ r)
    return {
        "sst": rss["mean"],
        "ssa": rss["subject"] - rss["full"],
        "ssb": rss["treatment"] - rss["full"],
        "ssr": rss["full"],
    }


def test_hand_computed_example():
    # grand mean 8/3; column means 2, 10/3; row means 3/2, 3, 7/2
    table = rm_anova([[1, 2], [2, 4], [3, 4]])
    assert table.ssa == pytest.approx(8 / 3, rel=1e-14)
    assert table.ssb == pytest.approx(13 / 3, rel=1e-14)
    assert table.sst == pytest.approx(22 / 3, rel=1e-14)
    assert table.ssr == pytest.approx(1 / 3, rel=1e-13)
    assert table.f_stat == pytest.approx(16.0, rel=1e-12)
    assert (table.df_treatment, table.df_residual) == (1, 2)


def test_perfectly_additive_data_is_degenerate():
    with pytest.raises(DegenerateDataError):
        rm_anova([[1, 2], [2, 3], [3, 4]])


def test_equal_column_means_give_zero_f():
    table = rm_anova([[1, 2], [2, 1], [3, 3]])
    assert table.ssa == pytest.approx(0.0, abs=1e-15)
    assert table.f_stat == pytest.approx(0.0, abs=1e-14)
    assert table.p_value == pytest.approx(1.0)


def test_identical_columns_are_degenerate():
    with pytest.raises(DegenerateDataError):
        rm_anova([[1, 1, 1], [2, 2, 2], [5, 5, 5]])


@pytest.mark.parametrize("shape", [(1, 3), (5, 1), (4,)])
def test_dimension_errors(shape):
    with pytest.raises(DimensionError):
        rm_anova(np.ones(shape))


def test_missing_cells_rejected():
    with pytest.raises(DomainError):
        rm_anova([[1.0, np.nan], [2.0, 3.0], [1.0, 0.0]])


def test_random_matrix_against_least_squares():
    rng = np.random.default_rng(3)
    y = rng.normal(size=(20, 3)) + np.array([0.0, 0.4, 0.8])
    table = rm_anova(y)
    ref = lstsq_decomposition(y)
    f_ref = (ref["ssa"] / ref["ssr"]) * 19
    assert table.f_stat == pytest.approx(f_ref, rel=1e-9)
    for key in ("ssa", "ssb", "ssr", "sst"):
        assert getattr(table, key) == pytest.approx(ref[key], rel=1e-9)


def test_summary_from_anova():
    rng = np.random.default_rng(11)
    y = rng.normal(size=(20, 3))
    table = rm_anova(y)
    stats = summary_from_anova(table, 20, 3)
    assert (stats.f_stat, stats.x, stats.y, stats.n_subjects, stats.k_conditions) == (table.f_stat, 2, 38, 20, 3)
    assert np.isfinite(pearson_bf_rm(stats, -0.5).log_bf10)


def test_two_by_two_rejected_downstream():
    table = rm_anova([[1.0, 2.0], [3.0, 3.5]])
    stats = summary_from_anova(table, 2, 2)
    assert stats.y == 1
    with pytest.raises(DomainError):
        pearson_bf_rm(stats, -0.5)


matrices = st.tuples(st.integers(2, 30), st.integers(2, 6)).flatmap(
    lambda nk: arrays(np.float64, nk, elements=st.floats(-100, 100, allow_nan=False, width=64))
)


def _well_conditioned(y):
    # Property checks need cell spread well above rounding of the shifted values.
    try:
        table = rm_anova(y)
    except DegenerateDataError:
        return None
    if table.sst < y.size or table.ssr < 1e-2 * table.sst:
        return None
    return table


def _assert_same_ss(a, b, keys=("ssa", "ssb", "ssr")):
    for key in keys:
        assert abs(getattr(a, key) - getattr(b, key)) <= 1e-9 * b.sst


@settings(max_examples=150, deadline=None)
@given(matrices, st.floats(-100, 100))
def test_translation_invariance(y, c):
    base = _well_conditioned(y)
    assume(base is not None)
    shifted = rm_anova(y + c)
    _assert_same_ss(shifted, base)
    assert shifted.f_stat == pytest.approx(base.f_stat, rel=1e-9)


@settings(max_examples=150, deadline=None)
@given(matrices, st.data())
def test_subject_shift_absorption(y, data):
    base = _well_conditioned(y)
    assume(base is not None)
    shifts = data.draw(arrays(np.float64, y.shape[0], elements=st.floats(-50, 50, width=64)))
    moved = rm_anova(y + shifts[:, None])
    _assert_same_ss(moved, base, keys=("ssa", "ssr"))
    assert moved.f_stat == pytest.approx(base.f_stat, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_row_permutation_invariance(y, rnd):
    base = _well_conditioned(y)
    assume(base is not None)
    order = list(range(y.shape[0]))
    rnd.shuffle(order)
    perm = rm_anova(y[order])
    _assert_same_ss(perm, base, keys=("ssa", "ssb", "ssr", "sst"))
    assert perm.f_stat == pytest.approx(base.f_stat, rel=1e-10)
    assert perm.p_value == pytest.approx(base.p_value, rel=1e-9, abs=1e-15)
    assert (perm.df_treatment, perm.df_residual) == (base.df_treatment, base.df_residual)


@settings(max_examples=100, deadline=None)
@given(matrices, st.floats(1e-3, 1e3))
def test_scale_equivariance(y, s):
    base = _well_conditioned(y)
    assume(base is not None)
    scaled = rm_anova(y * s)
    for key in ("ssa", "ssb", "ssr", "sst"):
        assert abs(getattr(scaled, key) - s * s * getattr(base, key)) <= 1e-9 * s * s * base.sst
    assert scaled.f_stat == pytest.approx(base.f_stat, rel=1e-9)


@pytest.mark.parametrize("n, k", [(2, 2), (20, 3), (100, 6), (500, 10)])
def test_decomposition(n, k):
    rng = np.random.default_rng(n * k)
    y = rng.normal(loc=50.0, size=(n, k)) + rng.normal(size=(n, 1)) * 3
    t = rm_anova(y)
    assert t.sst == pytest.approx(t.ssa + t.ssb + t.ssr, rel=1e-10)
    assert t.f_stat == pytest.approx((t.ssa / t.ssr) * (t.df_residual / t.df_treatment), rel=1e-12)


class TestCsv:
    def test_reads_matrix(self):
        names, data = read_matrix_csv(io.StringIO("subject,a,b\n1,1,2\n2,2,4\n3,3,4\n"))
        assert names == ["a", "b"]
        np.testing.assert_array_equal(data, [[1, 2], [2, 4], [3, 4]])

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("subject,a,b\n1,1,2\n2,2\n", "row 3"),
            ("subject,a,b\n1,1,x\n", "column 'b'"),
            ("subject,a,b\n1,1,\n", "missing"),
            ("id,a,b\n1,1,2\n", "header"),
            ("subject,a\n1,1\n", "header"),
            ("", "empty"),
        ],
    )
    def test_diagnostics(self, text, fragment):
        with pytest.raises((DomainError, DimensionError), match=fragment):
            read_matrix_csv(io.StringIO(text))
