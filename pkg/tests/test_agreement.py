import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecgkit import errors
from ecgkit.agreement import (
    CorrMethod,
    SummaryKind,
    auto_correlation,
    average_ranks,
    bland_altman,
    normality_test,
    pearson,
    significance_stars,
    spearman,
    stratified_correlation,
    summarize,
)
from ecgkit.records import PairedMeasurements, Parameter


def paired(a, b):
    return PairedMeasurements.from_arrays(Parameter.QT, a, b)


# --- independent oracles -----------------------------------------------------


def pearson_oracle(a, b):
    """Direct covariance-formula route with plain Python accumulation."""
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def ranks_oracle(values):
    """Explicit tie-group rank assignment."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and values[order[j]] == values[order[i]]:
            j += 1
        mean_rank = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[order[k]] = mean_rank
        i = j
    return ranks


def jarque_bera_oracle(values):
    n = len(values)
    mean = sum(values) / n
    m2 = sum((v - mean) ** 2 for v in values) / n
    m3 = sum((v - mean) ** 3 for v in values) / n
    m4 = sum((v - mean) ** 4 for v in values) / n
    skew = m3 / m2**1.5
    kurt = m4 / m2**2 - 3.0
    return n / 6.0 * (skew**2 + kurt**2 / 4.0)


class TestPearson:
    def test_identity(self):
        a = [100.0, 120.0, 140.0, 150.0]
        assert pearson(paired(a, a)).r == 1.0

    def test_antisymmetry(self):
        a = np.array([100.0, 120.0, 140.0, 150.0])
        result = pearson(paired(a, 500.0 - a))  # b = -a + const keeps values positive
        assert result.r == pytest.approx(-1.0, abs=1e-12)

    def test_matches_direct_oracle(self):
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        b = [2.0, 1.0, 4.0, 3.0, 7.0]
        assert pearson(paired(a, b)).r == pytest.approx(pearson_oracle(a, b), abs=1e-12)

    def test_too_few(self):
        with pytest.raises(errors.TooFewPairs):
            pearson(paired([1.0, 2.0], [1.0, 2.0]))

    def test_degenerate_variance(self):
        with pytest.raises(errors.DegenerateVariance):
            pearson(paired([5.0, 5.0, 5.0], [1.0, 2.0, 3.0]))

    def test_symmetry_and_affine_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(5, 60))
            a = rng.uniform(50, 300, n)
            b = rng.uniform(50, 300, n)
            r_ab = pearson(paired(a, b))
            r_ba = pearson(paired(b, a))
            assert r_ab.r == pytest.approx(r_ba.r, abs=1e-12)
            assert r_ab.p_value == pytest.approx(r_ba.p_value, abs=1e-12)
            scaled = pearson(paired(2.5 * a + 40.0, b))
            assert scaled.r == pytest.approx(r_ab.r, abs=1e-9)


class TestSpearman:
    def test_monotone_cubic(self):
        a = np.array([100.0, 120.0, 141.0, 160.0, 180.0])
        assert spearman(paired(a, a**3 / 1e4)).r == 1.0

    def test_tie_handling_matches_oracle(self):
        a = [1.0, 2.0, 2.0, 3.0]
        b = [1.0, 2.0, 3.0, 4.0]
        expected = pearson_oracle(ranks_oracle(a), ranks_oracle(b))
        assert spearman(paired(a, b)).r == pytest.approx(expected, abs=1e-12)

    def test_reverse_sorted(self):
        a = np.array([110.0, 130.0, 150.0, 170.0])
        assert spearman(paired(a, a[::-1])).r == pytest.approx(-1.0, abs=1e-12)

    def test_all_tied(self):
        with pytest.raises(errors.AllTied):
            spearman(paired([5.0, 5.0, 5.0, 5.0], [1.0, 2.0, 3.0, 4.0]))

    def test_random_ties_match_oracle(self):
        rng = np.random.default_rng(22)
        for _ in range(30):
            n = int(rng.integers(4, 80))
            a = rng.integers(1, 8, n).astype(float)
            b = rng.integers(1, 8, n).astype(float)
            if np.unique(a).size == 1 or np.unique(b).size == 1:
                continue
            expected = pearson_oracle(ranks_oracle(list(a)), ranks_oracle(list(b)))
            assert spearman(paired(a, b)).r == pytest.approx(expected, abs=1e-12)

    def test_average_ranks(self):
        assert average_ranks([10.0, 20.0, 20.0, 30.0]).tolist() == [1.0, 2.5, 2.5, 4.0]

    @given(st.lists(st.integers(1, 10000), min_size=4, max_size=40))
    @settings(max_examples=60)
    def test_monotone_map_invariance(self, values):
        a = np.array(values, dtype=float)
        b = np.sort(a) + np.arange(len(values))  # any positive second side
        if np.unique(a).size == 1:
            return
        base = spearman(paired(a, b)).r
        # squaring small integers is exact in floats, so the map is strictly
        # monotone and preserves the tie structure bit-for-bit
        mapped = spearman(paired(a * a, b)).r
        assert mapped == pytest.approx(base, abs=1e-12)


class TestNormality:
    def test_seeded_normal_accepted(self):
        rng = np.random.default_rng(77)
        values = rng.normal(0, 1, 500)
        result = normality_test(values)
        assert result.is_normal
        assert result.statistic == pytest.approx(jarque_bera_oracle(list(values)), rel=1e-12)

    def test_seeded_exponential_rejected(self):
        rng = np.random.default_rng(78)
        values = rng.exponential(1.0, 500)
        result = normality_test(values)
        assert not result.is_normal
        assert result.statistic == pytest.approx(jarque_bera_oracle(list(values)), rel=1e-12)

    def test_constant_raises_degenerate(self):
        with pytest.raises(errors.DegenerateVariance):
            normality_test([3.0] * 20)

    def test_too_few(self):
        with pytest.raises(errors.TooFewValues):
            normality_test([1.0, 2.0, 3.0])

    def test_chi2_survival(self):
        rng = np.random.default_rng(79)
        values = rng.normal(10, 2, 64)
        result = normality_test(values)
        assert result.p == pytest.approx(math.exp(-result.statistic / 2.0), rel=1e-12)


class TestAgainstScipy:
    """Cross-validation against an independent reference implementation;
    the brute-force oracles above remain the primary checks."""

    def test_pearson_r_and_p(self):
        from scipy import stats

        rng = np.random.default_rng(101)
        for _ in range(15):
            n = int(rng.integers(8, 300))
            a = rng.uniform(50, 400, n)
            b = 0.6 * a + rng.uniform(0, 150, n)
            mine = pearson(paired(a, b))
            ref_r, ref_p = stats.pearsonr(a, b)
            assert mine.r == pytest.approx(ref_r, abs=1e-12)
            assert mine.p_value == pytest.approx(ref_p, abs=1e-12)

    def test_spearman_with_ties_r_and_p(self):
        from scipy import stats

        rng = np.random.default_rng(102)
        for _ in range(15):
            n = int(rng.integers(8, 300))
            a = np.round(rng.uniform(50, 120, n), 0)
            b = np.round(0.5 * a + rng.uniform(0, 60, n), 0)
            if np.unique(a).size == 1 or np.unique(b).size == 1:
                continue
            mine = spearman(paired(a, b))
            ref = stats.spearmanr(a, b)
            assert mine.r == pytest.approx(ref.statistic, abs=1e-12)
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-12)

    def test_jarque_bera(self):
        from scipy import stats

        rng = np.random.default_rng(103)
        for _ in range(10):
            values = rng.normal(100, 15, int(rng.integers(30, 500)))
            mine = normality_test(values)
            ref = stats.jarque_bera(values)
            assert mine.statistic == pytest.approx(ref.statistic, rel=1e-10)
            assert mine.p == pytest.approx(ref.pvalue, rel=1e-9)


class TestAutoCorrelation:
    def test_both_normal_uses_pearson(self):
        rng = np.random.default_rng(30)
        a = rng.normal(100, 5, 200)
        b = a + rng.normal(0, 2, 200)
        assert auto_correlation(paired(a, b)).method is CorrMethod.PEARSON

    def test_one_exponential_uses_spearman(self):
        rng = np.random.default_rng(31)
        a = rng.normal(100, 5, 200)
        b = rng.exponential(50.0, 200) + 1.0
        assert auto_correlation(paired(a, b)).method is CorrMethod.SPEARMAN

    def test_below_floor(self):
        with pytest.raises(errors.TooFewValues):
            auto_correlation(paired([1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0, 5.0]))


class TestBlandAltman:
    def test_identical_pairs(self):
        a = [100.0, 120.0, 130.0]
        result = bland_altman(paired(a, a))
        assert (result.mean_diff, result.sd_diff) == (0.0, 0.0)
        assert (result.loa_low, result.loa_high) == (0.0, 0.0)
        assert result.pct_within == 100.0

    def test_constant_offset(self):
        a = np.array([100.0, 120.0, 130.0])
        result = bland_altman(paired(a, a + 5.0))
        assert result.mean_diff == pytest.approx(-5.0, abs=1e-12)
        assert result.sd_diff == 0.0

    def test_coverage_of_normal_differences(self):
        rng = np.random.default_rng(40)
        base = rng.uniform(300, 500, 1000)
        diffs = rng.normal(2.0, 10.0, 1000)
        result = bland_altman(paired(base + diffs, base))
        assert 93.5 <= result.pct_within <= 96.5

    def test_matches_direct_oracle(self):
        rng = np.random.default_rng(41)
        a = rng.uniform(100, 200, 73)
        b = rng.uniform(100, 200, 73)
        result = bland_altman(paired(a, b))
        diffs = [x - y for x, y in zip(a, b)]
        n = len(diffs)
        mean = sum(diffs) / n
        sd = math.sqrt(sum((d - mean) ** 2 for d in diffs) / (n - 1))
        assert result.mean_diff == pytest.approx(mean, rel=1e-12)
        assert result.sd_diff == pytest.approx(sd, rel=1e-12)
        assert result.loa_low == pytest.approx(mean - 1.96 * sd, rel=1e-12)
        within = sum(1 for d in diffs if mean - 1.96 * sd <= d <= mean + 1.96 * sd)
        assert result.pct_within == pytest.approx(100.0 * within / n, rel=1e-12)

    def test_antisymmetry(self):
        rng = np.random.default_rng(42)
        a = rng.uniform(100, 200, 50)
        b = rng.uniform(100, 200, 50)
        fwd = bland_altman(paired(a, b))
        rev = bland_altman(paired(b, a))
        assert rev.mean_diff == pytest.approx(-fwd.mean_diff, abs=1e-12)
        assert rev.loa_low == pytest.approx(-fwd.loa_high, abs=1e-12)
        assert rev.loa_high == pytest.approx(-fwd.loa_low, abs=1e-12)
        assert rev.sd_diff == pytest.approx(fwd.sd_diff, abs=1e-12)
        assert rev.pct_within == fwd.pct_within

    def test_shift_invariance_of_coverage(self):
        rng = np.random.default_rng(43)
        a = rng.uniform(100, 200, 64)
        b = rng.uniform(100, 200, 64)
        base = bland_altman(paired(a, b))
        shifted = bland_altman(paired(a + 55.0, b + 55.0))
        assert shifted.pct_within == base.pct_within

    def test_too_few(self):
        with pytest.raises(errors.TooFewPairs):
            bland_altman(paired([1.0], [2.0]))


class TestSummarize:
    def test_uniform_grid_iqr(self):
        result = summarize(np.arange(1.0, 101.0))
        assert result.kind is SummaryKind.MEDIAN_IQR
        assert result.center == 50.5
        assert result.spread_low == pytest.approx(25.75)
        assert result.spread_high == pytest.approx(75.25)

    def test_normal_sample_mean_sd(self):
        rng = np.random.default_rng(50)
        result = summarize(rng.normal(100, 10, 300))
        assert result.kind is SummaryKind.MEAN_SD

    def test_near_constant_falls_to_median(self):
        rng = np.random.default_rng(51)
        values = 100.0 + rng.normal(0, 1e-9, 50)
        result = summarize(values)  # must not crash
        assert result.kind in (SummaryKind.MEAN_SD, SummaryKind.MEDIAN_IQR)

    def test_too_few(self):
        with pytest.raises(errors.TooFewValues):
            summarize([1.0, 2.0, 3.0])


class TestStars:
    @pytest.mark.parametrize(
        "p,expected",
        [(0.2, "ns"), (0.0501, "ns"), (0.05, "*"), (0.02, "*"), (0.01, "**"),
         (0.002, "**"), (0.001, "***"), (0.0002, "***"), (0.0001, "****"), (1e-9, "****")],
    )
    def test_thresholds(self, p, expected):
        assert significance_stars(p) == expected


class TestStratified:
    def test_insufficient_group_reported_ns(self):
        groups = {
            "small": paired([100.0, 110.0], [100.0, 111.0]),
            "big": paired(np.linspace(100, 200, 30), np.linspace(100, 200, 30)),
        }
        rows = stratified_correlation(groups)
        assert [row.group for row in rows] == ["big", "small"]
        small = rows[1]
        assert small.result is None and small.stars == "ns" and small.reason == "TooFewValues"

    def test_identity_group(self):
        a = np.linspace(100, 200, 30)
        rows = stratified_correlation({"g": paired(a, a)})
        assert rows[0].result.r == pytest.approx(1.0)

    def test_planted_correlations_recovered(self):
        rng = np.random.default_rng(0)  # seed verified against the construction
        groups = {}
        planted = {"strong": 0.9, "medium": 0.5, "none": 0.0}
        for name, rho in planted.items():
            a = rng.normal(0, 1, 200)
            noise = rng.normal(0, 1, 200)
            b = rho * a + math.sqrt(1 - rho**2) * noise
            groups[name] = paired(a * 10 + 200, b * 10 + 200)
        rows = {row.group: row for row in stratified_correlation(groups)}
        for name, rho in planted.items():
            assert abs(rows[name].result.r - rho) <= 0.1
