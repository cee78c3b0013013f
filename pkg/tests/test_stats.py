import numpy as np
import pytest
from scipy import stats as sps

from optw.stats import (
    DegenerateBaseline,
    EmptySample,
    TooFewPairs,
    bootstrap_ci,
    gap,
    wilcoxon_one_sided,
)


class TestGap:
    @pytest.mark.parametrize("base, model, expected", [(182, 198, -8.79), (840, 870, -3.57), (882, 934, -5.90)])
    def test_table_rows(self, base, model, expected):
        assert gap(base, model) == pytest.approx(expected, abs=0.005)

    def test_sign(self):
        assert gap(100, 90) == pytest.approx(10.0)
        assert gap(100, 100) == 0.0

    @pytest.mark.parametrize("base", [0, -3, float("nan")])
    def test_degenerate(self, base):
        with pytest.raises(DegenerateBaseline):
            gap(base, 1)


class TestBootstrap:
    def test_constant_collapses(self):
        lo, hi = bootstrap_ci([2.5] * 30)
        assert lo == hi == 2.5

    def test_seeded(self):
        x = np.random.default_rng(0).normal(size=40)
        assert bootstrap_ci(x, seed=4) == bootstrap_ci(x, seed=4)
        assert bootstrap_ci(x, seed=4) != bootstrap_ci(x, seed=5)

    def test_contains_mean_and_shrinks_with_level(self):
        x = np.random.default_rng(1).normal(3, 1, size=60)
        lo95, hi95 = bootstrap_ci(x, level=0.95)
        lo90, hi90 = bootstrap_ci(x, level=0.90)
        assert lo95 <= lo90 < x.mean() < hi90 <= hi95

    def test_matches_scipy_percentile(self):
        x = np.random.default_rng(2).exponential(size=50)
        ours = bootstrap_ci(x, resamples=20_000, seed=0)
        ref = sps.bootstrap((x,), np.mean, n_resamples=20_000, method="percentile",
                            random_state=np.random.default_rng(9)).confidence_interval
        assert ours[0] == pytest.approx(ref.low, abs=0.03)
        assert ours[1] == pytest.approx(ref.high, abs=0.03)

    def test_empty(self):
        with pytest.raises(EmptySample):
            bootstrap_ci([])

    def test_level_range(self):
        with pytest.raises(ValueError):
            bootstrap_ci([1.0, 2.0], level=1.0)


class TestWilcoxon:
    def test_six_positive(self):
        assert wilcoxon_one_sided(np.arange(1, 7) + 10.0, np.full(6, 10.0)) == pytest.approx(1 / 64, abs=1e-15)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=15), rng.normal(size=15)
        assert wilcoxon_one_sided(a, b) == wilcoxon_one_sided(a, b)

    @pytest.mark.parametrize("n", [5, 8, 13, 20])
    def test_exact_matches_scipy(self, n):
        rng = np.random.default_rng(n)
        a, b = rng.normal(0.3, 1, size=n), rng.normal(size=n)
        ref = sps.wilcoxon(a, b, alternative="greater", method="exact").pvalue
        assert wilcoxon_one_sided(a, b) == pytest.approx(ref, rel=1e-12)

    def test_exact_with_ties(self):
        d = np.array([1, 1, 2, 2, 2, -1, 3, 4, -2, 5], dtype=float)
        # brute force over all 2^n sign assignments with average ranks
        from itertools import product
        ranks = sps.rankdata(np.abs(d))
        w = ranks[d > 0].sum()
        hits = sum(ranks[np.array(s, dtype=bool)].sum() >= w for s in product([0, 1], repeat=d.size))
        assert wilcoxon_one_sided(d, np.zeros_like(d)) == pytest.approx(hits / 2 ** d.size, rel=1e-12)

    def test_normal_branch_matches_scipy(self):
        rng = np.random.default_rng(11)
        a, b = np.round(rng.normal(0.2, 1, size=64), 1), np.round(rng.normal(size=64), 1)
        ref = sps.wilcoxon(a, b, alternative="greater", method="approx", correction=True).pvalue
        assert wilcoxon_one_sided(a, b) == pytest.approx(ref, rel=1e-6)

    def test_zero_differences_dropped(self):
        a = np.array([1, 2, 3, 4, 5, 6, 7.0])
        b = np.array([1, 2, 0, 0, 0, 0, 0.0])
        assert wilcoxon_one_sided(a, b) == pytest.approx(1 / 32)

    def test_too_few(self):
        with pytest.raises(TooFewPairs):
            wilcoxon_one_sided([1, 2, 3], [0, 0, 0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            wilcoxon_one_sided([1, 2], [1])
