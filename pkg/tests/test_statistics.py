"""Tests for the rank statistics."""

from itertools import combinations

import numpy as np
import pytest
from scipy.stats import rankdata

from app.services.statistics import UMethod, bonferroni, mann_whitney_u


def _enumerated_p(a, b) -> float:
    """Two-sided exact p by listing every split of the pooled ranks."""
    ranks = rankdata(np.concatenate([a, b]))
    n_a, n = len(a), len(a) + len(b)
    mean_u = n_a * (n - n_a) / 2.0
    u_obs = ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0
    hits = total = 0
    for subset in combinations(range(n), n_a):
        u = ranks[list(subset)].sum() - n_a * (n_a + 1) / 2.0
        total += 1
        hits += abs(u - mean_u) >= abs(u_obs - mean_u) - 1e-9
    return hits / total


class TestMannWhitney:
    """Tests for the Mann-Whitney U test."""

    def test_separated_samples(self):
        result = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert result.u == 0.0
        assert result.p_value == pytest.approx(0.1)
        assert result.method == UMethod.EXACT

    def test_u_is_symmetric(self):
        forward = mann_whitney_u([1, 2, 3], [4, 5, 6])
        backward = mann_whitney_u([4, 5, 6], [1, 2, 3])
        assert backward.u == 9.0
        assert backward.p_value == pytest.approx(forward.p_value)

    def test_identical_samples(self):
        result = mann_whitney_u([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0])
        assert abs(result.p_value - 1.0) < 1e-9

    def test_all_values_equal(self):
        result = mann_whitney_u([5.0] * 12, [5.0] * 12)
        assert result.p_value == 1.0
        assert result.method == UMethod.ASYMPTOTIC

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1.0])

    def test_auto_switches_above_sixteen(self):
        assert mann_whitney_u(range(8), range(8, 16)).method == UMethod.EXACT
        assert mann_whitney_u(range(9), range(9, 18)).method == UMethod.ASYMPTOTIC

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_exact_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 6, 5).astype(float)
        b = rng.integers(2, 8, 6).astype(float)
        expected = _enumerated_p(a, b)
        assert mann_whitney_u(a, b, UMethod.EXACT).p_value == pytest.approx(expected)

    @pytest.mark.parametrize("seed", [10, 11, 12, 13])
    def test_branches_agree_on_ten_by_ten(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(0.0, 1.0, 10)
        b = rng.normal(0.5, 1.0, 10)
        exact = mann_whitney_u(a, b, UMethod.EXACT).p_value
        approx = mann_whitney_u(a, b, UMethod.ASYMPTOTIC).p_value
        assert abs(exact - approx) < 0.02


class TestBonferroni:
    """Tests for the multiple-comparison correction."""

    def test_scales_by_m(self):
        assert bonferroni([0.01], m=3) == [pytest.approx(0.03)]

    def test_capped_at_one(self):
        assert bonferroni([0.5], m=3) == [1.0]

    def test_single_comparison_is_identity(self):
        assert bonferroni([0.2, 0.04], m=2)[1] == pytest.approx(0.08)
        assert bonferroni([0.2], m=1) == [0.2]

    def test_defaults_to_number_of_values(self):
        assert bonferroni([0.1, 0.2]) == [pytest.approx(0.2), pytest.approx(0.4)]

    def test_rejects_small_m(self):
        with pytest.raises(ValueError):
            bonferroni([0.1, 0.2, 0.3], m=2)
