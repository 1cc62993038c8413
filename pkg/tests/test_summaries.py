import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monobayes.densities import Uniform
from monobayes.mixture import AtomicMixture
from monobayes.summaries import (
    LossSample,
    credible_band,
    loss_sample,
    posterior_mean_pointwise,
    posterior_median_pointwise,
    posterior_radius,
)


def uniforms(*thetas):
    # f_P(x) = 1/theta for x <= theta
    return [AtomicMixture([th], [1.0]) for th in thetas]


def losses(values):
    return LossSample(np.asarray(values, float), "l1", "test")


class TestMedian:
    def test_odd(self):
        draws = uniforms(1.0, 0.5, 1 / 3)  # values 1, 2, 3 at x = 0.1
        assert posterior_median_pointwise(draws, 0.1) == pytest.approx(2.0)

    def test_even_uses_strict_inequality(self):
        draws = uniforms(1.0, 0.5, 1 / 3, 0.25)
        assert posterior_median_pointwise(draws, 0.1) == pytest.approx(3.0)

    def test_constant(self):
        assert posterior_median_pointwise(uniforms(0.5, 0.5, 0.5), 0.2) == 2.0

    def test_vector_x(self):
        med = posterior_median_pointwise(uniforms(1.0, 0.5, 1 / 3), [0.1, 0.4, 0.9])
        np.testing.assert_allclose(med, [2.0, 1.0, 0.0])

    def test_mean(self):
        assert posterior_mean_pointwise(uniforms(1.0, 0.5), 0.1) == pytest.approx(1.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            posterior_median_pointwise([], 0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=30))
    def test_definition(self, thetas):
        vals = 1 / np.array(thetas)
        med = posterior_median_pointwise(uniforms(*thetas), 0.01)
        # smallest value with fraction <= it strictly above 1/2
        ok = [v for v in vals if np.mean(vals <= v) > 0.5]
        assert med == pytest.approx(min(ok))


class TestRadius:
    def test_constant_distance(self):
        for mass in (0.1, 0.5, 1.0):
            assert posterior_radius(None, None, mass=mass, losses=losses([0.1] * 7)) == 0.1

    def test_quantile(self):
        d = np.arange(1, 11) / 10
        assert posterior_radius(None, None, mass=0.9, losses=losses(d)) == pytest.approx(0.9)

    def test_full_mass_is_max(self):
        d = np.random.default_rng(0).uniform(size=37)
        assert posterior_radius(None, None, mass=1.0, losses=losses(d)) == d.max()

    def test_all_infinite(self):
        with pytest.raises(ValueError):
            posterior_radius(None, None, losses=losses([np.inf, np.inf]))

    def test_bad_mass(self):
        with pytest.raises(ValueError):
            posterior_radius(None, None, mass=0.0, losses=losses([0.1]))

    def test_support_violation_counts_as_far(self):
        d = posterior_radius(uniforms(1.0, 2.0), Uniform(1.0), "l1", mass=0.5)
        assert d == 0.0

    def test_loss_sample_against_analytic(self):
        ls = loss_sample(uniforms(1.0, 0.5), Uniform(1.0), "l1")
        np.testing.assert_allclose(ls.values, [0.0, 1.0])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 5), min_size=1, max_size=50), st.floats(0.01, 1), st.floats(0.01, 1))
    def test_monotone_in_mass(self, d, m1, m2):
        lo, hi = sorted((m1, m2))
        ls = losses(d)
        assert posterior_radius(None, None, mass=lo, losses=ls) <= posterior_radius(None, None, mass=hi, losses=ls)


class TestBand:
    def test_constant_draws(self):
        lo, hi = credible_band(uniforms(0.5, 0.5, 0.5), [0.1, 0.3, 0.7], 0.9)
        np.testing.assert_array_equal(lo, hi)

    def test_two_point(self):
        lo, hi = credible_band(uniforms(1.0, 2.0), [0.5], 0.5)
        assert 0.5 <= lo[0] <= hi[0] <= 1.0

    def test_level_zero_ordering(self):
        draws = uniforms(1.0, 0.5, 0.8, 0.9)
        lo, hi = credible_band(draws, np.linspace(0.05, 1, 10), 0.0)
        assert np.all(lo <= hi)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=20), st.floats(0.0, 0.99))
    def test_nested_in_level(self, thetas, level):
        draws = uniforms(*thetas)
        grid = [0.02, 0.3, 0.6]
        lo1, hi1 = credible_band(draws, grid, level)
        lo2, hi2 = credible_band(draws, grid, min(0.999, level + 0.3))
        assert np.all(lo2 <= lo1) and np.all(hi1 <= hi2)
