import math

import numpy as np
import pytest
from scipy import stats

from monobayes.mixture import eval_density
from monobayes.priors import BaseMeasure, PriorSpec, sample_prior, validate_prior_conditions


def dp(A=1.0, t=2.0, L=1.0):
    return PriorSpec("dp", A, BaseMeasure(t, L))


class TestBaseMeasure:
    def test_bounded_cdf_and_pdf(self):
        b = BaseMeasure(2.0, 1.0)
        assert b.cdf(0.5) == pytest.approx(0.125)
        assert b.pdf(0.5) == pytest.approx(0.75)
        assert b.pdf(1.5) == 0.0

    def test_kernel_marginal_matches_quadrature(self):
        from scipy import integrate

        for b in (BaseMeasure(2.0, 1.0), BaseMeasure(3.0, None, 2.0)):
            for x in (0.1, 0.5, 0.9):
                upper = b.support_bound if b.bounded else np.inf
                want = integrate.quad(lambda th: b.pdf(th) / th, x, upper)[0]
                assert b.kernel_marginal(x) == pytest.approx(want, rel=1e-8)

    def test_sample_ks(self):
        th = BaseMeasure(2.0, 1.0).sample(np.random.default_rng(0), 5000)
        assert stats.kstest(th, lambda v: np.clip(v, 0, 1) ** 3).pvalue > 0.01

    def test_invalid(self):
        with pytest.raises(ValueError):
            BaseMeasure(-1.5, 1.0)
        with pytest.raises(ValueError):
            BaseMeasure(2.0, 0.0)


class TestValidator:
    def test_default_family_passes(self):
        assert validate_prior_conditions(dp()).passed

    def test_small_exponent_fails_base_condition(self):
        rep = validate_prior_conditions(dp(t=0.5))
        assert not rep["base_measure"].passed
        assert not rep.passed

    def test_k_law_sandwich(self):
        spec = PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0), k_max=50)
        c = validate_prior_conditions(spec)["k_law"].constants
        assert c["C1"] <= 1.0 <= c["C2"]

    def test_weight_law_constant_positive(self):
        spec = PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0), k_max=50)
        assert validate_prior_conditions(spec)["weight_law"].constants["c"] > 0

    def test_k_pmf_normalised(self):
        q = PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0), k_max=200).k_pmf()
        assert q.sum() == pytest.approx(1.0)
        assert q[1] / q[0] == pytest.approx(math.exp(-2 * math.log(2)))


class TestSamplePrior:
    def test_degenerate_k(self):
        spec = PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0), k_max=1)
        P = sample_prior(spec, seed=1)
        assert P.atoms.size == 1 and P.weights[0] == 1.0
        x1 = P.atoms[0]
        assert eval_density(P, x1 / 2) == pytest.approx(1 / x1)

    def test_single_atom_distribution(self):
        spec = PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0), k_max=1)
        atoms = [sample_prior(spec, seed=s).atoms[0] for s in range(2000)]
        assert stats.kstest(atoms, lambda v: np.clip(v, 0, 1) ** 3).pvalue > 0.01

    def test_invariants_and_mass(self):
        for s in range(1000):
            spec = dp() if s % 2 else PriorSpec("finite", 1.0, BaseMeasure(2.0, 1.0))
            P = sample_prior(spec, truncation=200, seed=s)
            assert abs(P.weights.sum() - 1) <= 1e-12
            assert np.all(P.weights > 0) and np.all(np.diff(P.atoms) > 0)
            assert 0 < P.atoms[0] and P.atoms[-1] <= 1.0
            assert P.to_step().mass() == pytest.approx(1.0, abs=1e-10)

    def test_stick_breaking_atom_count(self):
        # independent reference: plain loop over sticks with its own generator
        def reference(rng):
            rest, count = 1.0, 0
            for k in range(500):
                v = 1.0 if k == 499 else rng.beta(1.0, 1.0)
                count += v * rest > 1e-4
                rest *= 1 - v
            return count

        rng = np.random.default_rng(99)
        ref = np.array([reference(rng) for _ in range(2000)])
        ours = np.array([np.sum(sample_prior(dp(), 500, seed=s).weights > 1e-4) for s in range(2000)])
        se = math.sqrt(ref.var() / ref.size + ours.var() / ours.size)
        assert abs(ref.mean() - ours.mean()) <= 3 * se

    def test_truncation_insensitive(self):
        a = np.array([eval_density(sample_prior(dp(), 500, seed=s), 0.5) for s in range(1500)])
        b = np.array([eval_density(sample_prior(dp(), 1000, seed=10_000 + s), 0.5) for s in range(1500)])
        se = math.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) <= 4 * se
        # both match the closed-form prior mean (t+1)/(tL) (1 - (x/L)^t)
        assert abs(a.mean() - 1.125) <= 4 * a.std() / math.sqrt(a.size)
