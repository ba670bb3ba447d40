import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from statespace.discretization import build_grid
from statespace.emissions import (
    Covariates, NegBinSplineEmission, PoissonScaleEmission, emission_vector, marginal_log_density,
    negbin_logpmf, negbin_marginal_logpmf, poisson_logpmf,
)
from statespace.exceptions import InvalidArgumentError, NumericDomainError
from statespace.splines import DEFAULT_BASIS, SplineCoefficients, curve_eval

OMEGA1 = SplineCoefficients((-0.6, 0.2, -0.2, -0.8, -1.2, -1.3, -1.0, -0.8))
OMEGA2 = SplineCoefficients((-0.5, -0.7, -0.6, -0.5, -0.5, -0.4, -0.4, -0.4))


def negbin(phi=0.57):
    return NegBinSplineEmission(phi=phi, omega1=OMEGA1, omega2=OMEGA2)


class PoissonScaleTests(SimpleTestCase):
    @settings(max_examples=60, deadline=None)
    @given(y=st.integers(0, 500), x=st.floats(-3, 3), alpha=st.floats(0.1, 500))
    def test_matches_scipy(self, y, x, alpha):
        expected = stats.poisson.logpmf(y, alpha * np.exp(x))
        value = poisson_logpmf(PoissonScaleEmission(alpha), y, x)
        self.assertAlmostEqual(value, expected, delta=1e-10 * max(1.0, abs(expected)))

    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(-2, 2), alpha=st.floats(0.5, 300))
    def test_mass_sums_to_one(self, x, alpha):
        total = np.exp(poisson_logpmf(PoissonScaleEmission(alpha=alpha), np.arange(20_000), x)).sum()
        self.assertGreaterEqual(total, 1.0 - 1e-9)
        self.assertLessEqual(total, 1.0 + 1e-9)

    @settings(max_examples=40, deadline=None)
    @given(y=st.integers(1, 500), alpha=st.floats(1.0, 300.0))
    def test_log_density_peaks_at_log_ratio(self, y, alpha):
        peak = np.log(y / alpha)
        xs = peak + np.linspace(-0.5, 0.5, 10_001)
        values = poisson_logpmf(PoissonScaleEmission(alpha=alpha), np.full(xs.size, y), xs)
        self.assertAlmostEqual(xs[int(np.argmax(values))], peak, delta=1e-4)

    def test_rejects_invalid_counts_and_alpha(self):
        with self.assertRaises(InvalidArgumentError):
            poisson_logpmf(PoissonScaleEmission(1.0), -1, 0.0)
        with self.assertRaises(InvalidArgumentError):
            poisson_logpmf(PoissonScaleEmission(1.0), 1.5, 0.0)
        with self.assertRaises(InvalidArgumentError):
            PoissonScaleEmission(0.0)

    def test_overflowing_mean(self):
        with self.assertRaises(NumericDomainError):
            poisson_logpmf(PoissonScaleEmission(1.0), 3, 800.0)

    def test_emission_vector_over_grid(self):
        grid = build_grid(-2.5, 2.5, 20)
        vector = emission_vector(PoissonScaleEmission(200.0), 180, None, grid)
        self.assertEqual(vector.shape, (20,))
        expected = stats.poisson.logpmf(180, 200.0 * np.exp(grid.midpoints))
        np.testing.assert_allclose(vector, expected, rtol=1e-10)

    def test_sample_mean_at_zero_state(self):
        draws = PoissonScaleEmission(200.0).sample(np.zeros(20000), np.random.default_rng(0))
        self.assertAlmostEqual(draws.mean(), 200.0, delta=3 * np.sqrt(200.0 / 20000))


class NegBinSplineTests(SimpleTestCase):
    @settings(max_examples=60, deadline=None)
    @given(
        y=st.integers(0, 300), x=st.floats(-4, 4), phi=st.floats(0.05, 50),
        age=st.floats(12, 28), gender=st.integers(0, 1),
    )
    def test_matches_scipy(self, y, x, phi, age, gender):
        emission = negbin(phi)
        effect = curve_eval(DEFAULT_BASIS, OMEGA1, age) + gender * curve_eval(DEFAULT_BASIS, OMEGA2, age)
        nu = np.exp(x + effect)
        expected = stats.nbinom.logpmf(y, phi, phi / (phi + nu))
        value = negbin_logpmf(emission, y, x, Covariates(age=age, gender=gender))
        self.assertAlmostEqual(value, expected, delta=1e-8 * max(1.0, abs(expected)))

    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(-2, 2), phi=st.floats(0.3, 20.0), age=st.floats(12.0, 28.0), gender=st.integers(0, 1))
    def test_mass_sums_to_one(self, x, phi, age, gender):
        counts = np.arange(20_000)
        total = np.exp(negbin_logpmf(negbin(phi), counts, x, Covariates(age, gender))).sum()
        self.assertGreaterEqual(total, 1.0 - 1e-9)
        self.assertLessEqual(total, 1.0 + 1e-9)

    def test_large_phi_approaches_poisson(self):
        emission = negbin(1e8)
        cov = Covariates(age=20.0, gender=1)
        nu = np.exp(0.5 + emission.covariate_effect([20.0], [1])[0])
        for y in (0, 1, 5, 20):
            self.assertAlmostEqual(negbin_logpmf(emission, y, 0.5, cov), stats.poisson.logpmf(y, nu), delta=1e-5)

    def test_female_curve_adds_to_male(self):
        emission = negbin()
        male = emission.log_mean(0.0, [18.0], [0])[0]
        female = emission.log_mean(0.0, [18.0], [1])[0]
        self.assertAlmostEqual(female - male, curve_eval(DEFAULT_BASIS, OMEGA2, 18.0), places=12)

    def test_marginal_is_zero_state(self):
        emission = negbin()
        cov = Covariates(age=15.0, gender=0)
        self.assertEqual(negbin_marginal_logpmf(emission, 4, cov), negbin_logpmf(emission, 4, 0.0, cov))
        values = marginal_log_density(emission, np.array([0, 4]), np.array([15.0, 15.0]), np.array([0, 0]))
        self.assertAlmostEqual(values[1], negbin_logpmf(emission, 4, 0.0, cov), places=12)

    def test_requires_covariates(self):
        with self.assertRaises(InvalidArgumentError):
            negbin_logpmf(negbin(), 1, 0.0, None)
        with self.assertRaises(InvalidArgumentError):
            emission_vector(negbin(), 1, None, build_grid(-1.0, 1.0, 4))

    def test_coefficient_count_and_gender_validation(self):
        with self.assertRaises(InvalidArgumentError):
            NegBinSplineEmission(phi=1.0, omega1=np.zeros(7), omega2=np.zeros(8))
        with self.assertRaises(InvalidArgumentError):
            Covariates(age=20.0, gender=2)

    def test_sample_is_overdispersed(self):
        emission = negbin(0.5)
        ages = np.full(40000, 20.0)
        genders = np.zeros(40000, dtype=int)
        draws = emission.sample(np.zeros(40000), np.random.default_rng(2), ages, genders)
        nu = emission.expected(0.0, [20.0], [0])[0]
        self.assertAlmostEqual(draws.mean(), nu, delta=0.05 * nu)
        self.assertAlmostEqual(draws.var(), nu + nu ** 2 / 0.5, delta=0.15 * (nu + nu ** 2 / 0.5))
