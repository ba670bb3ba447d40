
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from statespace.data import ObservationSequence, PanelDataset
from statespace.decoding import (
    DECODED_COLUMNS, DecodedPath, decode_panel, expected_trajectory, path_log_prob, viterbi,
)
from statespace.discretization import MatrixCache, build_grid
from statespace.emissions import Covariates, NegBinSplineEmission, PoissonScaleEmission
from statespace.exceptions import InvalidArgumentError
from statespace.inference import ModelSpec, log_emission_matrix
from statespace.simulation import DEFAULT_OMEGA1, DEFAULT_OMEGA2, generate_dataset, ou_setting
from statespace.state_process import OUParams


def spec(m, theta=0.5, sigma=0.5, alpha=20.0):
    return ModelSpec(
        process=OUParams(theta=theta, mu=0.0, sigma=sigma),
        emission=PoissonScaleEmission(alpha=alpha),
        grid=build_grid(-2.0, 2.0, m),
    )


def negbin_model(m, phi=0.57):
    return ModelSpec(
        process=OUParams(theta=0.222, mu=0.0, sigma=1.489),
        emission=NegBinSplineEmission(phi=phi, omega1=DEFAULT_OMEGA1, omega2=DEFAULT_OMEGA2),
        grid=build_grid(-9.0, 9.0, m),
    )


@st.composite
def decoding_instances(draw):
    m = draw(st.integers(2, 10))
    longest = max(n for n in range(1, 18) if m ** n <= 100_000)
    n_obs = draw(st.integers(1, longest))
    if draw(st.booleans()):
        gaps = draw(st.lists(st.floats(0.05, 3.0), min_size=n_obs - 1, max_size=n_obs - 1))
        counts = draw(st.lists(st.integers(0, 80), min_size=n_obs, max_size=n_obs))
        times = np.concatenate(([0.0], np.cumsum(gaps)))
        return ObservationSequence(times=times, counts=counts), spec(m, theta=draw(st.floats(0.2, 2.0)))
    # возраст должен остаться внутри [7, 35]
    gaps = draw(st.lists(st.floats(0.05, 1.0), min_size=n_obs - 1, max_size=n_obs - 1))
    counts = draw(st.lists(st.integers(0, 30), min_size=n_obs, max_size=n_obs))
    times = np.concatenate(([0.0], np.cumsum(gaps)))
    start = draw(st.floats(12.0, 18.0))
    sequence = ObservationSequence(
        times=times, counts=counts, ages=start + times, genders=np.full(n_obs, draw(st.integers(0, 1))),
    )
    return sequence, negbin_model(m, phi=draw(st.floats(0.2, 10.0)))


def exhaustive_best(sequence, model, cache):
    """Максимум совместной лог-вероятности по всем m^n путям."""
    m, n_obs = model.grid.m, len(sequence)
    paths = np.array(np.unravel_index(np.arange(m ** n_obs), (m,) * n_obs))
    log_emissions = log_emission_matrix([sequence], model)
    with np.errstate(divide="ignore"):
        scores = np.log(model.initial_distribution().probabilities)[paths[0]] + log_emissions[0, paths[0]]
        for step, gap in enumerate(sequence.gaps, start=1):
            log_transition = np.log(cache.get(model.process, model.grid, gap).entries)
            scores = scores + log_transition[paths[step - 1], paths[step]] + log_emissions[step, paths[step]]
    return float(scores.max())


class ViterbiTests(SimpleTestCase):
    @settings(max_examples=100, deadline=None)
    @given(instance=decoding_instances())
    def test_matches_exhaustive_enumeration(self, instance):
        sequence, model = instance
        cache = MatrixCache()
        decoded = viterbi(sequence, model, cache)
        best = exhaustive_best(sequence, model, cache)
        self.assertAlmostEqual(decoded.log_prob, best, delta=1e-10 * max(1.0, abs(best)))
        self.assertAlmostEqual(path_log_prob(sequence, model, decoded.state_indices, cache), best,
                               delta=1e-10 * max(1.0, abs(best)))


    def test_constant_counts_with_tiny_gaps_stay_in_one_state(self):
        model = ModelSpec(
            process=OUParams(theta=0.5, mu=0.0, sigma=2.0),
            emission=PoissonScaleEmission(alpha=1.0),
            grid=build_grid(-3.0, 3.0, 6),
        )
        sequence = ObservationSequence(times=1e-6 * np.arange(5), counts=np.full(5, 12))
        decoded = viterbi(sequence, model)
        np.testing.assert_array_equal(decoded.state_indices, np.full(5, 6))
        np.testing.assert_allclose(decoded.state_values, np.full(5, 2.5))

    def test_beats_random_paths(self):
        model = spec(8)
        rng = np.random.default_rng(4)
        sequence = ObservationSequence(times=np.cumsum(rng.uniform(0.2, 2.0, 12)), counts=rng.poisson(20, 12))
        cache = MatrixCache()
        decoded = viterbi(sequence, model, cache)
        for _ in range(1000):
            path = rng.integers(1, 9, 12)
            self.assertGreaterEqual(decoded.log_prob, path_log_prob(sequence, model, path, cache))

    def test_benchmark_has_nothing_to_decode(self):
        benchmark = ModelSpec(process=None, emission=PoissonScaleEmission(alpha=20.0))
        with self.assertRaises(InvalidArgumentError):
            viterbi(ObservationSequence(times=[0.0], counts=[3]), benchmark)

    def test_decoded_path_validation(self):
        with self.assertRaises(InvalidArgumentError):
            DecodedPath(state_indices=[0, 1], state_values=[0.0, 0.1], log_prob=0.0)


class ExpectedTrajectoryTests(SimpleTestCase):
    def setUp(self):
        self.emission = NegBinSplineEmission(phi=0.57, omega1=DEFAULT_OMEGA1, omega2=DEFAULT_OMEGA2)
        self.covs = [Covariates(age=14.0, gender=0), Covariates(age=15.0, gender=1), Covariates(age=17.0, gender=1)]

    def test_zero_state_is_equilibrium(self):
        path = DecodedPath(state_indices=[3, 3, 3], state_values=[0.0, 0.0, 0.0], log_prob=-1.0)
        trajectory = expected_trajectory(path, self.emission, self.covs)
        np.testing.assert_array_equal(trajectory.expected, trajectory.equilibrium)

    def test_log_link_is_multiplicative(self):
        path = DecodedPath(state_indices=[3, 4, 3], state_values=[0.0, np.log(2.0), 0.0], log_prob=-1.0)
        trajectory = expected_trajectory(path, self.emission, self.covs)
        self.assertAlmostEqual(trajectory.expected[1] / trajectory.equilibrium[1], 2.0, places=12)

    def test_length_mismatch(self):
        path = DecodedPath(state_indices=[1, 2], state_values=[0.0, 0.1], log_prob=-1.0)
        with self.assertRaises(InvalidArgumentError):
            expected_trajectory(path, self.emission, self.covs)

    def test_poisson_scale_equilibrium_is_alpha(self):
        path = DecodedPath(state_indices=[1, 2], state_values=[0.0, 1.0], log_prob=-1.0)
        trajectory = expected_trajectory(path, PoissonScaleEmission(alpha=200.0))
        np.testing.assert_allclose(trajectory.equilibrium, [200.0, 200.0])
        self.assertAlmostEqual(trajectory.expected[1], 200.0 * np.e)


class DecodePanelTests(SimpleTestCase):
    def test_rows_and_columns(self):
        first = ObservationSequence(times=[0.0, 1.0, 2.0], counts=[10, 25, 40])
        second = ObservationSequence(times=[0.5, 1.5], counts=[5, 8])
        panel = PanelDataset((("2", second), ("1", first)))
        paths, frame = decode_panel(panel, spec(10))
        self.assertEqual(list(frame.columns), DECODED_COLUMNS)
        self.assertEqual(len(frame), 5)
        self.assertEqual(frame["id"].tolist(), ["1", "1", "1", "2", "2"])
        self.assertEqual(set(paths), {"1", "2"})
        self.assertTrue(frame["state_index"].between(1, 10).all())

    def test_decoding_error_shrinks_with_finer_grid(self):
        setting = ou_setting(2, T=400, seed=5)
        data = generate_dataset(setting)
        errors = []
        for m in (20, 100):
            model = ModelSpec(setting.process, setting.emission, build_grid(-2.5, 2.5, m))
            decoded = viterbi(data.sequence, model)
            errors.append(np.abs(decoded.state_values - data.states.values).mean())
        self.assertLess(errors[1], errors[0])
