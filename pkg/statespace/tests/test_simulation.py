import numpy as np
from django.test import SimpleTestCase

from statespace.emissions import PoissonScaleEmission
from statespace.exceptions import InvalidArgumentError
from statespace.inference import FitOptions
from statespace.simulation import (
    SETTINGS, SWEEP_COLUMNS, GapLaw, PanelConfig, SimSetting, generate_dataset, generate_panel, illustrate_paths,
    ou_setting, run_consistency_study, run_m_sweep,
)
from statespace.state_process import OUParams


class GapLawTests(SimpleTestCase):
    def test_mean_gap_is_thirty_hours_in_days(self):
        gaps = GapLaw().sample(100000, np.random.default_rng(0))
        self.assertTrue(np.all(gaps > 0))
        self.assertAlmostEqual(gaps.mean(), 1.25, delta=0.0125)

    def test_zero_draws_are_redrawn(self):
        gaps = GapLaw(mean_hours=0.5).sample(5000, np.random.default_rng(1))
        self.assertTrue(np.all(gaps >= 1 / 24))


class DatasetTests(SimpleTestCase):
    def test_shape_and_ordering(self):
        data = generate_dataset(ou_setting(2, T=500, seed=7))
        self.assertEqual(len(data.sequence), 500)
        self.assertEqual(data.sequence.times[0], 0.0)
        self.assertTrue(np.all(np.diff(data.sequence.times) > 0))
        np.testing.assert_array_equal(data.states.times, data.sequence.times)

    def test_same_seed_same_data(self):
        first = generate_dataset(ou_setting(1, T=200, seed=3))
        second = generate_dataset(ou_setting(1, T=200, seed=3))
        np.testing.assert_array_equal(first.sequence.counts, second.sequence.counts)
        np.testing.assert_array_equal(first.sequence.times, second.sequence.times)

    def test_frozen_state_gives_alpha_mean(self):
        setting = SimSetting(OUParams(theta=1.0, mu=0.0, sigma=1e-9), PoissonScaleEmission(200.0), T=5000, seed=2)
        counts = generate_dataset(setting).sequence.counts
        self.assertAlmostEqual(counts.mean(), 200.0, delta=3 * np.sqrt(200.0 / 5000))

    def test_faster_settings_are_more_volatile(self):
        volatility = []
        for number in (1, 2, 3):
            counts = generate_dataset(ou_setting(number, T=500, seed=9)).sequence.counts
            volatility.append(np.diff(np.log(counts + 1.0)).var())
        self.assertLess(volatility[0], volatility[1])
        self.assertLess(volatility[1], volatility[2])

    def test_invalid_settings(self):
        with self.assertRaises(InvalidArgumentError):
            ou_setting(4)
        with self.assertRaises(InvalidArgumentError):
            SimSetting(SETTINGS[1], PoissonScaleEmission(200.0), T=1)


class SweepTests(SimpleTestCase):
    def test_rows_per_m_on_one_dataset(self):
        result = run_m_sweep(ou_setting(3, T=150, seed=1), m_values=(10, 20),
                             options=FitOptions(compute_ci=False, maxiter=500))
        frame = result.to_frame()
        self.assertEqual(list(frame.columns), SWEEP_COLUMNS)
        self.assertEqual(frame["m"].tolist(), [10, 20])
        self.assertTrue(np.isfinite(frame["neg_llk"]).all())
        self.assertIn("neg_llk", result.render())


class ConsistencyTests(SimpleTestCase):
    def test_true_parameter_evaluation(self):
        result = run_consistency_study(ou_setting(2, seed=4), T_values=(100, 150), n_replicates=3, m=20,
                                       evaluate_only=True)
        frame = result.frame
        self.assertEqual(frame["replicate"].tolist(), [0, 1, 2, 3, 4, 5])
        self.assertEqual(frame["T"].tolist(), [100] * 3 + [150] * 3)
        self.assertTrue((frame["status"] == "converged").all())
        self.assertTrue(np.isfinite(frame["neg_llk"]).all())
        self.assertEqual(frame["neg_llk"].nunique(), 6)
        summary = result.summary()
        self.assertEqual(len(summary), 6)
        np.testing.assert_allclose(summary["median"], 0.0)

    def test_replicates_are_reproducible(self):
        first = run_consistency_study(ou_setting(2, seed=8), T_values=(80,), n_replicates=2, m=10,
                                      evaluate_only=True)
        second = run_consistency_study(ou_setting(2, seed=8), T_values=(80,), n_replicates=2, m=10,
                                       evaluate_only=True)
        np.testing.assert_array_equal(first.frame["neg_llk"], second.frame["neg_llk"])


class PanelTests(SimpleTestCase):
    def test_full_participation_follows_wave_schedule(self):
        simulated = generate_panel(PanelConfig(n_individuals=50, seed=2))
        self.assertEqual(len(simulated.panel), 50)
        for key, sequence in simulated.panel:
            self.assertEqual(len(sequence), 12)
            self.assertTrue(set(np.round(sequence.gaps, 9)) <= {1.0, 2.0})
            self.assertTrue(np.all((sequence.ages >= 12.0) & (sequence.ages <= 28.0)))
            self.assertEqual(len(set(sequence.genders)), 1)
            np.testing.assert_array_equal(simulated.states[key].times, sequence.times)

    def test_dropout_gaps_stay_within_four_years(self):
        simulated = generate_panel(PanelConfig(n_individuals=200, dropout=0.4, seed=5))
        gaps = np.concatenate([sequence.gaps for _, sequence in simulated.panel])
        self.assertTrue(set(np.round(gaps, 9)) <= {1.0, 2.0, 3.0, 4.0})
        self.assertIn(3.0, set(np.round(gaps, 9)))

    def test_counts_are_overdispersed(self):
        panel = generate_panel(PanelConfig(n_individuals=300, seed=6)).panel
        counts = np.concatenate([sequence.counts for _, sequence in panel])
        self.assertGreater(counts.var() / counts.mean(), 3.0)
        self.assertGreater((counts == 0).mean(), 0.3)

    def test_same_seed_same_panel(self):
        first = generate_panel(PanelConfig(n_individuals=20, dropout=0.2, seed=1)).panel.to_frame()
        second = generate_panel(PanelConfig(n_individuals=20, dropout=0.2, seed=1)).panel.to_frame()
        self.assertTrue(first.equals(second))

    def test_ages_outside_spline_domain(self):
        with self.assertRaises(InvalidArgumentError):
            PanelConfig(start_age=(25.0, 26.0))
        with self.assertRaises(InvalidArgumentError):
            PanelConfig(dropout=1.0)


class IllustrationTests(SimpleTestCase):
    def test_paths_start_at_zero(self):
        frame = illustrate_paths({"slow": SETTINGS[1], "fast": SETTINGS[3]}, step=0.01, horizon=2.0, seed=0)
        self.assertEqual(list(frame.columns), ["label", "time", "value"])
        self.assertEqual(len(frame), 2 * 201)
        self.assertTrue((frame.groupby("label")["value"].first() == 0.0).all())

    def test_persistence_ordering(self):
        frame = illustrate_paths({"slow": OUParams(0.02, 0.0, 0.1), "fast": OUParams(2.0, 0.0, 1.0)},
                                 step=0.01, horizon=100.0, seed=3)
        lag = {}
        for label, group in frame.groupby("label"):
            values = group["value"].to_numpy()[::100]
            lag[label] = np.corrcoef(values[:-1], values[1:])[0, 1]
        self.assertGreater(lag["slow"], lag["fast"])
