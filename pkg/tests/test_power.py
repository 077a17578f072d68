"""Tests for the power module."""

import itertools
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

import power.core
from gan import LossTrace, MLPSpec, ModelCheckpoint, NetworkState, Objective, TrainConfig
from power import (
    CurveFormatError,
    CurveLabel,
    EmptyGroupError,
    ErrorBudgetExceededError,
    PowerConfig,
    PowerConfigError,
    PowerCurve,
    PowerCurvePoint,
    conservativeness,
    default_grid_start,
    estimate_power,
    format_curve_csv,
    pairing_curve,
    parse_curve_csv,
    power_curve,
    power_curve_fmri,
    read_curve_csv,
    recommend_sample_size,
    smooth,
    smooth_values,
    wilson_interval,
    write_curve_csv,
)
from sampling import EmpiricalSource, GaussianSource, GenerativeSource, Strategy, TaggedDataset
from twosample import DegenerateSampleError, TestSpec


def curve_of(ns, gammas, smoothed=None, trials=50):
    points = [PowerCurvePoint(n=n, gamma=g, rejections=round(g * trials), trials=trials) for n, g in zip(ns, gammas)]
    return PowerCurve(label=CurveLabel("t", "resample"), points=points, smoothed=smoothed)


def shifted_checkpoint(shift=5.0):
    """Conditional generator over 2 columns: z + shift * [a, a] for vocabulary [a, b]."""
    weights = np.array([[1.0, 0.0], [0.0, 1.0], [shift, shift], [0.0, 0.0]])
    generator = NetworkState(MLPSpec((4, 2)), {"W0": weights, "b0": np.zeros((1, 2))})
    critic = NetworkState(MLPSpec((4, 1)), {"W0": np.zeros((4, 1)), "b0": np.zeros((1, 1))})
    config = TrainConfig(objective=Objective.WGAN_GP, noise_dim=2, condition_vocab=["a", "b"])
    return ModelCheckpoint(generator, critic, config, LossTrace(), data_dim=2)


def identity_checkpoint(width):
    """Unconditional generator returning its N(0, I) noise unchanged."""
    generator = NetworkState(MLPSpec((width, width)), {"W0": np.eye(width), "b0": np.zeros((1, width))})
    critic = NetworkState(MLPSpec((width, 1)), {"W0": np.zeros((width, 1)), "b0": np.zeros((1, 1))})
    config = TrainConfig(objective=Objective.WGAN_GP, noise_dim=width)
    return ModelCheckpoint(generator, critic, config, LossTrace(), data_dim=width)


class TestPowerConfig:

    def test_grid(self):
        assert PowerConfig(n_start=20, n_end=100, n_step=20).grid == [20, 40, 60, 80, 100]
        assert PowerConfig(n_start=20, n_end=50, n_step=20).grid == [20, 40]

    @pytest.mark.parametrize("settings", [
        {"n_step": 0}, {"n_start": 30, "n_end": 20}, {"trials": 0}, {"alpha": 1.0},
        {"smooth_window": 4}, {"error_budget": 1.0}, {"threads": 0}, {"target": 1.5},
    ])
    def test_invalid(self, settings):
        with pytest.raises(PowerConfigError) as excinfo:
            PowerConfig(**settings)
        assert excinfo.value.code == 2

    def test_default_grid_start(self):
        assert default_grid_start(10) == 20
        assert default_grid_start(30) == 33
        assert default_grid_start(1, TestSpec("mmd")) == 20

    def test_fingerprint_ignores_threads(self):
        config = PowerConfig(trials=10)
        assert config.fingerprint() == replace(config, threads=8).fingerprint()
        assert config.fingerprint() != replace(config, master_seed=1).fingerprint()


class TestWilson:

    def test_known_values(self):
        low, high = wilson_interval(5, 10)
        assert low == pytest.approx(0.2366, abs=1e-4)
        assert high == pytest.approx(0.7634, abs=1e-4)

    def test_bounds(self):
        assert wilson_interval(0, 20)[0] == 0.0
        assert wilson_interval(20, 20)[1] == 1.0

    def test_contains_estimate(self):
        for successes, trials in itertools.product(range(0, 11, 2), (10, 50)):
            low, high = wilson_interval(successes, trials)
            assert low <= successes / trials <= high


class TestEstimatePower:

    def test_gamma_is_rejection_fraction(self, gaussian_pair):
        point = estimate_power(*gaussian_pair, Strategy.RESAMPLE, Strategy.RESAMPLE, 40, PowerConfig(trials=30))
        assert point.gamma * point.trials == point.rejections
        assert point.ci_low <= point.gamma <= point.ci_high

    def test_single_trial(self, gaussian_pair):
        point = estimate_power(*gaussian_pair, Strategy.RESAMPLE, Strategy.RESAMPLE, 20, PowerConfig(trials=1))
        assert point.gamma in (0.0, 1.0)

    def test_fixed_replicates_agree(self, rng):
        # Pools of exactly n rows: every bootstrap replicate is a permutation of the pool.
        first, second = EmpiricalSource(rng.normal(size=(25, 3))), EmpiricalSource(rng.normal(size=(25, 3)) + 0.2)
        point = estimate_power(first, second, Strategy.BOOTSTRAP, Strategy.BOOTSTRAP, 25, PowerConfig(trials=20))
        assert point.rejections in (0, 20)

    def test_thread_count_does_not_matter(self, gaussian_pair):
        config = PowerConfig(n_start=20, n_end=60, n_step=20, trials=24, master_seed=5)
        serial, _ = power_curve(*gaussian_pair, config)
        threaded, _ = power_curve(*gaussian_pair, replace(config, threads=4))
        assert serial.points == threaded.points
        assert format_curve_csv(serial) == format_curve_csv(threaded)

    def test_null_size(self):
        source = GaussianSource(np.zeros(10), np.ones(10))
        config = PowerConfig(trials=400, test=TestSpec("hotelling"), master_seed=11)
        point = estimate_power(source, source, Strategy.RESAMPLE, Strategy.RESAMPLE, 100, config)
        assert 0.02 <= point.gamma <= 0.08

    def test_errors_within_budget_are_excluded(self, gaussian_pair, monkeypatch):
        calls = []
        real_run_test = power.core.run_test

        def flaky(x, y, spec, seed=0):
            calls.append(seed)
            if len(calls) == 1:
                raise DegenerateSampleError("constant column")
            return real_run_test(x, y, spec, seed=seed)

        monkeypatch.setattr(power.core, "run_test", flaky)
        point = estimate_power(*gaussian_pair, Strategy.RESAMPLE, Strategy.RESAMPLE, 40, PowerConfig(trials=50))
        assert point.errors_excluded == 1
        assert point.trials == 49
        assert point.gamma == point.rejections / 49

    def test_error_budget_exceeded(self):
        constant = EmpiricalSource(np.ones((30, 2)))
        with pytest.raises(ErrorBudgetExceededError) as excinfo:
            estimate_power(constant, constant, Strategy.BOOTSTRAP, Strategy.BOOTSTRAP, 20,
                           PowerConfig(trials=10, test=TestSpec("hotelling")))
        assert excinfo.value.errors == 10
        assert excinfo.value.code == 5


class TestPowerCurve:

    def test_null_curves_near_alpha(self, gaussian_pair):
        source = gaussian_pair[0]
        config = PowerConfig(n_start=20, n_end=100, n_step=20, trials=200, master_seed=3)
        real, synthetic = power_curve(source, source, config)
        assert synthetic is None
        assert all(point.gamma <= 0.12 for point in real.points)

    @pytest.mark.slow
    def test_null_intervals_cover_alpha(self):
        covered = total = 0
        for name, width in [("welch", 1), ("student", 1), ("hotelling", 3), ("welch-bonferroni", 3), ("mmd", 3),
                            ("mmd-l1", 3)]:
            source = GaussianSource(np.zeros(width), np.ones(width), name="P")
            pool = EmpiricalSource(np.random.default_rng([width, 1]).normal(size=(5000, width)), name="P pool")
            generator = GenerativeSource(identity_checkpoint(width), name="G")
            pairings = [(source, Strategy.RESAMPLE), (pool, Strategy.BOOTSTRAP), (generator, Strategy.SYNTHETIC)]
            for master_seed, (src, strategy) in itertools.product((5, 6), pairings):
                config = PowerConfig(n_start=20, n_end=100, n_step=20, trials=200, master_seed=master_seed,
                                     test=TestSpec(name, permutations=100))
                curve = pairing_curve(src, src, (strategy, strategy), config)
                covered += sum(p.ci_low <= 0.05 <= p.ci_high for p in curve.points)
                total += len(curve.points)
        assert total == 6 * 2 * 3 * 5
        assert covered >= 0.9 * total

    def test_fewer_trials_widen_intervals(self, gaussian_pair):
        config = PowerConfig(n_start=20, n_end=100, n_step=40, trials=50)
        wide, _ = power_curve(*gaussian_pair, replace(config, trials=10))
        narrow, _ = power_curve(*gaussian_pair, config)
        for a, b in zip(wide.points, narrow.points):
            assert a.ci_high - a.ci_low > b.ci_high - b.ci_low

    def test_labels_and_smoothing(self, gaussian_pair):
        real, _ = power_curve(*gaussian_pair, PowerConfig(n_start=20, n_end=100, n_step=20, trials=10))
        assert real.label == CurveLabel("t", "resample", ("D1", "D2"))
        assert len(real.smoothed) == len(real.points) == 5
        assert real.fingerprint

    def test_grid_below_test_minimum(self):
        wide = GaussianSource(np.zeros(60), np.ones(60))
        with pytest.raises(PowerConfigError):
            power_curve(wide, wide, PowerConfig(n_start=20, n_end=40))

    def test_one_generator_is_not_enough(self, gaussian_pair):
        with pytest.raises(PowerConfigError):
            power_curve(*gaussian_pair, PowerConfig(), synthetic1=object())

    def test_bootstrap_points_beyond_pool_are_skipped(self, rng):
        first, second = EmpiricalSource(rng.normal(size=(45, 2))), EmpiricalSource(rng.normal(size=(80, 2)))
        real, _ = power_curve(first, second, PowerConfig(n_start=20, n_end=80, n_step=20, trials=5))
        assert real.ns == [20, 40]
        assert real.skipped == [60, 80]

    @pytest.mark.slow
    def test_matches_noncentral_f_power(self, gaussian_pair):
        d = 10
        config = PowerConfig(n_start=20, n_end=200, n_step=20, trials=400, test=TestSpec("hotelling"),
                             master_seed=2024)
        real, _ = power_curve(*gaussian_pair, config)
        analytic = []
        for n in config.grid:
            df2 = 2 * n - d - 1
            critical = stats.f.ppf(0.95, d, df2)
            analytic.append(stats.ncf.sf(critical, d, df2, 0.45 * n))
        assert np.max(np.abs(np.array(real.gammas) - analytic)) <= 0.07
        crossing = next(n for n, value in zip(config.grid, analytic) if value >= 0.8)
        recommended = recommend_sample_size(replace(real, smoothed=None)).n_required
        assert abs(recommended - crossing) <= config.n_step

    @pytest.mark.slow
    def test_noncentral_f_curve_independent_of_threads(self, gaussian_pair):
        config = PowerConfig(n_start=20, n_end=200, n_step=20, trials=200, test=TestSpec("hotelling"),
                             master_seed=2024)
        single, _ = power_curve(*gaussian_pair, replace(config, threads=1))
        several, _ = power_curve(*gaussian_pair, replace(config, threads=4))
        assert format_curve_csv(single) == format_curve_csv(several)


class TestPowerCurveFmri:

    def _planted(self, rng, rows=400, delta=0.3, d=10):
        tagged = rng.normal(size=(rows, d)) + delta
        untagged = rng.normal(size=(rows, d))
        tags = [{"visual"}] * rows + [set()] * rows
        return TaggedDataset(np.vstack([tagged, untagged]), tags, ["visual", "auditory"])

    @pytest.mark.slow
    def test_real_curve_matches_gaussian_curve(self, rng, gaussian_pair):
        config = PowerConfig(n_start=20, n_end=100, n_step=20, trials=200, test=TestSpec("hotelling"),
                             master_seed=9)
        real, synthetic = power_curve_fmri(self._planted(rng), "visual", None, config)
        gaussian, _ = power_curve(gaussian_pair[1], gaussian_pair[0], config)
        assert synthetic is None
        assert real.label.strategy == "bootstrap"
        assert np.max(np.abs(np.array(real.gammas) - gaussian.gammas)) <= 0.15

    def test_tag_on_no_row(self, rng):
        with pytest.raises(EmptyGroupError):
            power_curve_fmri(self._planted(rng, rows=30), "auditory", None, PowerConfig(n_end=20, trials=2))

    def test_small_side_skips_points(self, rng):
        dataset = TaggedDataset(rng.normal(size=(100, 2)), [{"a"}] * 30 + [set()] * 70, ["a"])
        real, _ = power_curve_fmri(dataset, "a", None, PowerConfig(n_start=20, n_end=60, n_step=20, trials=4))
        assert real.ns == [20]
        assert real.skipped == [40, 60]

    def test_synthetic_side_uses_condition(self, rng):
        dataset = TaggedDataset(rng.normal(size=(60, 2)), [{"a"}] * 30 + [set()] * 30, ["a", "b"])
        config = PowerConfig(n_start=20, n_end=20, trials=10)
        real, synthetic = power_curve_fmri(dataset, "a", shifted_checkpoint(), config)
        assert synthetic.label.strategy == "synthetic"
        assert synthetic.label.sources == ("synthetic a", "synthetic not a")
        assert synthetic.gammas == [1.0]

    def test_unconditioned_tag(self, rng):
        dataset = TaggedDataset(rng.normal(size=(60, 2)), [{"c"}] * 30 + [set()] * 30, ["c"])
        with pytest.raises(PowerConfigError):
            power_curve_fmri(dataset, "c", shifted_checkpoint(), PowerConfig(n_end=20, trials=2))


class TestSmoothing:

    def test_boundary_truncated_means(self):
        assert smooth_values([0.0, 1.0, 0.0], 3) == pytest.approx([0.5, 1 / 3, 0.5])

    def test_window_one_is_identity(self):
        assert smooth_values([0.1, 0.7, 0.3], 1) == [0.1, 0.7, 0.3]

    def test_constant(self):
        assert smooth_values([0.4] * 6, 5) == pytest.approx([0.4] * 6)

    def test_even_window(self):
        with pytest.raises(PowerConfigError):
            smooth_values([0.1, 0.2], 2)

    def test_raw_values_kept(self):
        smoothed = smooth(curve_of([20, 40, 60], [0.0, 1.0, 0.0]), 3)
        assert smoothed.gammas == [0.0, 1.0, 0.0]
        assert smoothed.smoothed == pytest.approx([0.5, 1 / 3, 0.5])


class TestRecommendation:

    def test_first_crossing(self):
        curve = curve_of([20, 40, 60, 80], [0.5, 0.79, 0.81, 0.9], smoothed=[0.5, 0.79, 0.81, 0.9])
        recommendation = recommend_sample_size(curve, 0.8)
        assert recommendation.n_required == 60
        assert recommendation.basis == "smoothed"

    def test_never_reached(self):
        recommendation = recommend_sample_size(curve_of([20, 40], [0.3, 0.6]), 0.8)
        assert recommendation.n_required is None
        assert recommendation.max_gamma == 0.6
        assert recommendation.basis == "raw"

    def test_zero_target(self):
        assert recommend_sample_size(curve_of([20, 40], [0.0, 0.1]), 0.0).n_required == 20


class TestConservativeness:

    def test_summary(self):
        real = curve_of([20, 40, 60], [0.2, 0.5, 0.9])
        synthetic = curve_of([40, 60, 80], [0.4, 0.9, 1.0])
        summary = conservativeness(real, synthetic)
        assert summary["common_points"] == 2
        assert summary["fraction_at_or_below"] == 1.0
        assert summary["mean_difference"] == pytest.approx(-0.05)

    def test_no_overlap(self):
        summary = conservativeness(curve_of([20], [0.1]), curve_of([40], [0.2]))
        assert summary["fraction_at_or_below"] is None


class TestCurveTable:

    def test_format(self):
        curve = PowerCurve(CurveLabel("t", "resample"),
                           [PowerCurvePoint(20, 0.5, 25, 50, 0.25, 0.75, 0),
                            PowerCurvePoint(40, 1.0, 50, 50, None, None, 1)],
                           smoothed=[0.75, 0.75])
        assert format_curve_csv(curve) == ("n,gamma,smoothed,ci_low,ci_high,rejections,K,errors_excluded\n"
                                           "20,0.5,0.75,0.25,0.75,25,50,0\n"
                                           "40,1.0,0.75,,,50,50,1\n")

    def test_file_round_trip(self, tmp_path, gaussian_pair):
        real, _ = power_curve(*gaussian_pair, PowerConfig(n_start=20, n_end=60, n_step=20, trials=8))
        write_curve_csv(real, tmp_path / "t_resample.csv")
        loaded = read_curve_csv(tmp_path / "t_resample.csv")
        assert loaded.points == real.points
        assert loaded.smoothed == real.smoothed
        assert loaded.label.test == "t_resample"

    def test_bad_header(self):
        with pytest.raises(CurveFormatError):
            parse_curve_csv("n,power\n20,0.5\n", CurveLabel("t", "resample"))

    def test_n_must_increase(self):
        text = "n,gamma,smoothed,ci_low,ci_high,rejections,K,errors_excluded\n40,0.5,,,,1,2,0\n20,0.5,,,,1,2,0\n"
        with pytest.raises(CurveFormatError):
            parse_curve_csv(text, CurveLabel("t", "resample"))

    def test_missing_smoothed_column_values(self):
        text = "n,gamma,smoothed,ci_low,ci_high,rejections,K,errors_excluded\n20,0.5,,,,1,2,0\n"
        curve = parse_curve_csv(text, CurveLabel("t", "resample"))
        assert curve.smoothed is None
        assert curve.points[0].ci_low is None
