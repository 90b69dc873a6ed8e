import math

import numpy as np
import pytest
from scipy import stats

from hawkesdrift.hawkes import EventLog, HawkesParams
from hawkesdrift.sde import (
    ExplosionError,
    ModelSpec,
    SamplePath,
    SimConfig,
    UnknownModelError,
    builtin_models,
    euler_on_grid,
    get_model,
    merged_grid,
    simulate_path,
)

# seed scanned at n=10000, delta=0.1: the first of 150 seeds whose Model 2 path explodes
MODEL2_EXPLODING_SEED = 35


def zero_model(jump=lambda x: 0.0, name="zero"):
    return ModelSpec(name, lambda x: 0.0, lambda x: 0.0, jump, sigma_max=1.0)


def ou_model():
    m1 = get_model("model1")
    return ModelSpec("ou", m1.drift, m1.diffusion, lambda x: 0.0, sigma_max=1.0, a_max=0.0)


NO_EXCITATION = HawkesParams([0.5, 0.5], np.zeros((2, 2)), 5.0)


class TestBuiltinModels:
    def test_registry(self):
        models = builtin_models()
        assert sorted(models) == ["model1", "model2", "model3", "model4"]
        assert [models[k].sigma_max for k in sorted(models)] == [1.0, 1.0, math.sqrt(3), 1.0]
        assert [models[k].a_max for k in sorted(models)] == [5.0, 5.0, 5.0, None]
        assert not models["model2"].ergodic

    def test_coefficients(self):
        assert get_model("model1").drift(2.0) == -4.0
        assert get_model("model4").jump(-1.0) == pytest.approx(-0.2)
        assert get_model("model1").jump(-7.0) == 5.0
        assert get_model("model2").drift(0.25) == pytest.approx(-0.125)
        assert get_model("model3").drift(0.0) == 0.0

    def test_model3_sigma_bound(self):
        s = get_model("model3").diffusion
        assert s(0.0) == pytest.approx(math.sqrt(3))
        assert s(1e6) == pytest.approx(1.0)
        xs = np.linspace(-10, 10, 2001)
        assert max(s(x) for x in xs) == pytest.approx(math.sqrt(3))

    def test_lookup_aliases(self):
        assert get_model("2").name == "model2"
        assert get_model("Model 3").name == "model3"
        with pytest.raises(UnknownModelError):
            get_model("model9")

    def test_bounds_checked_at_registration(self):
        with pytest.raises(ValueError, match="sigma"):
            ModelSpec("bad", lambda x: 0.0, lambda x: 2.0, lambda x: 0.0, sigma_max=1.0)
        with pytest.raises(ValueError, match="a_max"):
            ModelSpec("bad", lambda x: 0.0, lambda x: 1.0, lambda x: x, sigma_max=1.0, a_max=5.0)


class TestMergedGrid:
    def test_jump_inserted_and_observed_indices(self):
        times, is_jump, observed = merged_grid(2, 0.1, 5, np.array([0.03, 0.15]))
        assert times.size == 11 + 2
        assert np.all(np.diff(times) > 0)
        assert is_jump.sum() == 2
        np.testing.assert_array_equal(times[observed], [0.0, 0.1, 0.2])

    def test_jump_on_grid_point_is_merged(self):
        times, is_jump, observed = merged_grid(2, 0.1, 5, np.array([0.1]))
        assert times.size == 11
        assert is_jump[observed[1]]


class TestSimulatePath:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(n=0, delta=0.1)
        with pytest.raises(ValueError):
            SimConfig(n=10, delta=0.0)
        with pytest.raises(ValueError):
            SimConfig(n=10, delta=0.1, substeps=0)

    def test_constant_path_without_coefficients(self, reference_params):
        path = simulate_path(zero_model(), reference_params, SimConfig(n=200, delta=0.1, x0=0.7, seed=1))
        assert path.values.size == 201
        assert np.all(path.values == 0.7)
        assert path.events.counts().sum() > 0

    def test_unit_jump(self):
        model = zero_model(jump=lambda x: 1.0)
        times, is_jump, observed = merged_grid(1, 0.1, 5, np.array([0.037]))
        values = euler_on_grid(model, times, is_jump, np.zeros(times.size - 1), 2.0)
        assert values[observed].tolist() == [2.0, 3.0]

    def test_unit_jump_from_simulated_events(self):
        params = HawkesParams([0.5], [[0.0]], 1.0)
        model = zero_model(jump=lambda x: 1.0)
        for seed in range(200):
            path = simulate_path(model, params, SimConfig(n=1, delta=0.5, seed=seed))
            if path.events.counts().sum() == 1:
                break
        assert path.values.tolist() == [0.0, 1.0]

    def test_jump_uses_left_state(self):
        # a(x) = x doubles the pre-jump state; two jumps in one interval give x0 * 4
        model = zero_model(jump=lambda x: x)
        times, is_jump, observed = merged_grid(1, 1.0, 2, np.array([0.2, 0.7]))
        values = euler_on_grid(model, times, is_jump, np.zeros(times.size - 1), 1.5)
        assert values[observed][-1] == 6.0

    def test_reproducible_and_seed_sensitive(self, reference_params):
        model = get_model("model1")
        a = simulate_path(model, reference_params, SimConfig(n=300, delta=0.1, seed=4))
        b = simulate_path(model, reference_params, SimConfig(n=300, delta=0.1, seed=4))
        c = simulate_path(model, reference_params, SimConfig(n=300, delta=0.1, seed=5))
        assert a.to_csv() == b.to_csv()
        assert a.events.to_json() == b.events.to_json()
        assert a.to_csv() != c.to_csv()

    def test_seed_sequence_not_consumed(self, reference_params):
        seq = np.random.SeedSequence(77)
        model = get_model("model1")
        a = simulate_path(model, reference_params, SimConfig(n=50, delta=0.1, seed=seq))
        b = simulate_path(model, reference_params, SimConfig(n=50, delta=0.1, seed=seq))
        np.testing.assert_array_equal(a.values, b.values)

    def test_events_span_horizon(self, reference_params):
        path = simulate_path(get_model("model1"), reference_params, SimConfig(n=500, delta=0.1, seed=0))
        assert path.events.horizon == path.horizon == pytest.approx(50.0)

    def test_explosion_reports_time(self, reference_params):
        cfg = SimConfig(n=10000, delta=0.1, seed=MODEL2_EXPLODING_SEED)
        with pytest.raises(ExplosionError) as info:
            simulate_path(get_model("model2"), reference_params, cfg)
        assert 0 < info.value.time <= cfg.horizon
        assert abs(info.value.value) > 1e6

    def test_ou_mean(self):
        # analytic OU mean x0 * exp(-2 t) at several times
        model = ou_model()
        paths = np.array(
            [
                simulate_path(model, NO_EXCITATION, SimConfig(n=5000, delta=1e-3, x0=1.0, seed=s)).values
                for s in range(500)
            ]
        )
        for k in (250, 500, 1000, 5000):
            t = k * 1e-3
            col = paths[:, k]
            se = col.std(ddof=1) / math.sqrt(col.size)
            assert abs(col.mean() - math.exp(-2 * t)) < 3 * se

    def test_ou_stationary_variance(self):
        model = ou_model()
        values = np.concatenate(
            [
                simulate_path(model, NO_EXCITATION, SimConfig(n=1000, delta=0.1, seed=s)).values[100::10]
                for s in range(500)
            ]
        )
        assert values.var() == pytest.approx(0.25, rel=0.10)

    def test_substep_refinement_weakly_consistent(self, reference_params):
        model = get_model("model1")
        coarse = [
            simulate_path(model, reference_params, SimConfig(n=10, delta=0.1, substeps=5, seed=s)).values[-1]
            for s in range(500)
        ]
        fine = [
            simulate_path(model, reference_params, SimConfig(n=10, delta=0.1, substeps=50, seed=10_000 + s)).values[-1]
            for s in range(500)
        ]
        assert stats.ks_2samp(coarse, fine).pvalue > 0.01

    def test_increment_moments_scale_with_step(self, reference_params):
        model = get_model("model1")
        lags = (1, 10, 100)
        sq = {lag: [] for lag in lags}
        for s in range(1000):
            v = simulate_path(model, reference_params, SimConfig(n=1100, delta=1e-3, substeps=1, seed=s)).values
            for lag in lags:
                sq[lag].append((v[1000 + lag] - v[1000]) ** 2)
        m = [np.mean(sq[lag]) for lag in lags]
        assert m[0] <= m[1] <= m[2]
        assert m[1] / m[0] <= 15

    def test_observed_times_are_regular(self, reference_params):
        path = simulate_path(get_model("model1"), reference_params, SimConfig(n=40, delta=0.25, seed=3))
        np.testing.assert_allclose(np.diff(path.times), 0.25)
        assert path.values.size == 41


class TestSamplePathIO:
    def test_csv_round_trip(self, reference_params):
        path = simulate_path(get_model("model3"), reference_params, SimConfig(n=100, delta=0.1, seed=2))
        text = path.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "k,t,X" and len(lines) == 102
        back = SamplePath.from_csv(text)
        np.testing.assert_array_equal(back.values, path.values)
        assert back.delta == pytest.approx(0.1)

    def test_json_round_trip(self, reference_params):
        path = simulate_path(get_model("model4"), reference_params, SimConfig(n=30, delta=0.1, seed=2))
        back = SamplePath.from_json(path.to_json())
        np.testing.assert_array_equal(back.values, path.values)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SamplePath(0.1, [0.0, float("nan")])
