import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarecast.errors import InputError
from rarecast.inference import DecisionConfig, SmoothingConfig, decide, predict_trace, runs, smooth
from rarecast.model import LagConfig, ModelParams, design_from_arrays


def trailing_mean_oracle(raw, L):
    return np.array([np.mean(raw[max(0, t - L + 1) : t + 1]) for t in range(len(raw))])


def spike_trace(n=400, spikes=20, seed=0, baseline=0.0, height=1.0):
    rng = np.random.default_rng(seed)
    slots = rng.choice(np.arange(5, n - 5, 15), size=spikes, replace=False)
    trace = np.full(n, baseline)
    trace[slots] = height
    return trace


class TestSmooth:
    def test_constant_is_fixed_point(self):
        for L in (1, 2, 10, 50):
            np.testing.assert_array_equal(smooth(np.full(30, 0.7), SmoothingConfig(L)), 0.7)

    def test_matches_trailing_mean(self, rng):
        raw = rng.random(100)
        for L in (1, 3, 10):
            np.testing.assert_allclose(smooth(raw, SmoothingConfig(L)), trailing_mean_oracle(raw, L), rtol=1e-14)

    def test_l_exactly_ten_terms(self):
        raw = np.zeros(20)
        raw[0] = 1.0
        out = smooth(raw, SmoothingConfig(10))
        assert out[9] == pytest.approx(0.1)
        assert out[10] == 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=80), st.integers(1, 25))
    def test_within_window_range(self, values, L):
        raw = np.array(values)
        out = smooth(raw, SmoothingConfig(L))
        for t in range(len(raw)):
            window = raw[max(0, t - L + 1) : t + 1]
            assert window.min() <= out[t] <= window.max()
        assert np.max(np.abs(out)) <= np.max(np.abs(raw))

    def test_rejects_bad_window(self):
        with pytest.raises(InputError):
            SmoothingConfig(0)


class TestDecide:
    def test_example(self):
        dec, eps = decide([0.1, 0.95, 0.95, 0.2, 0.91], DecisionConfig(0.9))
        assert dec.tolist() == [0, 1, 1, 0, 1]
        assert len(eps) == 2

    def test_strict_threshold(self):
        dec, _ = decide([0.9, 0.9000001], DecisionConfig(0.9))
        assert dec.tolist() == [0, 1]

    def test_runs_in_origin_coordinates(self):
        assert runs([0, 1, 1, 0, 1], origin=np.arange(10, 15)) == [(11, 12), (14, 14)]

    def test_threshold_bounds(self):
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(InputError):
                DecisionConfig(bad)

    def test_spikes_collapse_under_smoothing(self):
        trace = spike_trace()
        _, raw_eps = decide(smooth(trace, SmoothingConfig(1)), DecisionConfig(0.9))
        _, smooth_eps = decide(smooth(trace, SmoothingConfig(10)), DecisionConfig(0.9))
        assert len(raw_eps) == 20
        assert len(smooth_eps) == 0

    def test_deterministic_and_order_preserving(self, rng):
        raw = rng.random(200)
        a = smooth(raw, SmoothingConfig(5))
        np.testing.assert_array_equal(a, smooth(raw, SmoothingConfig(5)))
        # a suffix changed after step t cannot affect decisions up to t
        changed = raw.copy()
        changed[150:] = rng.random(50)
        np.testing.assert_array_equal(smooth(changed, SmoothingConfig(5))[:150], a[:150])


class TestPredictTrace:
    def test_zero_params(self, rng):
        design = design_from_arrays(rng.normal(size=30), np.zeros(30), np.zeros(30), LagConfig(2))
        trace = predict_trace(ModelParams.zeros(LagConfig(2), 1), design)
        np.testing.assert_array_equal(trace.raw_probs, 0.5)
        assert trace.origin_steps[0] == 2
        assert not trace.decisions.any()

    def test_raw_mode_skips_smoothing(self, rng):
        design = design_from_arrays(rng.normal(size=50), np.zeros(50), np.zeros(50), LagConfig(0))
        params = ModelParams(np.array([[3.0]]), np.zeros(1), 0.0, LagConfig(0))
        trace = predict_trace(params, design, SmoothingConfig(10), DecisionConfig(0.5), use_raw=True)
        np.testing.assert_array_equal(trace.smoothed_probs, trace.raw_probs)

    def test_uses_observed_y(self):
        x = np.zeros(6)
        y = np.array([0, 0, 1, 0, 0, 1])
        design = design_from_arrays(x, y, np.zeros(6), LagConfig(0))
        params = ModelParams(np.zeros((1, 1)), np.array([5.0]), -2.0, LagConfig(0))
        trace = predict_trace(params, design, SmoothingConfig(1), DecisionConfig(0.5))
        assert trace.decisions.tolist() == y.tolist()
