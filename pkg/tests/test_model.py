"""Curve evaluation, accumulation, and scoring."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbp.errors import UsageError
from wbp.model import (
    PARAM_NAMES,
    AccumulatorParams,
    FeatureSequence,
    LwcModel,
    WundtParams,
    accumulate_channel,
    canonical_model,
    load_model,
    punishment,
    reward,
    save_model,
    sequence_score,
    stimulus_intensity,
    wundt_eval,
)

from conftest import random_model_vector


def curve(r_max=1.0, rho_r=1.0, d_r=0.0, p_max=1.0, rho_p=1.0, d_p=0.0):
    return WundtParams(r_max, rho_r, d_r, p_max, rho_p, d_p)


class TestReward:
    def test_sigmoid_midpoint(self):
        assert reward(curve(), 0.0) == 0.5

    def test_zero_ceiling(self):
        assert reward(curve(r_max=0.0), 3.7) == 0.0

    def test_midpoint_is_half_ceiling(self):
        assert reward(curve(r_max=2.0, rho_r=3.0, d_r=1.0), 1.0) == 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(UsageError):
            reward(curve(), float("nan"))


class TestPunishment:
    def test_sigmoid_midpoint(self):
        assert punishment(curve(), 0.0) == 0.5

    def test_far_left_saturation(self):
        assert punishment(curve(d_p=50.0), 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_midpoint(self):
        assert punishment(curve(p_max=0.5, rho_p=2.0, d_p=2.0), 2.0) == 0.25


class TestWundtEval:
    def test_identical_branches_cancel(self):
        w = curve(r_max=0.8, rho_r=2.0, d_r=1.0, p_max=0.8, rho_p=2.0, d_p=1.0)
        rng = np.random.default_rng(0)
        for x in rng.uniform(-50.0, 50.0, 1000):
            assert wundt_eval(w, float(x)) == 0.0

    def test_vanishing_punishment(self):
        assert wundt_eval(curve(p_max=0.0), 0.0) == 0.5

    def test_bell_shape_on_dense_grid(self):
        # Independent straight-line evaluation over a fine grid.
        w = curve(r_max=1.0, rho_r=3.0, d_r=0.8, p_max=1.0, rho_p=3.0, d_p=1.6)
        xs = np.arange(0.0, 3.0 + 1e-9, 1e-4)
        grid = (1.0 / (1.0 + np.exp(-3.0 * (xs - 0.8)))
                - 1.0 / (1.0 + np.exp(-3.0 * (xs - 1.6))))
        peak = int(grid.argmax())
        assert 0.8 < xs[peak] < 1.6
        tail = grid[peak:]
        assert np.all(np.diff(tail) <= 1e-12)
        # Spot-check our evaluation against the grid oracle.
        for i in (0, peak, len(xs) - 1):
            assert wundt_eval(w, float(xs[i])) == pytest.approx(float(grid[i]), abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            w = curve(r_max=float(rng.uniform(0, 2)), rho_r=float(rng.uniform(0.1, 3)),
                      d_r=float(rng.uniform(-2, 2)), p_max=float(rng.uniform(0, 2)),
                      rho_p=float(rng.uniform(0.1, 3)), d_p=float(rng.uniform(-2, 2)))
            x = float(rng.uniform(-100, 100))
            assert -w.p_max <= wundt_eval(w, x) <= w.r_max

    @given(x=st.floats(-1e3, 1e3), scale=st.floats(1.0, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_no_overflow_at_large_magnitudes(self, x, scale):
        w = curve(r_max=scale, rho_r=scale, d_r=-scale / 2, p_max=scale,
                  rho_p=scale, d_p=scale / 2)
        value = wundt_eval(w, x)
        assert math.isfinite(value)
        assert -w.p_max <= value <= w.r_max


class TestAccumulateChannel:
    def test_single_step_no_memory(self):
        assert accumulate_channel(0.0, [0.7]) == 0.7

    def test_one_step_recurrence(self):
        assert accumulate_channel(0.5, [1.0, 1.0]) == 1.5

    def test_lambda_one_is_summation(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(0, 1, 9).tolist()
        assert accumulate_channel(1.0, values) == pytest.approx(sum(values), rel=1e-12)

    def test_lambda_zero_returns_last(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            values = rng.uniform(0, 1, int(rng.integers(1, 8))).tolist()
            assert accumulate_channel(0.0, values) == values[-1]

    @given(lam=st.floats(0.0, 1.0),
           values=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
    @settings(max_examples=200, deadline=None)
    def test_matches_power_expansion(self, lam, values):
        # Closed form: S_N = sum over n of lam^(N-n) * v_n.
        n = len(values)
        expected = sum(lam ** (n - i - 1) * v for i, v in enumerate(values))
        assert accumulate_channel(lam, values) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(UsageError):
            accumulate_channel(0.5, [])


class TestStimulusIntensity:
    def test_weighted_sum_single_step(self):
        a = AccumulatorParams(1, 1, 1, 0, 0, 0)
        seq = FeatureSequence(((0.2, 0.3, 0.5),))
        assert stimulus_intensity(a, seq) == 1.0

    def test_zero_weights(self):
        a = AccumulatorParams(0, 0, 0, 0.5, 0.5, 0.5)
        seq = FeatureSequence(((0.9, 0.9, 0.9), (0.1, 0.4, 0.7)))
        assert stimulus_intensity(a, seq) == 0.0

    def test_single_channel_scaled(self):
        a = AccumulatorParams(2, 0, 0, 0.5, 0, 0)
        seq = FeatureSequence(((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
        assert stimulus_intensity(a, seq) == 3.0

    def test_linear_in_channel_weight(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            vec = random_model_vector(rng)
            seq = FeatureSequence(tuple(
                tuple(rng.uniform(0, 1, 3).tolist())
                for _ in range(int(rng.integers(1, 6)))))
            base = LwcModel.from_vector(vec).accum
            doubled_vec = list(vec)
            doubled_vec[7] *= 2.0
            doubled = LwcModel.from_vector(doubled_vec).accum
            others = AccumulatorParams(base.w_d, 0.0, base.w_e, base.lambda_d,
                                       base.lambda_a, base.lambda_e)
            a_contrib = stimulus_intensity(base, seq) - stimulus_intensity(others, seq)
            a_doubled = stimulus_intensity(doubled, seq) - stimulus_intensity(others, seq)
            assert a_doubled == pytest.approx(2.0 * a_contrib, rel=1e-12, abs=1e-15)


class TestSequenceScore:
    def test_zero_weight_composition(self):
        m = LwcModel(wundt=curve(), accum=AccumulatorParams(0, 0, 0, 0.5, 0.5, 0.5))
        seq = FeatureSequence(((0.4, 0.5, 0.6), (0.1, 0.2, 0.3)))
        assert sequence_score(m, seq) == wundt_eval(m.wundt, 0.0)

    def test_single_step_composition(self):
        m = canonical_model()
        seq = FeatureSequence(((0.4, 0.5, 0.6),))
        assert sequence_score(m, seq) == wundt_eval(
            m.wundt, stimulus_intensity(m.accum, seq))

    def test_against_straight_line_reimplementation(self):
        # Independent restatement of the whole pipeline, no shared helpers.
        rng = np.random.default_rng(6)
        for _ in range(100):
            vec = random_model_vector(rng)
            steps = [tuple(rng.uniform(0, 1, 3).tolist())
                     for _ in range(int(rng.integers(1, 7)))]
            (r_max, rho_r, d_r, p_max, rho_p, d_p,
             w_d, w_a, w_e, ld, la, le) = vec
            sd = sa = se = 0.0
            for s in steps:
                sd = s[0] + ld * sd
                sa = s[1] + la * sa
                se = s[2] + le * se
            x = w_d * sd + w_a * sa + w_e * se
            expected = (r_max / (1.0 + math.exp(-rho_r * (x - d_r)))
                        - p_max / (1.0 + math.exp(-rho_p * (x - d_p))))
            got = sequence_score(LwcModel.from_vector(vec), FeatureSequence(tuple(steps)))
            assert got == pytest.approx(expected, abs=1e-12)

    def test_permutation_sensitive_with_memory(self):
        # Reward-only curve is injective, so different intensities differ.
        m = LwcModel(
            wundt=curve(r_max=1.0, rho_r=1.0, d_r=0.0, p_max=0.0, rho_p=1.0, d_p=10.0),
            accum=AccumulatorParams(1, 1, 1, 0.9, 0.9, 0.9))
        t1, t2 = (0.1, 0.2, 0.3), (0.9, 0.8, 0.7)
        s12 = sequence_score(m, FeatureSequence((t1, t2)))
        s21 = sequence_score(m, FeatureSequence((t2, t1)))
        assert s12 != s21


class TestModelPlumbing:
    def test_canonical_order_is_frozen(self):
        assert PARAM_NAMES == (
            "r_max", "rho_r", "d_r", "p_max", "rho_p", "d_p",
            "w_d", "w_a", "w_e", "lambda_d", "lambda_a", "lambda_e")
        m = canonical_model()
        assert LwcModel.from_vector(m.to_vector()) == m

    def test_clamps(self):
        w = WundtParams(-1.0, -5.0, 0.0, -2.0, 0.0, 0.0)
        assert w.r_max == 0.0 and w.p_max == 0.0
        assert w.rho_r == 1e-6 and w.rho_p == 1e-6
        a = AccumulatorParams(1, 1, 1, -0.5, 1.5, 0.5)
        assert a.lambda_d == 0.0 and a.lambda_a == 1.0 and a.lambda_e == 0.5

    def test_serialization_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        m = LwcModel.from_vector(random_model_vector(rng))
        path = tmp_path / "model.lwc"
        save_model(m, path)
        text = path.read_text()
        assert text.startswith("format=lwc-v1\n")
        assert load_model(path) == m

    def test_load_rejects_missing_parameter(self, tmp_path):
        path = tmp_path / "model.lwc"
        save_model(canonical_model(), path)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("w_a=")]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(UsageError, match="w_a"):
            load_model(path)

    def test_empty_sequence_rejected(self):
        with pytest.raises(UsageError):
            FeatureSequence(())
