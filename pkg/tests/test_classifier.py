"""
Tests for the DT/CC classifier

Threshold formula, the four-way rule and its tie handling, and agreement
with the Gaussian maximum-likelihood decision it is derived from.
"""

import pytest
import sys
import os

import numpy as np
from hypothesis import given, strategies as st

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from eclab.classifier import (
    SufficientStatistic,
    classify,
    classify_loglik,
    classify_many,
    compute_statistic,
    loglik_scores,
    threshold,
    threshold_from_override,
)
from eclab.signal_models import Hypothesis, NoisePowers, build_covariance, sample_error_vectors

norms = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestThreshold:
    """Test the closed-form threshold."""

    def test_equal_powers(self):
        """sigma0^2 = sigma1^2 = 1 gives T = 2 ln 2."""
        thr = threshold(NoisePowers(1.0, 1.0), 1)
        assert thr.base == pytest.approx(2.0 * np.log(2.0), rel=1e-12)

    def test_low_noise_regime(self):
        """sigma0^2 = 0.001, sigma1^2 = 1 gives T ~ 6.9157e-3 and T_32 ~ 0.2213."""
        thr = threshold(NoisePowers(0.001, 1.0), 32)
        assert thr.base == pytest.approx(6.9157e-3, rel=1e-4)
        assert thr.scaled == pytest.approx(0.2213, rel=1e-3)
        assert thr.scaled == pytest.approx(32 * thr.base)

    def test_vanishing_double_talk(self):
        """T tends to sigma0^2 as sigma1^2 goes to zero."""
        thr = threshold(NoisePowers(0.5, 1e-9), 1)
        assert thr.base == pytest.approx(0.5, rel=1e-6)

    def test_invalid_window(self):
        """Window length must be positive."""
        with pytest.raises(ValueError):
            threshold(NoisePowers(1.0, 1.0), 0)
        with pytest.raises(ValueError):
            threshold_from_override(-1.0, 4)


class TestStatistic:
    """Test the sufficient statistic."""

    def test_compute(self):
        """Norms are sums of squares."""
        stat = compute_statistic([1.0, 2.0], [0.5, -0.5])
        assert stat.t0 == pytest.approx(5.0)
        assert stat.t1 == pytest.approx(0.5)
        assert stat.p == 2
        assert stat.ratio == pytest.approx(10.0)

    def test_mismatched_windows(self):
        """Window lengths must agree."""
        with pytest.raises(ValueError):
            compute_statistic([1.0, 2.0], [1.0])

    def test_negative_norm(self):
        """Norms cannot be negative."""
        with pytest.raises(ValueError):
            SufficientStatistic(-1.0, 1.0, 1)


class TestClassify:
    """Test the four-way rule."""

    def setup_method(self):
        self.thr = threshold(NoisePowers(1.0, 1.0), 1)

    def test_quadrants(self):
        """Each quadrant maps to its hypothesis."""
        assert classify(SufficientStatistic(0.5, 0.2, 1), self.thr) is Hypothesis.H0
        assert classify(SufficientStatistic(0.2, 0.5, 1), self.thr) is Hypothesis.H1
        assert classify(SufficientStatistic(3.0, 2.0, 1), self.thr) is Hypothesis.H2
        assert classify(SufficientStatistic(2.0, 3.0, 1), self.thr) is Hypothesis.H3

    def test_ties_resolve_to_calmer_class(self):
        """Equal norms mean no CC; a norm at T_p means no DT."""
        assert classify(SufficientStatistic(0.5, 0.5, 1), self.thr) is Hypothesis.H0
        assert classify(SufficientStatistic(3.0, 3.0, 1), self.thr) is Hypothesis.H2
        assert classify(SufficientStatistic(5.0, self.thr.scaled, 1), self.thr) is Hypothesis.H0
        assert classify(SufficientStatistic(self.thr.scaled, 5.0, 1), self.thr) is Hypothesis.H1

    def test_tie_epsilon(self):
        """Relative differences within tie_epsilon count as ties."""
        stat = SufficientStatistic(1.0, 1.05, 1)
        assert classify(stat, self.thr) is Hypothesis.H1
        assert classify(stat, self.thr, tie_epsilon=0.1) is Hypothesis.H0

    def test_window_mismatch(self):
        """Statistic and threshold must share p."""
        with pytest.raises(ValueError):
            classify(SufficientStatistic(1.0, 1.0, 2), self.thr)

    def test_vectorized_matches_scalar(self):
        """classify_many agrees with classify element by element."""
        rng = np.random.default_rng(0)
        t0 = rng.exponential(2.0, 500)
        t1 = rng.exponential(2.0, 500)
        t1[:20] = t0[:20]
        batch = classify_many(t0, t1, self.thr)
        for a, b, decided in zip(t0, t1, batch):
            assert decided == classify(SufficientStatistic(a, b, 1), self.thr)

    @given(norms, norms)
    def test_swap_flips_only_channel_change(self, t0, t1):
        """Swapping the norms flips CC and keeps DT."""
        if t0 == t1:
            return
        forward = classify(SufficientStatistic(t0, t1, 1), self.thr)
        backward = classify(SufficientStatistic(t1, t0, 1), self.thr)
        assert forward.double_talk == backward.double_talk
        assert forward.channel_change != backward.channel_change

    @given(norms, norms, st.integers(min_value=-10, max_value=10))
    def test_scale_invariance(self, t0, t1, k):
        """Scaling norms and threshold by a power of two keeps the decision."""
        scale = 2.0 ** k
        scaled_thr = threshold_from_override(scale * self.thr.scaled, 1)
        assert classify(SufficientStatistic(t0, t1, 1), self.thr) is classify(
            SufficientStatistic(scale * t0, scale * t1, 1), scaled_thr)

    @given(norms, norms)
    def test_channel_change_follows_ordering(self, t0, t1):
        """CC is decided exactly when t1 > t0."""
        decided = classify(SufficientStatistic(t0, t1, 1), self.thr)
        assert decided.channel_change == (t1 > t0)


class TestLikelihoodOracle:
    """Test agreement with the Gaussian maximum-likelihood decision."""

    def test_agrees_with_loglik_argmax(self):
        """The closed-form rule reproduces the argmax over the four Gaussian models."""
        rng = np.random.default_rng(2024)
        hypotheses = np.array(list(Hypothesis))
        checked = 0
        for _ in range(100):
            noise = NoisePowers(10.0 ** rng.uniform(-3, 0), 10.0 ** rng.uniform(-2, 1))
            cx2 = 10.0 ** rng.uniform(-1, 1)
            p = int(rng.integers(1, 33))
            models = [build_covariance(h, cx2 * np.eye(p), noise, p) for h in Hypothesis]
            truth = models[int(rng.integers(4))]
            z = sample_error_vectors(truth, 100, rng)

            thr = threshold(noise, p)
            t0 = np.sum(z[:, :p] ** 2, axis=1)
            t1 = np.sum(z[:, p:] ** 2, axis=1)
            clear = (np.abs(t0 - t1) > 1e-6 * np.maximum(t0, t1)) & \
                    (np.abs(np.minimum(t0, t1) - thr.scaled) > 1e-6 * thr.scaled)

            oracle = hypotheses[np.argmax(loglik_scores(z, models), axis=1)]
            rule = classify_many(t0, t1, thr)
            assert np.array_equal(rule[clear], oracle[clear].astype(np.int8))
            checked += int(clear.sum())
        assert checked > 9900

    def test_single_vector_oracle(self):
        """classify_loglik handles one vector."""
        noise = NoisePowers(0.001, 1.0)
        models = [build_covariance(h, 10.0, noise, 1) for h in Hypothesis]
        assert classify_loglik([3.0, 0.01], models) is Hypothesis.H0
        assert classify_loglik([0.01, 3.0], models) is Hypothesis.H1

    def test_zero_vector_resolves_to_h0(self):
        """z = 0 ties H0 with H1 (equal determinants) and resolves to H0 for any setting or model order."""
        rng = np.random.default_rng(77)
        for _ in range(200):
            noise = NoisePowers(10.0 ** rng.uniform(-3, 0), 10.0 ** rng.uniform(-2, 1))
            cx2 = 10.0 ** rng.uniform(-1, 1)
            p = int(rng.integers(1, 33))
            models = [build_covariance(h, cx2 * np.eye(p), noise, p) for h in Hypothesis]
            scores = loglik_scores(np.zeros(2 * p), models)
            assert scores[0] == pytest.approx(scores[1], rel=1e-9)
            assert classify_loglik(np.zeros(2 * p), models) is Hypothesis.H0
            assert classify_loglik(np.zeros(2 * p), models[::-1]) is Hypothesis.H0

    def test_requires_four_models(self):
        """Fewer than four models is an error."""
        models = [build_covariance(Hypothesis.H0, 1.0, NoisePowers(1.0, 1.0), 1)]
        with pytest.raises(ValueError):
            loglik_scores([1.0, 1.0], models)


if __name__ == "__main__":
    pytest.main([__file__])
