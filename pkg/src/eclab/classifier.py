"""
Double-talk / Channel-change Classifier

Minimum-error four-way decision on the windowed squared error norms
(t0, t1) = (||z0||^2, ||z1||^2) of the shadow and main filters.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateCovarianceError
from .signal_models import JITTER_SCALE, CovarianceModel, Hypothesis, NoisePowers

logger = logging.getLogger(__name__)

# Log-likelihoods within this relative distance of the best count as tied
LOGLIK_TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SufficientStatistic:
    """Squared norms of the shadow (t0) and main (t1) error windows of length p."""

    t0: float
    t1: float
    p: int

    def __post_init__(self):
        if self.t0 < 0 or self.t1 < 0:
            raise ValueError(f"norms must be non-negative, got t0={self.t0}, t1={self.t1}")
        if self.p < 1:
            raise ValueError(f"window length must be at least 1, got {self.p}")

    @property
    def ratio(self) -> float:
        """t0 / t1, infinite when t1 is zero."""
        if self.t1 == 0:
            return float("inf") if self.t0 > 0 else 1.0
        return self.t0 / self.t1


@dataclass(frozen=True)
class DecisionThreshold:
    """Single-sample threshold T and its p-sample scaling T_p = p T."""

    base: float
    scaled: float
    p: int


def threshold(noise: NoisePowers, p: int) -> DecisionThreshold:
    """
    Closed-form decision threshold.

    T = [s0 (s0 + s1) / s1] ln(1 + s1 / s0) with s0 = sigma0^2, s1 = sigma1^2.

    Args:
        noise: Noise and double-talk powers
        p: Window length

    Returns:
        DecisionThreshold with scaled = p * base
    """
    if p < 1:
        raise ValueError(f"window length must be at least 1, got {p}")
    s0, s1 = noise.sigma0_sq, noise.sigma1_sq
    base = s0 * (s0 + s1) / s1 * np.log1p(s1 / s0)
    return DecisionThreshold(base=float(base), scaled=float(p * base), p=int(p))


def threshold_from_override(scaled: float, p: int) -> DecisionThreshold:
    """Threshold fixed directly at T_p, bypassing the noise-power formula."""
    if scaled <= 0:
        raise ValueError(f"threshold override must be positive, got {scaled}")
    return DecisionThreshold(base=scaled / p, scaled=float(scaled), p=int(p))


def compute_statistic(z0_window, z1_window) -> SufficientStatistic:
    """Sum of squares of each error window."""
    z0 = np.asarray(z0_window, dtype=float).ravel()
    z1 = np.asarray(z1_window, dtype=float).ravel()
    if z0.size == 0:
        raise ValueError("error windows must not be empty")
    if z0.size != z1.size:
        raise ValueError(f"window lengths differ: {z0.size} != {z1.size}")
    return SufficientStatistic(t0=float(z0 @ z0), t1=float(z1 @ z1), p=int(z0.size))


def classify(stat: SufficientStatistic, thr: DecisionThreshold, tie_epsilon: float = 0.0) -> Hypothesis:
    """
    Apply the four-way rule.

    H0: t1 < t0, t1 < T_p    H1: t1 > t0, t0 < T_p
    H2: t1 < t0, t1 > T_p    H3: t1 > t0, t0 > T_p

    Boundaries resolve to the calmer member: |t0 - t1| <= tie_epsilon max(t0, t1)
    counts as no channel change, a norm equal to T_p counts as no double-talk.
    """
    if stat.p != thr.p:
        raise ValueError(f"statistic window {stat.p} does not match threshold window {thr.p}")
    tied = abs(stat.t0 - stat.t1) <= tie_epsilon * max(stat.t0, stat.t1)
    channel_change = stat.t1 > stat.t0 and not tied
    norm = stat.t0 if channel_change else stat.t1
    return Hypothesis.from_flags(double_talk=norm > thr.scaled, channel_change=channel_change)


def classify_many(t0: np.ndarray, t1: np.ndarray, thr: DecisionThreshold) -> np.ndarray:
    """Vectorized `classify` with tie_epsilon = 0; returns hypothesis values as int8."""
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    channel_change = t1 > t0
    norm = np.where(channel_change, t0, t1)
    return (2 * (norm > thr.scaled) + channel_change).astype(np.int8)


def loglik_scores(z, models: Sequence[CovarianceModel]) -> np.ndarray:
    """
    Gaussian log-densities of stacked error vectors under each model.

    `z` is one vector of length 2p or a batch of shape (n, 2p); the result
    has shape (4,) or (n, 4) accordingly.
    """
    if len(models) != 4:
        raise ValueError(f"expected four covariance models, got {len(models)}")
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    batch = np.atleast_2d(z)
    sizes = {m.samples for m in models}
    if len(sizes) != 1 or batch.ndim != 2 or batch.shape[1] != 2 * sizes.pop():
        raise ValueError("models must share p and z must have length 2p")

    scores = np.empty((batch.shape[0], 4))
    for i, model in enumerate(models):
        dim = model.matrix.shape[0]
        jitter = JITTER_SCALE * float(np.trace(model.matrix)) / dim
        cov = model.matrix + jitter * np.eye(dim)
        try:
            scores[:, i] = stats.multivariate_normal.logpdf(batch, mean=np.zeros(dim), cov=cov)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovarianceError(f"covariance of {model.hypothesis.name} is singular") from exc
    return scores[0] if single else scores


def classify_loglik(z, models: Sequence[CovarianceModel], tolerance: float = LOGLIK_TIE_TOLERANCE) -> Hypothesis:
    """
    Maximum-likelihood hypothesis among the four Gaussian models.

    Reference oracle for `classify`. Scores within `tolerance` (relative to
    the best) are tied and resolve like `classify` does, to the calmer
    hypothesis in the order H0, H1, H2, H3.
    """
    z = np.asarray(z, dtype=float).ravel()
    scores = loglik_scores(z, models)
    best = float(np.max(scores))
    tied = scores >= best - tolerance * max(1.0, abs(best))
    return min(model.hypothesis for model, hit in zip(models, tied) if hit)
