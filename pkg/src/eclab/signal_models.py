"""
Signal Models

This module provides the channels, the AR-1 input statistics, the covariance
matrices of the stacked error vector under each hypothesis, exact Gaussian
sampling of that vector, and the synthetic echo scenario used to exercise the
canceler.
"""

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, signal

from .errors import DegenerateCovarianceError
from .seeding import SeedLike, make_rng

logger = logging.getLogger(__name__)

# Eigenvalues above -PSD_TOLERANCE * ||matrix|| count as nonnegative.
PSD_TOLERANCE = 1e-10
JITTER_SCALE = 1e-12
DEFAULT_DECAY = 0.95


class Hypothesis(IntEnum):
    """Operating state of the canceler: double-talk (DT) and channel-change (CC) flags."""

    H0 = 0
    H1 = 1
    H2 = 2
    H3 = 3

    @classmethod
    def from_flags(cls, double_talk: bool, channel_change: bool) -> "Hypothesis":
        return cls(2 * int(bool(double_talk)) + int(bool(channel_change)))

    @property
    def double_talk(self) -> bool:
        return self.value >= 2

    @property
    def channel_change(self) -> bool:
        return self.value % 2 == 1

    @property
    def description(self) -> str:
        dt = "DT" if self.double_talk else "no DT"
        cc = "CC" if self.channel_change else "no CC"
        return f"{dt}, {cc}"


@dataclass(frozen=True, eq=False)
class Channel:
    """
    Echo-path impulse response.

    Attributes:
        taps: Impulse response h, length N
        delay: Number of leading zero taps
        gain_db: Energy h'h in dB
    """

    taps: np.ndarray
    delay: int = 0
    gain_db: float = 0.0

    @property
    def length(self) -> int:
        return int(self.taps.size)

    @property
    def gain(self) -> float:
        return float(self.taps @ self.taps)


@dataclass(frozen=True)
class Ar1Input:
    """Stationary AR-1 input process x(n) = rho x(n-1) + w(n), seen through N-tap regressors."""

    variance: float
    rho: float
    length: int

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"input variance must be non-negative, got {self.variance}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.length < 1:
            raise ValueError(f"regressor length must be positive, got {self.length}")

    def covariance(self) -> np.ndarray:
        return ar1_cross_covariance(self, 0)


@dataclass(frozen=True)
class NoisePowers:
    """Channel noise power sigma0^2 and double-talk power sigma1^2."""

    sigma0_sq: float
    sigma1_sq: float

    def __post_init__(self):
        if self.sigma0_sq <= 0:
            raise ValueError(f"sigma0_sq must be positive, got {self.sigma0_sq}")
        if self.sigma1_sq <= 0:
            raise ValueError(f"sigma1_sq must be positive, got {self.sigma1_sq}")

    def white_power(self, hypothesis: Hypothesis) -> float:
        """Power of the white terms of the error signals under `hypothesis`."""
        if hypothesis.double_talk:
            return self.sigma0_sq + self.sigma1_sq
        return self.sigma0_sq


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """
    Covariance of the stacked error vector [z0(n..n-p+1), z1(n..n-p+1)].

    Attributes:
        hypothesis: Hypothesis the covariance belongs to
        samples: Window length p
        matrix: 2p x 2p covariance, z0 block first
        hx: p x p autocovariance of the difference-filter output
    """

    hypothesis: Hypothesis
    samples: int
    matrix: np.ndarray
    hx: np.ndarray

    @property
    def cx2(self) -> float:
        return float(self.hx[0, 0])

    @property
    def pair_covariance(self) -> np.ndarray:
        """2x2 covariance of one (z0(n), z1(n)) pair."""
        p = self.samples
        m = self.matrix
        return np.array([[m[0, 0], m[0, p]], [m[p, 0], m[p, p]]])


def make_exponential_channel(gain_db: float, delay: int, length: int,
                             decay: float = DEFAULT_DECAY) -> Channel:
    """
    Build a one-sided exponential channel h(k) = c decay^(k - delay), k >= delay.

    Args:
        gain_db: Channel energy h'h in dB
        delay: Leading zero taps
        length: Number of taps N
        decay: Per-tap decay factor in (0, 1)

    Returns:
        Channel whose energy equals 10^(gain_db/10)
    """
    if length <= 0:
        raise ValueError(f"channel length must be positive, got {length}")
    if not 0 <= delay < length:
        raise ValueError(f"delay must satisfy 0 <= delay < length, got delay={delay}, length={length}")
    if not 0.0 < decay < 1.0:
        raise ValueError(f"decay must lie in (0, 1), got {decay}")

    shape = decay ** np.arange(length - delay, dtype=float)
    gain = 10.0 ** (gain_db / 10.0)
    scale = np.sqrt(gain / np.sum(shape * shape))

    taps = np.zeros(length)
    taps[delay:] = scale * shape
    return Channel(taps=taps, delay=int(delay), gain_db=float(gain_db))


def ar1_cross_covariance(process: Ar1Input, lag: int) -> np.ndarray:
    """
    Cross-covariance R_k = E[x(n) x(n-k)'] of AR-1 regressors.

    Entry (i, j) is variance * rho^|i - j - k|; lag 0 gives the input covariance.
    """
    idx = np.arange(process.length)
    first_column = process.rho ** np.abs(idx - lag).astype(float)
    first_row = process.rho ** np.abs(idx + lag).astype(float)
    return process.variance * linalg.toeplitz(first_column, first_row)


def _difference_taps(h0: Channel, h1: Channel) -> np.ndarray:
    if h0.length != h1.length:
        raise ValueError(f"channel lengths differ: {h0.length} != {h1.length}")
    return h0.taps - h1.taps


def _difference_autocovariance(d: np.ndarray, process: Ar1Input, max_lag: int) -> np.ndarray:
    """
    Autocovariance r[m] = d' R_m d, m = 0..max_lag, of the difference-filter output.

    Uses the deterministic autocorrelation a(s) of d: r[m] = var * sum_s a(s) rho^|s + m|.
    """
    if process.length != d.size:
        raise ValueError(f"input regressor length {process.length} does not match channel length {d.size}")
    n = d.size
    acf = np.correlate(d, d, mode="full")
    shifts = np.arange(-(n - 1), n)
    lags = np.arange(max_lag + 1)
    weights = process.rho ** np.abs(shifts[None, :] + lags[:, None]).astype(float)
    return process.variance * (weights @ acf)


def difference_power(h0: Channel, h1: Channel, process: Ar1Input) -> float:
    """Output power c_x^2 = (h0 - h1)' Sigma_x (h0 - h1) of the difference filter."""
    d = _difference_taps(h0, h1)
    return max(float(_difference_autocovariance(d, process, 0)[0]), 0.0)


def solve_input_variance(target_cx2: float, rho: float, h0: Channel, h1: Channel) -> float:
    """
    Input variance that makes the difference-filter output power equal `target_cx2`.

    c_x^2 is linear in the input variance, so this is one quadratic form and a division.
    """
    if target_cx2 < 0:
        raise ValueError(f"target_cx2 must be non-negative, got {target_cx2}")
    d = _difference_taps(h0, h1)
    if not np.any(d):
        raise ValueError("channels are identical; c_x^2 is zero for every input variance")
    unit = float(_difference_autocovariance(d, Ar1Input(1.0, rho, d.size), 0)[0])
    return target_cx2 / unit


def build_hx(h0: Channel, h1: Channel, process: Ar1Input, samples: int) -> np.ndarray:
    """
    Autocovariance matrix H_x of p consecutive difference-filter outputs.

    Entry (k, l) is (h0 - h1)' R_(l-k) (h0 - h1); the diagonal equals c_x^2.

    Args:
        h0: Shadow-side channel
        h1: Main-side channel
        process: Input statistics (regressor length must match the channels)
        samples: Window length p

    Returns:
        Symmetric Toeplitz p x p matrix
    """
    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples}")
    d = _difference_taps(h0, h1)
    return linalg.toeplitz(_difference_autocovariance(d, process, samples - 1))


def _check_psd(matrix: np.ndarray, name: str):
    scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=PSD_TOLERANCE * scale):
        raise ValueError(f"{name} must be symmetric")
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] < -PSD_TOLERANCE * max(float(np.max(np.abs(eigenvalues))), np.finfo(float).tiny):
        raise ValueError(f"{name} must be positive semidefinite (smallest eigenvalue {eigenvalues[0]:.3e})")


def build_covariance(hypothesis: Hypothesis, hx, noise: NoisePowers, samples: int) -> CovarianceModel:
    """
    Assemble the 2p x 2p covariance of the stacked error vector under `hypothesis`.

    Args:
        hypothesis: One of H0..H3
        hx: p x p difference-filter autocovariance (a scalar c_x^2 when p = 1)
        noise: Noise and double-talk powers
        samples: Window length p

    Returns:
        CovarianceModel with blocks ordered (z0, z1)
    """
    hx = np.atleast_2d(np.asarray(hx, dtype=float))
    if hx.shape != (samples, samples):
        raise ValueError(f"hx must be {samples}x{samples}, got {hx.shape}")
    _check_psd(hx, "hx")

    white = noise.white_power(hypothesis) * np.eye(samples)
    if hypothesis.channel_change:
        matrix = np.block([[white, white], [white, white + hx]])
    else:
        matrix = np.block([[white + hx, white], [white, white]])
    return CovarianceModel(hypothesis=Hypothesis(hypothesis), samples=samples, matrix=matrix, hx=hx)


def symmetric_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor, with one diagonal-jitter retry for semidefinite input.

    Raises:
        DegenerateCovarianceError: if the jittered matrix still cannot be factored
    """
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        jitter = JITTER_SCALE * float(np.trace(matrix)) / matrix.shape[0]
        logger.warning(f"Covariance not positive definite; retrying with diagonal jitter {jitter:.3e}")
        try:
            return np.linalg.cholesky(matrix + jitter * np.eye(matrix.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovarianceError("covariance could not be factored after jitter") from exc


def sample_error_vectors(model: CovarianceModel, size: int, rng_seed: SeedLike) -> np.ndarray:
    """Draw `size` stacked error vectors (rows) from N(0, model.matrix)."""
    if size < 0:
        raise ValueError(f"size must be non-negative, got {size}")
    factor = symmetric_factor(model.matrix)
    rng = make_rng(rng_seed)
    return rng.standard_normal((size, factor.shape[0])) @ factor.T


def sample_error_vector(model: CovarianceModel, rng_seed: SeedLike) -> np.ndarray:
    """Draw one stacked error vector of length 2p."""
    return sample_error_vectors(model, 1, rng_seed)[0]


def ar1_path(variance: float, rho: float, length: int, rng: np.random.Generator) -> np.ndarray:
    """AR-1 sample path with x(0) drawn from the stationary law."""
    innovations = rng.standard_normal(length)
    innovations[0] *= np.sqrt(variance)
    innovations[1:] *= np.sqrt(variance * (1.0 - rho * rho))
    return signal.lfilter([1.0], [1.0, -rho], innovations)


@dataclass
class ScenarioConfig:
    """
    Piecewise echo scenario: segment table, true channels g_k, and powers.

    Segment k covers sample indices [boundaries[k-1], boundaries[k]) (0-based),
    is driven by channels[segment_channels[k]] and carries double-talk when
    segment_double_talk[k] is set.
    """

    channels: Tuple[Channel, ...]
    boundaries: Tuple[int, ...] = (20000, 80000, 100000, 120000, 140000)
    segment_channels: Tuple[int, ...] = (0, 1, 1, 2, 2)
    segment_double_talk: Tuple[bool, ...] = (False, False, True, True, False)
    input_variance: float = 1.0
    rho: float = 0.5
    sigma0_sq: float = 0.001
    sigma1_sq: float = 1.0
    settle_samples: int = 5 * 1024

    @classmethod
    def synthetic_default(cls, gain_db: float = -10.0, delays: Sequence[int] = (0, 10, 20),
                      length: int = 1024, decay: float = DEFAULT_DECAY, **overrides) -> "ScenarioConfig":
        """Five-segment, 140K-sample construction with exponential channels at `gain_db`."""
        channels = tuple(make_exponential_channel(gain_db, d, length, decay) for d in delays)
        return cls(channels=channels, **overrides)

    @property
    def total_samples(self) -> int:
        return int(self.boundaries[-1]) if self.boundaries else 0

    def diagnostics(self) -> List[str]:
        problems = []
        if not self.boundaries:
            problems.append("boundaries: at least one segment is required")
        elif self.boundaries[0] <= 0 or any(b <= a for a, b in zip(self.boundaries, self.boundaries[1:])):
            problems.append("boundaries: segment ends must be positive and strictly increasing")
        if len(self.segment_channels) != len(self.boundaries):
            problems.append(f"segment_channels: expected {len(self.boundaries)} entries, got {len(self.segment_channels)}")
        if len(self.segment_double_talk) != len(self.boundaries):
            problems.append(f"segment_double_talk: expected {len(self.boundaries)} entries, got {len(self.segment_double_talk)}")
        if any(not 0 <= k < len(self.channels) for k in self.segment_channels):
            problems.append(f"segment_channels: indices must refer to one of {len(self.channels)} channels")
        if len({c.length for c in self.channels}) > 1:
            problems.append("channels: all channels must have the same length")
        if self.input_variance <= 0:
            problems.append("input_variance: must be positive")
        if not 0.0 <= self.rho < 1.0:
            problems.append("rho: must lie in [0, 1)")
        if self.sigma0_sq <= 0:
            problems.append("sigma0_sq: must be positive")
        if self.sigma1_sq < 0:
            problems.append("sigma1_sq: must be non-negative")
        if self.settle_samples < 0:
            problems.append("settle_samples: must be non-negative")
        return problems


@dataclass(eq=False)
class ScenarioSignals:
    """
    Signal bundle of one scenario realization.

    `true_class` holds the ground-truth hypothesis per sample; `change_points`
    are the 0-based indices where the true channel switches.
    """

    x: np.ndarray
    y: np.ndarray
    n0: np.ndarray
    double_talk: np.ndarray
    channel_index: np.ndarray
    true_class: np.ndarray
    change_points: Tuple[int, ...]
    config: Optional[ScenarioConfig] = field(default=None, repr=False)

    @property
    def length(self) -> int:
        return int(self.x.size)

    @property
    def double_talk_intervals(self) -> List[Tuple[int, int]]:
        """Half-open [start, stop) index ranges with double-talk."""
        flags = np.concatenate(([0], self.double_talk.astype(np.int8), [0]))
        edges = np.flatnonzero(np.diff(flags))
        return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]

    @property
    def events(self) -> List[int]:
        """Sorted indices of every change point and double-talk edge."""
        points = set(self.change_points)
        for start, stop in self.double_talk_intervals:
            points.add(start)
            if stop < self.length:
                points.add(stop)
        return sorted(points)


def _truth_timeline(double_talk: np.ndarray, change_points: Sequence[int], settle: int) -> np.ndarray:
    total = double_talk.size
    channel_change = np.zeros(total, dtype=bool)
    for point in change_points:
        single_talk = np.flatnonzero(~double_talk[point:])
        stop = total if single_talk.size == 0 else point + int(single_talk[0]) + settle
        channel_change[point:min(stop, total)] = True
    return (2 * double_talk.astype(np.int8) + channel_change.astype(np.int8)).astype(np.int8)


def generate_scenario(config: ScenarioConfig, rng_seed: SeedLike) -> ScenarioSignals:
    """
    Generate x(n), y(n), n0(n) and the ground-truth timeline for `config`.

    Draw order (AR-1 path, channel noise, double-talk noise) is fixed so equal
    seeds give bit-identical bundles.
    """
    problems = config.diagnostics()
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))

    rng = make_rng(rng_seed)
    total = config.total_samples
    x = ar1_path(config.input_variance, config.rho, total, rng)
    n0 = np.sqrt(config.sigma0_sq) * rng.standard_normal(total)
    n1 = np.sqrt(config.sigma1_sq) * rng.standard_normal(total)

    segment = np.searchsorted(np.asarray(config.boundaries), np.arange(total), side="right")
    channel_index = np.asarray(config.segment_channels, dtype=np.int64)[segment]
    double_talk = np.asarray(config.segment_double_talk, dtype=bool)[segment] & (config.sigma1_sq > 0)

    echo = np.empty(total)
    for k in np.unique(channel_index):
        mask = channel_index == k
        echo[mask] = signal.lfilter(config.channels[k].taps, [1.0], x)[mask]

    y = echo + n0 + np.where(double_talk, n1, 0.0)
    change_points = tuple(int(i) for i in np.flatnonzero(np.diff(channel_index)) + 1)
    true_class = _truth_timeline(double_talk, change_points, config.settle_samples)

    logger.info(f"Generated scenario: {total} samples, change points {list(change_points)}, "
                f"{int(double_talk.sum())} double-talk samples")
    return ScenarioSignals(x=x, y=y, n0=n0, double_talk=double_talk, channel_index=channel_index,
                           true_class=true_class, change_points=change_points, config=config)
