"""
Echo Canceler Control

Runtime echo canceler with a continuously adapting NLMS shadow filter, a
static main filter refreshed only by copies, and a periodic four-way test
that selects the step size and schedules the copies.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import signal

from .classifier import (
    DecisionThreshold,
    SufficientStatistic,
    classify,
    compute_statistic,
    threshold,
    threshold_from_override,
)
from .errors import ConfigError
from .signal_models import Hypothesis, NoisePowers

logger = logging.getLogger(__name__)

# delta = max(REGULARIZATION_SCALE * N * input power estimate, REGULARIZATION_FLOOR)
REGULARIZATION_SCALE = 1e-8
REGULARIZATION_FLOOR = 1e-12
SE_FLOOR = 1e-12
SE_SMOOTHING = 1024


class GuardMode(str, Enum):
    """
    Use of the band 1 - eps <= t0/t1 <= 1 + eps at a test.

    HYSTERESIS keeps the previous channel-change flag inside the band;
    LITERAL lets the channel-change flag move only inside the band.
    """

    HYSTERESIS = "hysteresis"
    LITERAL = "literal"


@dataclass
class AdaptiveFilter:
    """FIR estimate of the echo path with its NLMS step size and regularization."""

    coefficients: np.ndarray
    step_size: float = 1.0
    regularization: float = REGULARIZATION_FLOOR

    def __post_init__(self):
        self.coefficients = np.array(self.coefficients, dtype=float)
        if self.coefficients.ndim != 1 or self.coefficients.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        if not 0.0 < self.step_size < 2.0:
            raise ValueError(f"step size must lie in (0, 2), got {self.step_size}")
        if self.regularization <= 0:
            raise ValueError(f"regularization must be positive, got {self.regularization}")

    @property
    def length(self) -> int:
        return int(self.coefficients.size)

    @classmethod
    def zeros(cls, length: int, step_size: float = 1.0) -> "AdaptiveFilter":
        return cls(np.zeros(length), step_size=step_size)

    def output(self, regressor: np.ndarray) -> float:
        return float(self.coefficients @ regressor)


def _nlms_update(coefficients: np.ndarray, regressor: np.ndarray, error: float,
                 step_size: float, regularization: float):
    coefficients += (step_size * error / (float(regressor @ regressor) + regularization)) * regressor


def nlms_step(filt: AdaptiveFilter, x_window, error: float) -> AdaptiveFilter:
    """
    One NLMS update: h + mu e x / (x'x + delta).

    Args:
        filt: Current filter; left untouched
        x_window: Regressor [x(n), ..., x(n-N+1)]
        error: A-priori error y(n) - h'x(n)

    Returns:
        New AdaptiveFilter with the updated coefficients
    """
    x_window = np.asarray(x_window, dtype=float)
    if x_window.shape != filt.coefficients.shape:
        raise ValueError(f"regressor length {x_window.size} does not match filter length {filt.length}")
    coefficients = filt.coefficients.copy()
    _nlms_update(coefficients, x_window, error, filt.step_size, filt.regularization)
    return AdaptiveFilter(coefficients, step_size=filt.step_size, regularization=filt.regularization)


@dataclass
class ControlConfig:
    """
    Step-size schedule and test timing of the canceler.

    Attributes:
        mu: Step size for each decided hypothesis (mu0, mu1, mu2, mu3)
        test_interval: N_t, samples between tests
        copy_delay: N_c, samples from a decision to the copy it schedules
        guard_epsilon: Half-width eps of the band around t0/t1 = 1
        window: p, samples entering each test statistic
        threshold_override: Fixed T_p replacing the noise-power threshold
        guard_mode: How the band is applied
    """

    mu: Tuple[float, float, float, float] = (0.1, 1.0, 0.1, 0.3)
    test_interval: int = 1024
    copy_delay: int = 512
    guard_epsilon: float = 0.25
    window: int = 32
    threshold_override: Optional[float] = None
    guard_mode: GuardMode = GuardMode.HYSTERESIS

    def __post_init__(self):
        self.mu = tuple(float(m) for m in self.mu)
        self.guard_mode = GuardMode(self.guard_mode)

    def diagnostics(self) -> List[str]:
        problems = []
        if len(self.mu) != 4:
            problems.append(f"mu: expected four step sizes (mu0..mu3), got {len(self.mu)}")
        for i, value in enumerate(self.mu):
            if not 0.0 < value < 2.0:
                problems.append(f"mu[{i}]: {value} is outside the NLMS stability range (0, 2)")
        if self.test_interval < 1:
            problems.append(f"test_interval: must be at least 1, got {self.test_interval}")
        if not 0 < self.copy_delay < self.test_interval:
            problems.append(f"copy_delay: the copy delay must satisfy 0 < N_c < N_t "
                            f"(N_c={self.copy_delay}, N_t={self.test_interval})")
        if not 1 <= self.window <= self.test_interval:
            problems.append(f"window: must satisfy 1 <= p <= N_t (p={self.window}, N_t={self.test_interval})")
        if not 0.0 <= self.guard_epsilon < 1.0:
            problems.append(f"guard_epsilon: must lie in [0, 1), got {self.guard_epsilon}")
        if self.threshold_override is not None and self.threshold_override <= 0:
            problems.append(f"threshold_override: must be positive, got {self.threshold_override}")
        return problems

    def validate(self):
        problems = self.diagnostics()
        if problems:
            raise ConfigError("invalid control configuration", problems)

    def step_size(self, hypothesis: Hypothesis) -> float:
        return self.mu[int(hypothesis)]

    def decision_threshold(self, noise: Optional[NoisePowers]) -> DecisionThreshold:
        if self.threshold_override is not None:
            return threshold_from_override(self.threshold_override, self.window)
        if noise is None:
            raise ValueError("noise powers are required unless threshold_override is set")
        return threshold(noise, self.window)


@dataclass
class ControlState:
    """Decision and copy timing of one canceler."""

    current_class: Hypothesis
    window: int
    pending_copy: Optional[int] = None
    last_test: Optional[int] = None
    z0_window: deque = field(default=None)
    z1_window: deque = field(default=None)

    def __post_init__(self):
        if self.z0_window is None:
            self.z0_window = deque(maxlen=self.window)
        if self.z1_window is None:
            self.z1_window = deque(maxlen=self.window)

    def statistic(self) -> SufficientStatistic:
        return compute_statistic(np.fromiter(self.z0_window, float), np.fromiter(self.z1_window, float))


@dataclass(frozen=True)
class TraceRecord:
    """Per-sample record; se0/se1 are NaN without the channel noise."""

    n: int
    hypothesis: Hypothesis
    mu: float
    se0: float
    se1: float
    copied: bool


class EchoCanceler:
    """
    Shadow/main echo canceler driven by the four-way classifier.

    Each call to `process_sample` filters one (x, y) pair: both a-priori
    errors are formed, the shadow filter takes an NLMS step with the current
    step size, a due copy is executed, and every N_t samples the last p error
    pairs are classified to set the step size and possibly schedule a copy.

    An executed copy clears the channel-change flag (H1 becomes H0) and the
    step size follows, so mu always equals the configured value of the
    current class.
    """

    def __init__(self, filter_length: int, config: ControlConfig, noise: Optional[NoisePowers] = None,
                 initial_filters: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                 initial_class: Hypothesis = Hypothesis.H1):
        """
        Args:
            filter_length: Number of taps N of both filters
            config: Control configuration (validated here)
            noise: Noise powers for the threshold; optional with threshold_override
            initial_filters: (shadow, main) coefficients; zeros by default
            initial_class: Class before the first test
        """
        config.validate()
        if filter_length < 1:
            raise ValueError(f"filter length must be positive, got {filter_length}")
        self.filter_length = int(filter_length)
        self.config = config
        self.noise = noise
        self.decision_threshold = config.decision_threshold(noise)
        self._initial_filters = initial_filters
        self._initial_class = Hypothesis(initial_class)
        self.reset()

    def reset(self):
        """Return to the initial filters and class, clearing all windows and counters."""
        shadow, main = (np.zeros(self.filter_length), np.zeros(self.filter_length)) \
            if self._initial_filters is None else self._initial_filters
        self.shadow = np.array(shadow, dtype=float)
        self.main = np.array(main, dtype=float)
        if self.shadow.shape != (self.filter_length,) or self.main.shape != (self.filter_length,):
            raise ValueError(f"initial filters must both have {self.filter_length} taps")

        self.regressor = np.zeros(self.filter_length)
        self.input_power = 0.0
        self.state = ControlState(current_class=self._initial_class, window=self.config.window)
        self.step_size = self.config.step_size(self._initial_class)
        self.n = 0
        self.copies = 0
        self.tests = 0

    @property
    def regularization(self) -> float:
        return max(REGULARIZATION_SCALE * self.filter_length * self.input_power, REGULARIZATION_FLOOR)

    def _guard(self, decided: Hypothesis, stat: SufficientStatistic) -> Hypothesis:
        eps = self.config.guard_epsilon
        inside = 1.0 - eps <= stat.ratio <= 1.0 + eps
        keep_previous = inside if self.config.guard_mode is GuardMode.HYSTERESIS else not inside
        if keep_previous:
            return Hypothesis.from_flags(decided.double_talk, self.state.current_class.channel_change)
        return decided

    def _test(self):
        stat = self.state.statistic()
        decided = self._guard(classify(stat, self.decision_threshold), stat)
        previous = self.state.current_class
        self.state.current_class = decided
        self.state.last_test = self.n
        self.step_size = self.config.step_size(decided)
        self.tests += 1

        if not decided.double_talk and stat.t0 < stat.t1:
            self.state.pending_copy = self.n + self.config.copy_delay
        if decided is not previous:
            logger.debug(f"n={self.n}: {previous.name} -> {decided.name} "
                         f"(t0={stat.t0:.4g}, t1={stat.t1:.4g}, mu={self.step_size})")

    def _execute_copy(self) -> bool:
        self.state.pending_copy = None
        stat = self.state.statistic()
        if stat.t0 < stat.t1:
            self.main[:] = self.shadow
            self.copies += 1
            logger.debug(f"n={self.n}: shadow copied to main (t0={stat.t0:.4g}, t1={stat.t1:.4g})")
            self._absorb_channel_change()
            return True
        logger.debug(f"n={self.n}: scheduled copy dropped, t0={stat.t0:.4g} >= t1={stat.t1:.4g}")
        return False

    def _absorb_channel_change(self):
        # The main filter now holds the shadow; the channel change is absorbed.
        previous = self.state.current_class
        if not previous.channel_change:
            return
        self.state.current_class = Hypothesis.from_flags(previous.double_talk, False)
        self.step_size = self.config.step_size(self.state.current_class)
        logger.debug(f"n={self.n}: copy resolves {previous.name} -> {self.state.current_class.name} "
                     f"(mu={self.step_size})")

    def process_sample(self, x: float, y: float, n0: Optional[float] = None) -> Tuple[float, TraceRecord]:
        """
        Filter one sample.

        Args:
            x: Far-end input x(n)
            y: Microphone signal y(n)
            n0: Channel noise n0(n), only for squared excess error reporting

        Returns:
            (z1(n), TraceRecord) where z1 is the main filter's echo-cancelled output
        """
        self.regressor[1:] = self.regressor[:-1]
        self.regressor[0] = x
        forgetting = 1.0 - 1.0 / self.filter_length
        self.input_power = forgetting * self.input_power + (1.0 - forgetting) * x * x

        z0 = y - float(self.shadow @ self.regressor)
        z1 = y - float(self.main @ self.regressor)
        if n0 is None:
            se0 = se1 = float("nan")
        else:
            se0, se1 = (z0 - n0) ** 2, (z1 - n0) ** 2
        self.state.z0_window.append(z0)
        self.state.z1_window.append(z1)

        _nlms_update(self.shadow, self.regressor, z0, self.step_size, self.regularization)

        copied = False
        if self.state.pending_copy == self.n:
            copied = self._execute_copy()

        if (self.n + 1) % self.config.test_interval == 0 and len(self.state.z0_window) == self.config.window:
            self._test()

        record = TraceRecord(n=self.n, hypothesis=self.state.current_class, mu=self.step_size,
                             se0=float(se0), se1=float(se1), copied=copied)
        self.n += 1
        return z1, record

    def get_status(self) -> Dict[str, Any]:
        """
        Current state of the canceler.

        Returns:
            Dictionary with counters, class, step size and pending copy
        """
        return {
            'samples': self.n,
            'class': self.state.current_class.name,
            'step_size': self.step_size,
            'pending_copy': self.state.pending_copy,
            'last_test': self.state.last_test,
            'tests': self.tests,
            'copies': self.copies,
            'filter_length': self.filter_length,
            'threshold': self.decision_threshold.scaled,
            'guard_mode': self.config.guard_mode.value,
        }


@dataclass(eq=False)
class SignalBundle:
    """Input of one canceler run; n0 is optional."""

    x: np.ndarray
    y: np.ndarray
    n0: Optional[np.ndarray] = None


@dataclass(eq=False)
class CancelerTrace:
    """Per-sample columns of one run plus the main filter's output z1."""

    hypothesis: np.ndarray
    mu: np.ndarray
    se0: np.ndarray
    se1: np.ndarray
    copied: np.ndarray
    residual: np.ndarray
    test_interval: int

    @property
    def length(self) -> int:
        return int(self.hypothesis.size)

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.length)

    def test_instants(self) -> np.ndarray:
        """Sample indices at which a test may run, (k + 1) N_t - 1."""
        return np.arange(self.test_interval - 1, self.length, self.test_interval)

    def decisions(self) -> np.ndarray:
        return self.hypothesis[self.test_instants()]

    def copy_instants(self) -> np.ndarray:
        return np.flatnonzero(self.copied)

    def smoothed_se_db(self, which: int = 1, window: int = SE_SMOOTHING) -> np.ndarray:
        """Trailing moving average of se0 (which=0) or se1 (which=1), in dB."""
        se = self.se1 if which == 1 else self.se0
        if window < 1:
            raise ValueError(f"window must be at least 1, got {window}")
        smoothed = signal.lfilter(np.full(window, 1.0 / window), [1.0], se)
        counts = np.minimum(np.arange(1, se.size + 1), window)
        smoothed = smoothed * window / counts
        return 10.0 * np.log10(np.maximum(smoothed, SE_FLOOR))

    def first_decision(self, hypothesis: Hypothesis, after: int = 0) -> Optional[int]:
        """First test instant at or after `after` whose decision is `hypothesis`."""
        instants = self.test_instants()
        hits = instants[(instants >= after) & (self.hypothesis[instants] == int(hypothesis))]
        return int(hits[0]) if hits.size else None


def run_canceler(signals, config: ControlConfig, noise: Optional[NoisePowers] = None,
                 filter_length: Optional[int] = None,
                 initial_filters: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                 initial_class: Hypothesis = Hypothesis.H1) -> CancelerTrace:
    """
    Run the canceler over a whole signal bundle.

    Args:
        signals: Object with x, y and optional n0 arrays (ScenarioSignals or SignalBundle)
        config: Control configuration
        noise: Threshold noise powers; taken from the scenario config when omitted
        filter_length: Taps N; taken from the scenario channels when omitted
        initial_filters: (shadow, main) starting coefficients
        initial_class: Class before the first test

    Returns:
        CancelerTrace with one entry per sample
    """
    x = np.asarray(signals.x, dtype=float)
    y = np.asarray(signals.y, dtype=float)
    n0 = getattr(signals, "n0", None)
    n0 = None if n0 is None else np.asarray(n0, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"x and y must be vectors of equal length, got {x.shape} and {y.shape}")
    if n0 is not None and n0.shape != x.shape:
        raise ValueError(f"n0 length {n0.size} does not match signal length {x.size}")

    scenario = getattr(signals, "config", None)
    if filter_length is None:
        if scenario is None:
            raise ValueError("filter_length is required for signals without a scenario config")
        filter_length = scenario.channels[0].length
    if noise is None and config.threshold_override is None and scenario is not None:
        if scenario.sigma1_sq <= 0:
            raise ValueError("scenario has no double-talk power; pass detector noise powers explicitly")
        noise = NoisePowers(scenario.sigma0_sq, scenario.sigma1_sq)

    canceler = EchoCanceler(filter_length, config, noise, initial_filters, initial_class)
    total = x.size
    hypothesis = np.empty(total, dtype=np.int8)
    mu = np.empty(total)
    se0 = np.empty(total)
    se1 = np.empty(total)
    copied = np.zeros(total, dtype=bool)
    residual = np.empty(total)

    logger.info(f"Running canceler: {total} samples, N={filter_length}, "
                f"T_p={canceler.decision_threshold.scaled:.6g}")
    for k in range(total):
        residual[k], record = canceler.process_sample(x[k], y[k], None if n0 is None else n0[k])
        hypothesis[k] = record.hypothesis
        mu[k] = record.mu
        se0[k] = record.se0
        se1[k] = record.se1
        copied[k] = record.copied

    logger.info(f"Canceler finished: {canceler.tests} tests, {canceler.copies} copies")
    return CancelerTrace(hypothesis=hypothesis, mu=mu, se0=se0, se1=se1, copied=copied,
                         residual=residual, test_interval=config.test_interval)
