"""
Gamma Analysis

Performance analysis of the four-way classifier. Under the independence
approximation the statistic (t0, t1) follows a bivariate gamma law G(q, P);
this module evaluates that law, integrates it over the decision regions to
get the confusion matrix, and estimates the same matrix by Monte Carlo.
"""

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, partial
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from .classifier import classify_many, threshold
from .errors import DegenerateCovarianceError, QuadratureError
from .seeding import SeedLike, keyed_seed, make_rng, spawn_seeds
from .signal_models import (
    Ar1Input,
    Channel,
    CovarianceModel,
    Hypothesis,
    NoisePowers,
    build_covariance,
    build_hx,
    difference_power,
    solve_input_variance,
    symmetric_factor,
)

logger = logging.getLogger(__name__)

SERIES_TERM_CAP = 100_000
SERIES_RELATIVE_CUTOFF = 1e-18
TAIL_PROBABILITY = 1e-10

# Outer tolerances bound each confusion entry; inner ones bound the line integrals.
OUTER_EPSABS = 1e-8
OUTER_EPSREL = 1e-7
INNER_EPSABS = 1e-11
INNER_EPSREL = 1e-8
QUAD_LIMIT = 200
MAX_QUADRATURE_ERROR = 1e-5

# p12 below this fraction of 4 s11 s22 is treated as a singular pair covariance.
DEGENERACY_TOLERANCE = 1e-12

_SERIES_BLOCK = 64
_BREAKPOINTS = 4.0 ** -np.arange(1, 9)
_MC_BATCH = 20_000


class Source(str, Enum):
    THEORY = "theory"
    MONTE_CARLO = "monte_carlo"


class McMode(str, Enum):
    """How Monte Carlo draws the p error pairs of a window."""

    IID_PAIRS = "iid_pairs"
    CORRELATED = "correlated"


@dataclass(frozen=True)
class BivariateGammaParams:
    """
    Shape q and scale set P = {p1, p2, p12} of G(q, P).

    The law is defined by its Laplace transform
    (1 + p1 s1 + p2 s2 + p12 s1 s2)^(-q); the marginals are Gamma(q, p1)
    and Gamma(q, p2).
    """

    q: float
    p1: float
    p2: float
    p12: float

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError(f"shape q must be positive, got {self.q}")
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError(f"scales p1, p2 must be positive, got p1={self.p1}, p2={self.p2}")
        if self.p12 <= 0:
            raise DegenerateCovarianceError(f"p12 must be positive, got {self.p12}")
        if self.p12 > self.p1 * self.p2 * (1.0 + 1e-12):
            raise ValueError(f"p12={self.p12} exceeds p1 * p2={self.p1 * self.p2}")

    @property
    def c(self) -> float:
        return max((self.p1 * self.p2 - self.p12) / self.p12 ** 2, 0.0)

    @property
    def means(self) -> Tuple[float, float]:
        return self.q * self.p1, self.q * self.p2

    def swapped(self) -> "BivariateGammaParams":
        """Parameters of (t1, t0)."""
        return BivariateGammaParams(q=self.q, p1=self.p2, p2=self.p1, p12=self.p12)

    def marginal_upper(self, tail: float = TAIL_PROBABILITY) -> Tuple[float, float]:
        """Upper (1 - tail) quantiles of both marginals; the integration box."""
        return (float(stats.gamma.isf(tail, self.q, scale=self.p1)),
                float(stats.gamma.isf(tail, self.q, scale=self.p2)))

    def laplace_transform(self, s1: float, s2: float) -> float:
        return float((1.0 + self.p1 * s1 + self.p2 * s2 + self.p12 * s1 * s2) ** (-self.q))


def params_from_pair(sigma, p: int) -> BivariateGammaParams:
    """
    G(q, P) of the diagonal of a p-sample 2x2 Wishart matrix with scale `sigma`.

    q = p/2, p1 = 2 s11, p2 = 2 s22, p12 = 4 (s11 s22 - s12^2).

    Raises:
        DegenerateCovarianceError: if `sigma` is singular
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError(f"pair covariance must be 2x2, got {sigma.shape}")
    if p < 1:
        raise ValueError(f"window length must be at least 1, got {p}")
    s11, s22, s12 = float(sigma[0, 0]), float(sigma[1, 1]), float(sigma[0, 1])
    if s11 <= 0 or s22 <= 0:
        raise ValueError(f"variances must be positive, got {s11}, {s22}")
    p12 = 4.0 * (s11 * s22 - s12 * s12)
    if p12 <= DEGENERACY_TOLERANCE * 4.0 * s11 * s22:
        raise DegenerateCovarianceError(
            f"pair covariance is singular (p12={p12:.3e}); the law has no density")
    return BivariateGammaParams(q=p / 2.0, p1=2.0 * s11, p2=2.0 * s22, p12=p12)


def params_from_covariance(model: CovarianceModel) -> BivariateGammaParams:
    """Gamma parameters from the per-pair covariance of `model` and its window length."""
    return params_from_pair(model.pair_covariance, model.samples)


@lru_cache(maxsize=128)
def _series_denominators(q: float, size: int) -> np.ndarray:
    k = np.arange(size, dtype=float)
    table = special.gammaln(k + 1.0) + special.gammaln(q + k)
    table.setflags(write=False)
    return table


def kibble_log_series(q: float, z: float) -> float:
    """
    log f_q(z), f_q(z) = sum_k z^k / (k! Gamma(q + k)), summed in the log domain.

    Terms are added in blocks until the last one, past the peak, drops below
    1e-18 of the running sum.

    Raises:
        QuadratureError: if the term cap is reached first
    """
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if z < 0:
        raise ValueError(f"series argument must be non-negative, got {z}")
    if z == 0:
        return -math.lgamma(q)

    log_z = math.log(z)
    cutoff = math.log(SERIES_RELATIVE_CUTOFF)
    size = _SERIES_BLOCK
    while True:
        terms = np.arange(size) * log_z - _series_denominators(q, size)
        top = float(terms.max())
        total = top + math.log(float(np.exp(terms - top).sum()))
        if terms[-1] < terms[-2] and terms[-1] < total + cutoff:
            return total
        if size >= SERIES_TERM_CAP:
            raise QuadratureError(f"series for q={q}, z={z:.6g} did not converge within {SERIES_TERM_CAP} terms")
        size = min(2 * size, SERIES_TERM_CAP)


def kibble_log_bessel(q: float, z: float) -> float:
    """log f_q(z) through f_q(z) = z^(-(q-1)/2) I_(q-1)(2 sqrt(z))."""
    if z < 0:
        raise ValueError(f"series argument must be non-negative, got {z}")
    if z == 0:
        return -math.lgamma(q)
    x = 2.0 * math.sqrt(z)
    return -0.5 * (q - 1.0) * math.log(z) + math.log(special.ive(q - 1.0, x)) + x


class _LogDensity:
    """Scalar log f(t0, t1) with the parameter-only terms folded in once."""

    def __init__(self, params: BivariateGammaParams):
        self.q = params.q
        self.c = params.c
        self.rate0 = params.p2 / params.p12
        self.rate1 = params.p1 / params.p12
        self.offset = -params.q * math.log(params.p12) - math.lgamma(params.q)

    def __call__(self, t0: float, t1: float) -> float:
        if t0 < 0 or t1 < 0:
            raise ValueError(f"density arguments must be non-negative, got ({t0}, {t1})")
        value = -self.rate0 * t0 - self.rate1 * t1 + self.offset
        value += float(special.xlogy(self.q - 1.0, t0)) + float(special.xlogy(self.q - 1.0, t1))
        return value + kibble_log_series(self.q, self.c * t0 * t1)


def log_density(params: BivariateGammaParams, t0, t1):
    """Log-density of G(q, P); broadcasts over array arguments."""
    log_f = _LogDensity(params)
    if np.ndim(t0) == 0 and np.ndim(t1) == 0:
        return log_f(float(t0), float(t1))
    return np.vectorize(log_f, otypes=[float])(t0, t1)


def density(params: BivariateGammaParams, t0, t1):
    """
    Joint density f(t0, t1) of G(q, P).

    f = exp(-(p2 t0 + p1 t1)/p12) (t0 t1)^(q-1) / (p12^q Gamma(q)) f_q(c t0 t1)

    Args:
        params: Shape and scale set
        t0, t1: Non-negative evaluation points (scalars or broadcastable arrays)

    Returns:
        Density value(s)
    """
    return np.exp(log_density(params, t0, t1))


def _breakpoints(lower: float, upper: float) -> List[float]:
    return list(lower + (upper - lower) * _BREAKPOINTS)


def _integrate_2d(integrand: Callable[[float, float], float], outer: Tuple[float, float],
                  inner_upper: Callable[[float], float]) -> Tuple[float, float]:
    """
    Nested adaptive quadrature of integrand(x, y) over y in `outer`, x in [0, inner_upper(y)].

    Both levels split their range at geometric breakpoints toward the lower
    end so mass concentrated near an edge is never skipped by the first rule.
    """
    def line(y: float) -> float:
        upper = inner_upper(y)
        if upper <= 0:
            return 0.0
        value, _ = integrate.quad(integrand, 0.0, upper, args=(y,), points=_breakpoints(0.0, upper),
                                  epsabs=INNER_EPSABS, epsrel=INNER_EPSREL, limit=QUAD_LIMIT)
        return value

    lower, upper = outer
    if upper <= lower:
        return 0.0, 0.0

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(line, lower, upper, points=_breakpoints(lower, upper),
                                      epsabs=OUTER_EPSABS, epsrel=OUTER_EPSREL, limit=QUAD_LIMIT)
    if caught:
        logger.warning(f"Quadrature over [{lower:.4g}, {upper:.4g}] reported {len(caught)} warning(s): "
                       f"{caught[0].message}")
    if not np.isfinite(value) or error > MAX_QUADRATURE_ERROR:
        raise QuadratureError(f"quadrature over [{lower:.4g}, {upper:.4g}] returned {value} "
                              f"with error estimate {error:.3e}")
    return float(value), float(error)


def _wedge_probability(params: BivariateGammaParams, lower: float, upper: float) -> float:
    """
    P(lower <= t1 < upper, t0 > t1) in the shifted variables u = t0 - t1 >= 0.

    The infinite ranges stop at the marginal quantiles of `marginal_upper`.
    """
    u0, u1 = params.marginal_upper()
    upper = min(upper, u1)
    if upper <= lower:
        return 0.0
    log_f = _LogDensity(params)

    def integrand(u: float, t1: float) -> float:
        return math.exp(log_f(u + t1, t1))

    value, _ = _integrate_2d(integrand, (lower, upper), lambda t1: u0 - t1)
    return value


def error_probability(i: Hypothesis, params_j: BivariateGammaParams, t_p: float) -> float:
    """
    P(H_i | H_j): mass of decision region i under the law of hypothesis j.

    H0 and H2 are the strips t1 < T_p and t1 > T_p of the wedge t0 > t1;
    H1 and H3 are the same strips of the mirrored wedge, integrated with the
    swapped parameters.
    """
    if t_p <= 0:
        raise ValueError(f"threshold must be positive, got {t_p}")
    i = Hypothesis(i)
    params = params_j.swapped() if i.channel_change else params_j
    lower, upper = (t_p, math.inf) if i.double_talk else (0.0, t_p)
    return min(max(_wedge_probability(params, lower, upper), 0.0), 1.0)


@dataclass(eq=False)
class ConfusionMatrix:
    """
    entries[i, j] = P(H_i | H_j); columns are true hypotheses.

    A degenerate matrix (c_x^2 = 0 in theory) holds NaN entries.
    """

    entries: np.ndarray
    source: Source
    stderr: Optional[np.ndarray] = None
    degenerate: bool = False

    def probability(self, decided: Hypothesis, true: Hypothesis) -> float:
        return float(self.entries[int(decided), int(true)])

    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def is_column_stochastic(self, tolerance: float = 1e-3) -> bool:
        if self.degenerate:
            return False
        return bool(np.all(np.abs(self.column_sums() - 1.0) <= tolerance))


def confusion_theory(noise: NoisePowers, cx2: float, p: int) -> ConfusionMatrix:
    """
    Confusion matrix from the bivariate gamma law of each hypothesis.

    Args:
        noise: Noise and double-talk powers
        cx2: Difference-filter output power c_x^2
        p: Window length

    Returns:
        ConfusionMatrix with source THEORY; flagged degenerate when cx2 == 0
    """
    if cx2 < 0:
        raise ValueError(f"cx2 must be non-negative, got {cx2}")
    if cx2 == 0:
        logger.warning("c_x^2 = 0: the statistic has no density, theory entries are undefined")
        return ConfusionMatrix(entries=np.full((4, 4), np.nan), source=Source.THEORY, degenerate=True)

    t_p = threshold(noise, p).scaled
    entries = np.empty((4, 4))
    for j in Hypothesis:
        sigma = build_covariance(j, cx2, noise, 1).pair_covariance
        params = params_from_pair(sigma, p)
        for i in Hypothesis:
            entries[i, j] = error_probability(i, params, t_p)
    logger.debug(f"Theory confusion for cx2={cx2}, p={p}: column sums {entries.sum(axis=0)}")
    return ConfusionMatrix(entries=entries, source=Source.THEORY)


def sample_wishart_diagonal(sigma, p: int, size: int, rng: SeedLike) -> np.ndarray:
    """
    Draw diag(sum_k z_k z_k') for p iid z_k ~ N(0, sigma), sigma 2x2.

    Returns:
        Array (size, 2) of (t0, t1) pairs
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError(f"pair covariance must be 2x2, got {sigma.shape}")
    if p < 1 or size < 0:
        raise ValueError(f"need p >= 1 and size >= 0, got p={p}, size={size}")
    factor = symmetric_factor(sigma)
    rng = make_rng(rng)
    z = rng.standard_normal((size, p, 2)) @ factor.T
    return np.einsum("nkc,nkc->nc", z, z)


def _window_sampler(hypothesis: Hypothesis, hx: np.ndarray, noise: NoisePowers, p: int,
                    mode: McMode) -> Callable[[int, np.random.Generator], Tuple[np.ndarray, np.ndarray]]:
    """Sampler of (t0, t1) batches under `hypothesis`."""
    if mode is McMode.IID_PAIRS:
        pair = build_covariance(hypothesis, hx[:1, :1], noise, 1).pair_covariance

        def draw_pairs(size: int, rng: np.random.Generator):
            draws = sample_wishart_diagonal(pair, p, size, rng)
            return draws[:, 0], draws[:, 1]
        return draw_pairs

    factor = symmetric_factor(build_covariance(hypothesis, hx, noise, p).matrix)

    def draw_stacked(size: int, rng: np.random.Generator):
        z = rng.standard_normal((size, 2 * p)) @ factor.T
        return np.einsum("nk,nk->n", z[:, :p], z[:, :p]), np.einsum("nk,nk->n", z[:, p:], z[:, p:])
    return draw_stacked


def confusion_mc(noise: NoisePowers, hx, p: int, mode, runs: int, rng_seed: SeedLike) -> ConfusionMatrix:
    """
    Monte Carlo confusion matrix.

    For every true hypothesis j, draws `runs` windows, classifies each with the
    exact rule and reports relative frequencies with binomial standard errors.

    Args:
        noise: Noise and double-talk powers
        hx: p x p difference-filter autocovariance, or the scalar c_x^2
            (iid_pairs mode, or p = 1)
        p: Window length
        mode: McMode or its string value
        runs: Draws per true hypothesis
        rng_seed: Seed; hypothesis j uses the j-th spawned child stream
    """
    mode = McMode(mode)
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    if np.ndim(hx) == 0:
        if mode is McMode.CORRELATED and p > 1:
            raise ValueError("correlated mode needs the full p x p hx matrix")
        hx = float(hx) * np.eye(p)
    hx = np.atleast_2d(np.asarray(hx, dtype=float))

    thr = threshold(noise, p)
    counts = np.zeros((4, 4))
    seeds = spawn_seeds(rng_seed, 4)
    for j in Hypothesis:
        draw = _window_sampler(j, hx, noise, p, mode)
        rng = make_rng(seeds[j])
        for start in range(0, runs, _MC_BATCH):
            t0, t1 = draw(min(_MC_BATCH, runs - start), rng)
            counts[:, j] += np.bincount(classify_many(t0, t1, thr), minlength=4)

    entries = counts / runs
    stderr = np.sqrt(entries * (1.0 - entries) / runs)
    logger.debug(f"MC confusion ({mode.value}, p={p}, runs={runs}) done")
    return ConfusionMatrix(entries=entries, source=Source.MONTE_CARLO, stderr=stderr)


def cdf(params: BivariateGammaParams, t0: float, t1: float) -> float:
    """P(T0 <= t0, T1 <= t1) by numerical integration of the density."""
    if t0 <= 0 or t1 <= 0:
        return 0.0
    u0, u1 = params.marginal_upper()
    box0, box1 = min(t0, u0), min(t1, u1)
    log_f = _LogDensity(params)
    value, _ = _integrate_2d(lambda x, y: math.exp(log_f(x, y)), (0.0, box1), lambda y: box0)
    return min(max(value, 0.0), 1.0)


def expect(params: BivariateGammaParams, weight: Optional[Callable[[float, float], float]] = None) -> float:
    """Integral of weight(t0, t1) f(t0, t1) over the truncated support; total mass without a weight."""
    u0, u1 = params.marginal_upper()
    log_f = _LogDensity(params)
    if weight is None:
        def integrand(x: float, y: float) -> float:
            return math.exp(log_f(x, y))
    else:
        def integrand(x: float, y: float) -> float:
            return weight(x, y) * math.exp(log_f(x, y))
    value, _ = _integrate_2d(integrand, (0.0, u1), lambda y: u0)
    return value


@dataclass
class MonteCarloSettings:
    """
    Monte Carlo part of a sweep.

    In correlated mode `channels` and `rho` fix the input statistics. Along a
    c_x^2 grid the input variance is solved per grid point so that c_x^2 hits
    the grid value; along an input-variance grid c_x^2 follows from the
    variance. Every value in `rho` is swept.
    """

    runs: int
    seed: int
    mode: McMode = McMode.IID_PAIRS
    channels: Optional[Tuple[Channel, Channel]] = None
    rho: Tuple[float, ...] = (0.5,)

    def __post_init__(self):
        self.mode = McMode(self.mode)
        self.rho = tuple(float(r) for r in np.atleast_1d(self.rho))
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")
        if self.mode is McMode.CORRELATED and self.channels is None:
            raise ValueError("correlated mode needs a channel pair")
        if not self.rho or any(not 0.0 <= r < 1.0 for r in self.rho):
            raise ValueError(f"rho values must lie in [0, 1), got {list(self.rho)}")


@dataclass(frozen=True)
class CurveRecord:
    """One confusion entry of one sweep grid point; rho and input_variance are set in correlated mode."""

    cx2: float
    p: int
    sigma0_sq: float
    sigma1_sq: float
    source: Source
    i: int
    j: int
    value: float
    stderr: Optional[float] = None
    rho: Optional[float] = None
    input_variance: Optional[float] = None


@dataclass(frozen=True)
class SweepPoint:
    index: int
    noise: NoisePowers
    cx2: float
    p: int
    rho: Optional[float] = None
    input_variance: Optional[float] = None


def _records(matrix: ConfusionMatrix, point: SweepPoint) -> List[CurveRecord]:
    records = []
    for j, i in product(range(4), range(4)):
        stderr = None if matrix.stderr is None else float(matrix.stderr[i, j])
        records.append(CurveRecord(cx2=float(point.cx2), p=int(point.p), sigma0_sq=point.noise.sigma0_sq,
                                   sigma1_sq=point.noise.sigma1_sq, source=matrix.source, i=i, j=j,
                                   value=matrix.probability(Hypothesis(i), Hypothesis(j)), stderr=stderr,
                                   rho=point.rho, input_variance=point.input_variance))
    return records


def _correlated_hx(settings: MonteCarloSettings, point: SweepPoint) -> np.ndarray:
    h0, h1 = settings.channels
    if point.input_variance == 0:
        return np.zeros((point.p, point.p))
    return build_hx(h0, h1, Ar1Input(point.input_variance, point.rho, h0.length), point.p)


def _sweep_point(point: SweepPoint, include_theory: bool,
                 monte_carlo: Optional[MonteCarloSettings]) -> List[CurveRecord]:
    records = []
    if include_theory:
        records.extend(_records(confusion_theory(point.noise, point.cx2, point.p), point))
    if monte_carlo is not None:
        if monte_carlo.mode is McMode.CORRELATED:
            hx = _correlated_hx(monte_carlo, point)
        else:
            hx = point.cx2
        matrix = confusion_mc(point.noise, hx, point.p, monte_carlo.mode, monte_carlo.runs,
                              keyed_seed(monte_carlo.seed, point.index))
        records.extend(_records(matrix, point))
    logger.info(f"Sweep point {point.index}: sigma0^2={point.noise.sigma0_sq}, sigma1^2={point.noise.sigma1_sq}, "
                f"cx2={point.cx2:.6g}, p={point.p}"
                + ("" if point.rho is None else f", rho={point.rho}, sigma_x^2={point.input_variance:.6g}"))
    return records


def _run_points(points: List[SweepPoint], include_theory: bool, monte_carlo: Optional[MonteCarloSettings],
                jobs: int) -> List[CurveRecord]:
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    worker = partial(_sweep_point, include_theory=include_theory, monte_carlo=monte_carlo)
    logger.info(f"Sweeping {len(points)} grid points with {jobs} job(s)")

    if jobs == 1:
        results = [worker(point) for point in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, points))
    return [record for chunk in results for record in chunk]


def curve_sweep(noise_levels: Sequence[NoisePowers], cx2_grid: Sequence[float], p_list: Sequence[int],
                include_theory: bool = True, monte_carlo: Optional[MonteCarloSettings] = None,
                jobs: int = 1) -> List[CurveRecord]:
    """
    Confusion entries over the grid noise_levels x cx2_grid x p_list.

    In correlated mode every rho of the Monte Carlo settings adds a grid
    axis (between noise levels and c_x^2). Grid point k draws its Monte Carlo
    stream from (seed, k), so the records do not depend on `jobs`. Records
    come back in grid order.

    Args:
        noise_levels: Noise/double-talk power pairs to sweep
        cx2_grid: c_x^2 values
        p_list: Window lengths
        include_theory: Emit quadrature entries
        monte_carlo: Emit Monte Carlo entries with these settings
        jobs: Worker processes; 1 runs in-process

    Returns:
        List of CurveRecord, 16 per source per grid point
    """
    if not noise_levels or not cx2_grid or not p_list:
        raise ValueError("noise levels, cx2 grid and p list must all be non-empty")
    if not include_theory and monte_carlo is None:
        raise ValueError("nothing to compute: enable theory or Monte Carlo")

    correlated = monte_carlo is not None and monte_carlo.mode is McMode.CORRELATED
    rho_values = monte_carlo.rho if correlated else (None,)
    points = []
    for index, (noise, rho, cx2, p) in enumerate(product(noise_levels, rho_values, cx2_grid, p_list)):
        variance = None
        if correlated:
            h0, h1 = monte_carlo.channels
            variance = solve_input_variance(float(cx2), rho, h0, h1)
        points.append(SweepPoint(index, noise, float(cx2), int(p), rho, variance))
    return _run_points(points, include_theory, monte_carlo, jobs)


def input_variance_sweep(noise_levels: Sequence[NoisePowers], variance_grid: Sequence[float],
                         p_list: Sequence[int], monte_carlo: MonteCarloSettings,
                         include_theory: bool = False, jobs: int = 1) -> List[CurveRecord]:
    """
    Correlated Monte Carlo confusion entries along the AR-1 input variance.

    The grid is noise_levels x rho x variance_grid x p_list; each point
    builds H_x from the channel pair and the AR-1 input (sigma_x^2, rho), and
    records the resulting c_x^2 next to the variance. Theory entries, when
    requested, use that c_x^2 under the independence approximation.

    Args:
        noise_levels: Noise/double-talk power pairs to sweep
        variance_grid: Input variances sigma_x^2 >= 0
        p_list: Window lengths
        monte_carlo: Settings in correlated mode
        include_theory: Also emit quadrature entries
        jobs: Worker processes; 1 runs in-process

    Returns:
        List of CurveRecord with rho and input_variance set
    """
    if not noise_levels or not variance_grid or not p_list:
        raise ValueError("noise levels, variance grid and p list must all be non-empty")
    if monte_carlo.mode is not McMode.CORRELATED:
        raise ValueError("an input-variance sweep needs correlated Monte Carlo settings")
    if any(v < 0 for v in variance_grid):
        raise ValueError(f"input variances must be non-negative, got {list(variance_grid)}")

    h0, h1 = monte_carlo.channels
    points = []
    grid = product(noise_levels, monte_carlo.rho, variance_grid, p_list)
    for index, (noise, rho, variance, p) in enumerate(grid):
        cx2 = difference_power(h0, h1, Ar1Input(float(variance), rho, h0.length))
        points.append(SweepPoint(index, noise, cx2, int(p), rho, float(variance)))
    return _run_points(points, include_theory, monte_carlo, jobs)
