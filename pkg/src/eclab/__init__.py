"""
eclab - Echo Canceler Control Lab

Decision-theoretic double-talk / channel-change classification for
shadow-filter echo cancelers: the classifier, its exact and Monte Carlo
error analysis, the canceler control loop, and experiment tooling.
"""

__version__ = "1.0.0"

from .canceler import AdaptiveFilter, CancelerTrace, ControlConfig, EchoCanceler, nlms_step, run_canceler
from .classifier import SufficientStatistic, classify, compute_statistic, threshold
from .errors import ConfigError, DegenerateCovarianceError, EclabError, InputError, NumericalError, QuadratureError
from .gamma_analysis import (
    BivariateGammaParams,
    ConfusionMatrix,
    confusion_mc,
    confusion_theory,
    curve_sweep,
    input_variance_sweep,
    density,
    error_probability,
    params_from_covariance,
)
from .signal_models import Hypothesis, NoisePowers, ScenarioConfig, build_covariance, generate_scenario

__all__ = [
    "AdaptiveFilter",
    "BivariateGammaParams",
    "CancelerTrace",
    "ConfigError",
    "ConfusionMatrix",
    "ControlConfig",
    "DegenerateCovarianceError",
    "EchoCanceler",
    "EclabError",
    "InputError",
    "Hypothesis",
    "NoisePowers",
    "NumericalError",
    "QuadratureError",
    "ScenarioConfig",
    "SufficientStatistic",
    "build_covariance",
    "classify",
    "compute_statistic",
    "confusion_mc",
    "confusion_theory",
    "curve_sweep",
    "density",
    "error_probability",
    "input_variance_sweep",
    "generate_scenario",
    "nlms_step",
    "params_from_covariance",
    "run_canceler",
    "threshold",
]
