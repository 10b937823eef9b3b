"""
Basic eclab Usage Example

This example classifies a few error windows, then compares the exact
confusion matrix with a Monte Carlo estimate for one operating point.
"""

import logging
import sys
import os

import numpy as np

# Add the src directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from eclab.classifier import classify, compute_statistic, threshold
from eclab.gamma_analysis import confusion_mc, confusion_theory
from eclab.signal_models import Hypothesis, NoisePowers, build_covariance, sample_error_vector

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def basic_usage_example(seed: int = 1):
    """Classify sampled windows and compare theory with Monte Carlo."""

    noise = NoisePowers(sigma0_sq=0.001, sigma1_sq=1.0)
    p = 32
    cx2 = 2.0

    thr = threshold(noise, p)
    logger.info(f"Threshold T = {thr.base:.6g}, T_p = {thr.scaled:.6g}")

    # One window per hypothesis
    for hypothesis in Hypothesis:
        model = build_covariance(hypothesis, cx2 * np.eye(p), noise, p)
        z = sample_error_vector(model, [seed, int(hypothesis)])
        stat = compute_statistic(z[:p], z[p:])
        decided = classify(stat, thr)
        logger.info(f"True {hypothesis.name} ({hypothesis.description}): "
                    f"t0={stat.t0:.4g}, t1={stat.t1:.4g} -> {decided.name}")

    logger.info("Computing the exact confusion matrix...")
    theory = confusion_theory(noise, cx2, p)
    logger.info("Estimating the same matrix by Monte Carlo...")
    mc = confusion_mc(noise, cx2, p, "iid_pairs", 20000, seed)

    logger.info("P(decided | true), theory vs Monte Carlo:")
    for i in Hypothesis:
        cells = "  ".join(f"{theory.entries[i, j]:.4f}/{mc.entries[i, j]:.4f}" for j in Hypothesis)
        logger.info(f"  {i.name}: {cells}")

    logger.info("Basic usage example completed successfully!")
    return theory, mc


if __name__ == "__main__":
    basic_usage_example()
