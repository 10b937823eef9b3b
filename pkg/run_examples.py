#!/usr/bin/env python3
"""
eclab - Example Runner

This script runs the eclab examples.
"""

import sys
import os
import argparse
import logging

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from eclab import ControlConfig, EchoCanceler, NoisePowers

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def run_basic_example(seed: int):
    """Run the basic usage example."""
    logger.info("Running basic usage example...")

    from examples.basic_usage import basic_usage_example
    basic_usage_example(seed)


def run_synthetic_example(seed: int, gain_db: float):
    """Run the synthetic canceler experiment."""
    logger.info("Running synthetic experiment...")

    from examples.synthetic_experiment import synthetic_experiment
    synthetic_experiment(gain_db=gain_db, seed=seed)


def run_status_check():
    """Show the state of a freshly built canceler."""
    logger.info("Running status check...")

    canceler = EchoCanceler(1024, ControlConfig(), NoisePowers(0.001, 1.0))
    status = canceler.get_status()
    logger.info("Canceler Status:")
    for key, value in status.items():
        logger.info(f"  {key}: {value}")


def main():
    """Main function."""
    parser = argparse.ArgumentParser(description='eclab Examples')
    parser.add_argument('example', choices=['basic', 'synthetic', 'status'],
                        help='Example to run')
    parser.add_argument('--seed', type=int, default=11,
                        help='Random seed')
    parser.add_argument('--gain-db', type=float, default=-10.0,
                        help='Echo-path gain for the synthetic example')
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='Enable verbose logging')

    args = parser.parse_args()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    logger.info("eclab Examples")
    logger.info("=" * 50)

    if args.example == 'basic':
        run_basic_example(args.seed)
    elif args.example == 'synthetic':
        run_synthetic_example(args.seed, args.gain_db)
    elif args.example == 'status':
        run_status_check()

    logger.info("Example completed!")


if __name__ == "__main__":
    main()
