"""
eclab command line

    eclab <subcommand> --config FILE [--seed S] [--out DIR] [--jobs K] [-v]

Exit codes:
    0  success
    2  configuration or input problem: ConfigError, InputError, OSError and
       argument ValueErrors raised by the library
    3  numerical failure: NumericalError (singular covariance, quadrature
       that misses its tolerance), numpy LinAlgError, FloatingPointError
"""

import dataclasses
import logging
import sys
from typing import Optional

import click
import numpy as np

from . import __version__
from .config import ExperimentKind, load_config
from .errors import ConfigError, InputError, NumericalError
from .experiment import run

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# checked in this order: LinAlgError is also a ValueError
NUMERICAL_FAILURES = (NumericalError, np.linalg.LinAlgError, FloatingPointError)
INPUT_FAILURES = (ConfigError, InputError, ValueError, OSError)


def exit_code_for(exc: BaseException) -> Optional[int]:
    """Exit status for an exception that ends a run; None when it should propagate."""
    if isinstance(exc, NUMERICAL_FAILURES):
        return EXIT_NUMERICAL
    if isinstance(exc, INPUT_FAILURES):
        return EXIT_CONFIG
    return None


def _common_options(command):
    command = click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")(command)
    command = click.option("--jobs", type=click.IntRange(min=1), default=1, envvar="ECLAB_JOBS",
                           show_default=True, help="Worker processes for sweeps (env: ECLAB_JOBS)")(command)
    command = click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                           help="Output directory (overrides the config)")(command)
    command = click.option("--seed", type=int, default=None, help="Root seed (overrides the config)")(command)
    command = click.option("--config", "config_path", required=True,
                           type=click.Path(exists=True, dir_okay=False), help="Experiment YAML file")(command)
    return command


def _execute(kind: ExperimentKind, config_path: str, seed: Optional[int], out: Optional[str],
             jobs: int, verbose: bool):
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = load_config(config_path)
        if config.experiment is not None and config.experiment is not kind:
            raise ConfigError(f"experiment: {config_path} describes {config.experiment.value}, "
                              f"not {kind.value}")
        config = dataclasses.replace(config, experiment=kind,
                                     seed=config.seed if seed is None else seed,
                                     output=config.output if out is None else out)
        result = run(config, jobs=jobs)
    except Exception as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        if code == EXIT_NUMERICAL:
            logger.error(f"{kind.value} failed with a numerical error: {exc}")
        else:
            logger.error(f"{kind.value} failed: {exc}")
        sys.exit(code)

    for path in result.outputs + [result.manifest]:
        click.echo(str(path))


@click.group()
@click.version_option(__version__, prog_name="eclab")
def cli():
    """
    Echo canceler control lab: DT/CC classification analysis and simulation.

    Exit status 2 means a configuration or input problem, 3 a numerical failure.
    """


@cli.command("theory-curves")
@_common_options
def theory_curves(config_path, seed, out, jobs, verbose):
    """Confusion entries from the bivariate gamma law over the c_x^2 x p grid."""
    _execute(ExperimentKind.THEORY_CURVES, config_path, seed, out, jobs, verbose)


@cli.command("mc-curves")
@_common_options
def mc_curves(config_path, seed, out, jobs, verbose):
    """Monte Carlo confusion entries, optionally next to the theory."""
    _execute(ExperimentKind.MC_CURVES, config_path, seed, out, jobs, verbose)


@cli.command("simulate")
@_common_options
def simulate(config_path, seed, out, jobs, verbose):
    """Run the canceler on the synthetic echo scenario."""
    _execute(ExperimentKind.SIMULATE, config_path, seed, out, jobs, verbose)


@cli.command("classify")
@_common_options
def classify(config_path, seed, out, jobs, verbose):
    """Classify a statistics file, or run the canceler on signal files."""
    _execute(ExperimentKind.CLASSIFY_STREAM, config_path, seed, out, jobs, verbose)


def main():
    cli(prog_name="eclab")


if __name__ == "__main__":
    main()
