"""
Experiment Runner

Dispatches a validated ExperimentConfig to the curve sweep, the synthetic
canceler simulation or stream classification, and writes the CSV outputs
and the run manifest.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from .canceler import CancelerTrace, run_canceler
from .classifier import classify_many
from .config import ExperimentConfig, ExperimentKind, validate
from .errors import ConfigError
from .gamma_analysis import CurveRecord, Source, curve_sweep, input_variance_sweep
from .io_utils import (
    read_pcm_pair,
    read_signal_csv,
    read_statistics_csv,
    write_curve_csv,
    write_decisions_csv,
    write_manifest,
    write_signals_csv,
    write_trace_csv,
)
from .signal_models import ScenarioSignals, generate_scenario

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"
GUARD_WINDOWS = 5


@dataclass
class RunResult:
    kind: ExperimentKind
    outputs: List[Path]
    manifest: Path
    summary: Dict[str, Any] = field(default_factory=dict)


def scored_instants(trace: CancelerTrace, signals: ScenarioSignals,
                    guard_windows: int = GUARD_WINDOWS) -> np.ndarray:
    """
    Test instants outside the guard windows.

    Instants within `guard_windows` test intervals after an event (signal
    start, channel change, double-talk edge) are left out.
    """
    instants = trace.test_instants()
    span = guard_windows * trace.test_interval
    keep = np.ones(instants.size, dtype=bool)
    for event in [0] + signals.events:
        keep &= ~((instants >= event) & (instants < event + span))
    return instants[keep]


def class_agreement(trace: CancelerTrace, signals: ScenarioSignals, guard_windows: int = GUARD_WINDOWS) -> float:
    """Fraction of scored test instants whose decided class equals the true class; NaN if none are scored."""
    instants = scored_instants(trace, signals, guard_windows)
    if instants.size == 0:
        return float("nan")
    return float(np.mean(trace.hypothesis[instants] == signals.true_class[instants]))


def talk_regime_agreement(trace: CancelerTrace, signals: ScenarioSignals,
                          guard_windows: int = GUARD_WINDOWS) -> float:
    """Same as `class_agreement`, comparing only the double-talk flag."""
    instants = scored_instants(trace, signals, guard_windows)
    if instants.size == 0:
        return float("nan")
    return float(np.mean((trace.hypothesis[instants] >= 2) == (signals.true_class[instants] >= 2)))


def _entry_key(record: CurveRecord) -> Tuple:
    return (record.sigma0_sq, record.sigma1_sq, record.rho, record.input_variance, record.cx2, record.p,
            record.i, record.j)


def _max_theory_gap(records: List[CurveRecord]) -> float:
    theory = {_entry_key(r): r.value for r in records if r.source is Source.THEORY}
    gaps = [abs(r.value - theory[_entry_key(r)]) for r in records
            if r.source is Source.MONTE_CARLO and _entry_key(r) in theory]
    finite = [g for g in gaps if np.isfinite(g)]
    return float(max(finite)) if finite else float("nan")


def _theory_curves(config: ExperimentConfig, out_dir: Path, jobs: int) -> Tuple[List[Path], Dict[str, Any]]:
    records = curve_sweep(config.noise_levels(), config.analysis.cx2_grid, config.analysis.p_list,
                          include_theory=True, monte_carlo=None, jobs=jobs)
    path = write_curve_csv(out_dir / "curves.csv", records)
    return [path], {"records": len(records)}


def _mc_curves(config: ExperimentConfig, out_dir: Path, jobs: int) -> Tuple[List[Path], Dict[str, Any]]:
    analysis = config.analysis
    if analysis.input_variance_grid:
        records = input_variance_sweep(config.noise_levels(), analysis.input_variance_grid, analysis.p_list,
                                       config.monte_carlo_settings(), include_theory=analysis.theory, jobs=jobs)
    else:
        records = curve_sweep(config.noise_levels(), analysis.cx2_grid, analysis.p_list,
                              include_theory=analysis.theory, monte_carlo=config.monte_carlo_settings(), jobs=jobs)
    path = write_curve_csv(out_dir / "curves.csv", records)
    summary = {"records": len(records)}
    if config.analysis.theory:
        summary["max_theory_gap"] = _max_theory_gap(records)
        logger.info(f"Largest |MC - theory| entry gap: {summary['max_theory_gap']:.4g}")
    return [path], summary


def _simulate(config: ExperimentConfig, out_dir: Path, jobs: int) -> Tuple[List[Path], Dict[str, Any]]:
    signals = generate_scenario(config.scenario_config(), config.seed)
    trace = run_canceler(signals, config.control, noise=config.noise_levels()[0])
    outputs = [write_trace_csv(out_dir / "trace.csv", trace)]
    if config.scenario.export_signals:
        outputs.append(write_signals_csv(out_dir / "signals.csv", signals))

    summary = {
        "samples": trace.length,
        "copies": int(trace.copy_instants().size),
        "class_agreement": class_agreement(trace, signals),
        "talk_regime_agreement": talk_regime_agreement(trace, signals),
    }
    logger.info(f"Agreement with the true class at test instants: {summary['class_agreement']:.3f} "
                f"(double-talk flag only: {summary['talk_regime_agreement']:.3f})")
    return outputs, summary


def _classify_stream(config: ExperimentConfig, out_dir: Path, jobs: int) -> Tuple[List[Path], Dict[str, Any]]:
    stream = config.stream
    noise = config.noise_levels()[0]
    if stream.source == "statistics":
        t0, t1 = read_statistics_csv(config.resolve(stream.statistics))
        thr = config.control.decision_threshold(noise)
        decisions = classify_many(t0, t1, thr)
        path = write_decisions_csv(out_dir / "decisions.csv", t0, t1, decisions)
        counts = np.bincount(decisions, minlength=4)
        return [path], {"statistics": int(t0.size), "counts": [int(c) for c in counts]}

    if stream.source == "signals":
        bundle = read_signal_csv(config.resolve(stream.signals))
    else:
        bundle = read_pcm_pair(config.resolve(stream.pcm_x), config.resolve(stream.pcm_y))
        logger.info(f"Read {bundle.x.size} PCM samples ({bundle.x.size / stream.sample_rate:.2f} s)")
    trace = run_canceler(bundle, config.control, noise=noise, filter_length=config.channels.length)
    path = write_trace_csv(out_dir / "trace.csv", trace)
    return [path], {"samples": trace.length, "copies": int(trace.copy_instants().size)}


_HANDLERS: Dict[ExperimentKind, Callable[[ExperimentConfig, Path, int], Tuple[List[Path], Dict[str, Any]]]] = {
    ExperimentKind.THEORY_CURVES: _theory_curves,
    ExperimentKind.MC_CURVES: _mc_curves,
    ExperimentKind.SIMULATE: _simulate,
    ExperimentKind.CLASSIFY_STREAM: _classify_stream,
}


def run(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    """
    Execute one experiment.

    Args:
        config: Experiment configuration; validated before anything is written
        jobs: Worker processes for the curve sweeps

    Returns:
        RunResult listing the written files and a short summary

    Raises:
        ConfigError: if `validate` reports any problem
    """
    problems = validate(config)
    if problems:
        raise ConfigError("configuration rejected", problems)

    kind = config.experiment
    out_dir = Path(config.output)
    logger.info(f"Running {kind.value} into {out_dir}")
    outputs, summary = _HANDLERS[kind](config, out_dir, jobs)
    manifest = write_manifest(out_dir / MANIFEST_NAME, kind.value, config.to_dict(), config.seed, outputs)
    logger.info(f"{kind.value} finished: {', '.join(p.name for p in outputs)}")
    return RunResult(kind=kind, outputs=outputs, manifest=manifest, summary=summary)
