"""
File formats

CSV writers for sweep curves, canceler traces, scenario signals and
decisions; readers for user-supplied statistics and signals; the YAML run
manifest. Numbers are written with 12 significant digits so reruns with the
same seed produce byte-identical files.
"""

import csv
import logging
import platform
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .canceler import CancelerTrace, SignalBundle
from .errors import InputError
from .gamma_analysis import CurveRecord
from .signal_models import Hypothesis, ScenarioSignals

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("cx2", "p", "sigma0_sq", "sigma1_sq", "source", "i", "j", "value", "stderr", "rho",
                 "input_variance")
TRACE_COLUMNS = ("n", "class", "mu", "se0_db", "se1_db", "copied")
SIGNAL_COLUMNS = ("n", "x", "y", "n0", "true_class")
DECISION_COLUMNS = ("t0", "t1", "class")
SIGNIFICANT_DIGITS = 12
PCM_SCALE = 32768.0

PathLike = Union[str, Path]


def format_value(value: Optional[float]) -> str:
    """Decimal text with 12 significant digits; 'nan' for NaN, empty for None."""
    if value is None:
        return ""
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return np.format_float_positional(value, precision=SIGNIFICANT_DIGITS, unique=False,
                                      fractional=False, trim="-")


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_curve_csv(path: PathLike, records: Sequence[CurveRecord]) -> Path:
    rows = ((format_value(r.cx2), r.p, format_value(r.sigma0_sq), format_value(r.sigma1_sq),
             r.source.value, r.i, r.j, format_value(r.value), format_value(r.stderr), format_value(r.rho),
             format_value(r.input_variance)) for r in records)
    return _write_rows(path, CURVE_COLUMNS, rows)


def write_trace_csv(path: PathLike, trace: CancelerTrace) -> Path:
    """Trace with the smoothed squared excess errors in dB."""
    se0_db = trace.smoothed_se_db(which=0)
    se1_db = trace.smoothed_se_db(which=1)
    names = [h.name for h in Hypothesis]
    rows = ((n, names[trace.hypothesis[n]], format_value(trace.mu[n]), format_value(se0_db[n]),
             format_value(se1_db[n]), int(trace.copied[n])) for n in range(trace.length))
    return _write_rows(path, TRACE_COLUMNS, rows)


def write_signals_csv(path: PathLike, signals: ScenarioSignals) -> Path:
    rows = ((n, format_value(signals.x[n]), format_value(signals.y[n]), format_value(signals.n0[n]),
             Hypothesis(int(signals.true_class[n])).name) for n in range(signals.length))
    return _write_rows(path, SIGNAL_COLUMNS, rows)


def write_decisions_csv(path: PathLike, t0: np.ndarray, t1: np.ndarray, decisions: np.ndarray) -> Path:
    rows = ((format_value(a), format_value(b), Hypothesis(int(c)).name) for a, b, c in zip(t0, t1, decisions))
    return _write_rows(path, DECISION_COLUMNS, rows)


def _read_columns(path: PathLike, required: Sequence[str], optional: Sequence[str] = ()) -> Dict[str, np.ndarray]:
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        header = [name.strip() for name in (reader.fieldnames or [])]
        missing = [name for name in required if name not in header]
        if missing:
            raise InputError(f"{path}: missing column(s) {', '.join(missing)}")
        wanted = [name for name in list(required) + list(optional) if name in header]
        columns: Dict[str, List[float]] = {name: [] for name in wanted}
        for line, row in enumerate(reader, start=2):
            row = {key.strip(): value for key, value in row.items() if key is not None}
            for name in wanted:
                try:
                    columns[name].append(float(row[name]))
                except (TypeError, ValueError):
                    raise InputError(f"{path}:{line}: column {name} is not a number ({row[name]!r})") from None
    return {name: np.asarray(values) for name, values in columns.items()}


def read_statistics_csv(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Columns t0, t1 of a statistics file."""
    columns = _read_columns(path, ("t0", "t1"))
    if np.any(columns["t0"] < 0) or np.any(columns["t1"] < 0):
        raise InputError(f"{path}: norms must be non-negative")
    return columns["t0"], columns["t1"]


def read_signal_csv(path: PathLike) -> SignalBundle:
    """Columns x, y and optionally n0."""
    columns = _read_columns(path, ("x", "y"), ("n0",))
    return SignalBundle(x=columns["x"], y=columns["y"], n0=columns.get("n0"))


def read_pcm16(path: PathLike) -> np.ndarray:
    """16-bit little-endian mono PCM scaled to [-1, 1)."""
    path = Path(path)
    if path.stat().st_size % 2:
        raise InputError(f"{path}: odd byte count, not 16-bit PCM")
    return np.fromfile(path, dtype="<i2").astype(float) / PCM_SCALE


def read_pcm_pair(x_path: PathLike, y_path: PathLike) -> SignalBundle:
    x = read_pcm16(x_path)
    y = read_pcm16(y_path)
    if x.size != y.size:
        raise InputError(f"PCM files differ in length: {x.size} != {y.size} samples")
    return SignalBundle(x=x, y=y)


def package_versions() -> Dict[str, str]:
    from . import __version__

    versions = {"eclab": __version__, "python": platform.python_version()}
    for dist in ("numpy", "scipy", "PyYAML", "click"):
        try:
            versions[dist.lower()] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            versions[dist.lower()] = "unknown"
    return versions


def write_manifest(path: PathLike, command: str, config: Dict[str, Any], seed: Optional[int],
                   outputs: Sequence[Path]) -> Path:
    """Run manifest: enough to rerun the command and check its outputs."""
    manifest = {
        "command": command,
        "seed": seed,
        "outputs": [Path(p).name for p in outputs],
        "versions": package_versions(),
        "config": config,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(manifest, sort_keys=True, default_flow_style=False))
    logger.info(f"Wrote manifest {path}")
    return path
