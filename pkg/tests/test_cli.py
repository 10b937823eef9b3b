"""
Tests for the eclab command line

Subcommand wiring, exit codes, written artifacts and rerun determinism.
"""

import pytest
import sys
import os
import csv
from pathlib import Path

import numpy as np
import yaml
from click.testing import CliRunner
from scipy import signal as sp_signal

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from eclab.cli import EXIT_CONFIG, EXIT_NUMERICAL, cli, exit_code_for
from eclab.errors import ConfigError, DegenerateCovarianceError, InputError, QuadratureError
from eclab.io_utils import read_pcm16

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
STREAM_CONTROL = {"test_interval": 256, "copy_delay": 128, "window": 32}
ECHO_TAPS = np.array([0.5, -0.3, 0.2, 0.1])


def _write(tmp_path: Path, name: str, data: dict) -> Path:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def _read_trace(path: Path) -> list:
    with path.open() as handle:
        return list(csv.DictReader(handle))


def _small_mc_config(tmp_path: Path) -> Path:
    return _write(tmp_path, "mc.yaml", {
        "experiment": "mc_curves",
        "seed": 5,
        "noise": {"sigma0_sq": 0.001, "sigma1_sq": 1.0},
        "analysis": {"cx2_grid": [0.5, 2.0], "p_list": [1, 4], "theory": False},
        "monte_carlo": {"runs": 2000, "mode": "iid_pairs"},
    })


class TestClassifyCommand:
    """Test the classify subcommand on the bundled statistics."""

    def test_expected_classes(self, tmp_path):
        """Each bundled statistic row lands in its quadrant."""
        runner = CliRunner()
        result = runner.invoke(cli, ["classify", "--config", str(CONFIG_DIR / "classify_stats.yaml"),
                                     "--out", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        with (tmp_path / "out" / "decisions.csv").open() as handle:
            classes = [row["class"] for row in csv.DictReader(handle)]
        assert classes == ["H0", "H1", "H2", "H3", "H1", "H0"]
        assert "decisions.csv" in result.output

    def test_manifest(self, tmp_path):
        """The manifest records the command, outputs and versions."""
        runner = CliRunner()
        runner.invoke(cli, ["classify", "--config", str(CONFIG_DIR / "classify_stats.yaml"),
                            "--out", str(tmp_path)])
        manifest = yaml.safe_load((tmp_path / "manifest.yaml").read_text())
        assert manifest["command"] == "classify_stream"
        assert manifest["outputs"] == ["decisions.csv"]
        assert "numpy" in manifest["versions"]
        assert manifest["config"]["noise"]["sigma0_sq"] == 0.001

    def test_kind_mismatch(self, tmp_path):
        """A simulate config refuses to run under classify."""
        runner = CliRunner()
        result = runner.invoke(cli, ["classify", "--config", str(CONFIG_DIR / "synthetic_g10.yaml"),
                                     "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestCurveCommands:
    """Test the sweep subcommands."""

    def test_empty_grid_writes_nothing(self, tmp_path):
        """An empty grid exits with status 2 before any file is written."""
        config = _write(tmp_path, "empty.yaml", {"experiment": "theory_curves", "analysis": {"cx2_grid": []}})
        out = tmp_path / "out"
        result = CliRunner().invoke(cli, ["theory-curves", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 2
        assert not out.exists()

    def test_missing_seed(self, tmp_path):
        """Monte Carlo without a seed is a configuration error."""
        config = _write(tmp_path, "noseed.yaml", {"experiment": "mc_curves", "analysis": {"theory": False}})
        result = CliRunner().invoke(cli, ["mc-curves", "--config", str(config), "--out", str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_seed_override_and_determinism(self, tmp_path):
        """Equal seeds write identical curves, whatever the job count."""
        config = _small_mc_config(tmp_path)
        runner = CliRunner()
        first = runner.invoke(cli, ["mc-curves", "--config", str(config), "--out", str(tmp_path / "a")])
        second = runner.invoke(cli, ["mc-curves", "--config", str(config), "--out", str(tmp_path / "b"),
                                     "--jobs", "2"])
        third = runner.invoke(cli, ["mc-curves", "--config", str(config), "--out", str(tmp_path / "c"),
                                    "--seed", "6"])
        assert first.exit_code == second.exit_code == third.exit_code == 0
        a = (tmp_path / "a" / "curves.csv").read_text()
        assert a == (tmp_path / "b" / "curves.csv").read_text()
        assert a != (tmp_path / "c" / "curves.csv").read_text()
        assert a.splitlines()[0] == "cx2,p,sigma0_sq,sigma1_sq,source,i,j,value,stderr,rho,input_variance"
        assert len(a.splitlines()) == 1 + 4 * 16

    def test_version(self):
        """--version prints the package version."""
        result = CliRunner().invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "eclab" in result.output


class TestSimulateCommand:
    """Test the simulate subcommand on a short scenario."""

    def test_short_run(self, tmp_path):
        """A short scenario writes a trace with one row per sample."""
        config = _write(tmp_path, "sim.yaml", {
            "experiment": "simulate",
            "seed": 3,
            "channels": {"gain_db": -10.0, "delays": [0, 4], "length": 32},
            "control": {"test_interval": 256, "copy_delay": 128, "window": 32},
            "scenario": {"boundaries": [2048, 4096], "segment_channels": [0, 1],
                         "segment_double_talk": [False, False], "settle_samples": 512,
                         "export_signals": True},
        })
        result = CliRunner().invoke(cli, ["simulate", "--config", str(config), "--out", str(tmp_path / "sim")])
        assert result.exit_code == 0, result.output
        trace = (tmp_path / "sim" / "trace.csv").read_text().splitlines()
        assert trace[0] == "n,class,mu,se0_db,se1_db,copied"
        assert len(trace) == 1 + 4096
        assert (tmp_path / "sim" / "signals.csv").exists()


class TestClassifySignals:
    """Test the classify subcommand on signal files."""

    def test_signal_csv(self, tmp_path):
        """A signal CSV drives the canceler: first test is H1, the copy brings H0 and mu0."""
        rng = np.random.default_rng(31)
        x = rng.standard_normal(2048)
        n0 = np.sqrt(0.001) * rng.standard_normal(2048)
        y = sp_signal.lfilter(ECHO_TAPS, [1.0], x) + n0
        np.savetxt(tmp_path / "signals.csv", np.column_stack([x, y, n0]), delimiter=",", header="x,y,n0",
                   comments="")
        config = _write(tmp_path, "stream.yaml", {
            "experiment": "classify_stream",
            "channels": {"length": 4, "delays": [0]},
            "control": STREAM_CONTROL,
            "stream": {"signals": "signals.csv"},
        })
        out = tmp_path / "out"
        result = CliRunner().invoke(cli, ["classify", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output

        rows = _read_trace(out / "trace.csv")
        assert len(rows) == 2048
        assert rows[255]["class"] == "H1" and float(rows[255]["mu"]) == 1.0
        assert rows[383]["copied"] == "1"
        assert rows[383]["class"] == "H0" and float(rows[383]["mu"]) == 0.1
        assert all(rows[n]["class"] in ("H0", "H1") for n in range(255, 2048, 256))
        assert np.isfinite(float(rows[-1]["se1_db"]))
        assert float(rows[-1]["se1_db"]) < -25.0
        manifest = yaml.safe_load((out / "manifest.yaml").read_text())
        assert manifest["outputs"] == ["trace.csv"]

    def test_pcm_pair(self, tmp_path):
        """PCM samples are scaled by 1/32768: a 3-count near-end residue stays below the double-talk threshold."""
        rng = np.random.default_rng(32)
        x = rng.integers(-16000, 16000, 2048)
        y = x + rng.integers(-3, 4, 2048)
        x.astype("<i2").tofile(tmp_path / "far.pcm")
        y.astype("<i2").tofile(tmp_path / "mic.pcm")
        config = _write(tmp_path, "pcm.yaml", {
            "experiment": "classify_stream",
            "channels": {"length": 4, "delays": [0]},
            "control": STREAM_CONTROL,
            "stream": {"pcm_x": "far.pcm", "pcm_y": "mic.pcm", "sample_rate": 8000},
        })
        out = tmp_path / "out"
        result = CliRunner().invoke(cli, ["classify", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output

        rows = _read_trace(out / "trace.csv")
        assert len(rows) == 2048
        assert rows[0]["se1_db"] == "nan"
        decided = [rows[n]["class"] for n in range(255, 2048, 256)]
        assert decided[0] == "H1"
        assert set(decided) <= {"H0", "H1"}
        assert rows[383]["copied"] == "1"

    def test_pcm_scaling(self, tmp_path):
        """read_pcm16 maps the int16 range onto [-1, 1)."""
        np.array([-32768, 0, 16384, 32767], dtype="<i2").tofile(tmp_path / "a.pcm")
        assert read_pcm16(tmp_path / "a.pcm").tolist() == [-1.0, 0.0, 0.5, 32767 / 32768]

    def test_pcm_length_mismatch(self, tmp_path):
        """PCM files of different lengths are an input error (status 2)."""
        np.zeros(100, dtype="<i2").tofile(tmp_path / "far.pcm")
        np.zeros(90, dtype="<i2").tofile(tmp_path / "mic.pcm")
        config = _write(tmp_path, "pcm.yaml", {
            "experiment": "classify_stream",
            "channels": {"length": 4, "delays": [0]},
            "control": STREAM_CONTROL,
            "stream": {"pcm_x": "far.pcm", "pcm_y": "mic.pcm"},
        })
        result = CliRunner().invoke(cli, ["classify", "--config", str(config), "--out", str(tmp_path / "o")])
        assert result.exit_code == EXIT_CONFIG

    def test_malformed_signal_csv(self, tmp_path):
        """A signal file without a y column is an input error (status 2)."""
        (tmp_path / "signals.csv").write_text("x,n0\n0.1,0.0\n")
        config = _write(tmp_path, "stream.yaml", {
            "experiment": "classify_stream",
            "channels": {"length": 4, "delays": [0]},
            "control": STREAM_CONTROL,
            "stream": {"signals": "signals.csv"},
        })
        result = CliRunner().invoke(cli, ["classify", "--config", str(config), "--out", str(tmp_path / "o")])
        assert result.exit_code == EXIT_CONFIG


class TestExitCodes:
    """Test the exception to exit status mapping."""

    @pytest.mark.parametrize("exc, code", [
        (ConfigError("bad"), EXIT_CONFIG),
        (InputError("bad file"), EXIT_CONFIG),
        (ValueError("bad argument"), EXIT_CONFIG),
        (FileNotFoundError("gone"), EXIT_CONFIG),
        (DegenerateCovarianceError("singular"), EXIT_NUMERICAL),
        (QuadratureError("tolerance"), EXIT_NUMERICAL),
        (np.linalg.LinAlgError("not positive definite"), EXIT_NUMERICAL),
        (FloatingPointError("overflow"), EXIT_NUMERICAL),
    ])
    def test_mapping(self, exc, code):
        """Numerical failures exit 3, configuration and input problems exit 2."""
        assert exit_code_for(exc) == code

    def test_unexpected_errors_propagate(self):
        """Programming errors are not turned into an exit status."""
        assert exit_code_for(KeyError("x")) is None
        assert exit_code_for(TypeError("x")) is None


if __name__ == "__main__":
    pytest.main([__file__])
