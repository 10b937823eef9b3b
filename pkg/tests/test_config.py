"""
Tests for experiment configuration

YAML loading, typed section parsing and the diagnostics reported before
any run starts.
"""

import pytest
import sys
import os
from pathlib import Path

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from eclab.canceler import GuardMode
from eclab.config import ExperimentConfig, ExperimentKind, load_config, validate
from eclab.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "experiment.yaml"
    path.write_text(text)
    return path


class TestLoadConfig:
    """Test reading YAML files."""

    def test_bundled_configs_validate(self):
        """Every shipped config is free of problems."""
        paths = sorted(CONFIG_DIR.glob("*.yaml"))
        assert len(paths) >= 9
        for path in paths:
            config = load_config(path)
            assert validate(config) == [], path.name

    def test_sections_parsed(self):
        """Section values land in typed fields."""
        config = load_config(CONFIG_DIR / "synthetic_g10.yaml")
        assert config.experiment is ExperimentKind.SIMULATE
        assert config.seed == 11
        assert config.channels.delays == (0, 10, 20)
        assert config.control.mu == (0.1, 1.0, 0.1, 0.3)
        assert config.control.guard_mode is GuardMode.HYSTERESIS
        assert config.scenario_config().total_samples == 140000

    def test_invalid_yaml_reports_line(self, tmp_path):
        """Broken YAML names the file and line."""
        path = _write(tmp_path, "experiment: simulate\nnoise: [1, 2\nseed: 3\n")
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert f"{path}:" in str(excinfo.value)
        assert "invalid YAML" in str(excinfo.value)

    def test_missing_file(self, tmp_path):
        """An unreadable path is a ConfigError."""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.yaml")

    def test_stream_paths_resolve_next_to_config(self):
        """Relative data paths are taken from the config directory."""
        config = load_config(CONFIG_DIR / "classify_stats.yaml")
        assert config.resolve(config.stream.statistics) == CONFIG_DIR / "data" / "example_statistics.csv"
        assert config.stream.source == "statistics"


class TestDiagnostics:
    """Test problem reporting."""

    def test_empty_grid(self):
        """An empty c_x^2 grid is reported."""
        config = ExperimentConfig.from_dict({"experiment": "theory_curves", "analysis": {"cx2_grid": []}})
        assert "analysis.cx2_grid: must not be empty" in validate(config)

    def test_all_problems_collected(self):
        """Several problems come back together."""
        config = ExperimentConfig.from_dict({
            "experiment": "simulate",
            "noise": {"sigma0_sq": -1.0},
            "control": {"test_interval": 256, "copy_delay": 300, "mu": [0.1, 3.0, 0.1, 0.3]},
        })
        problems = validate(config)
        assert "seed: required for simulate" in problems
        assert any(p.startswith("noise.sigma0_sq:") for p in problems)
        assert any(p.startswith("control.copy_delay:") for p in problems)
        assert any(p.startswith("control.mu[1]:") for p in problems)

    def test_unknown_keys(self):
        """Misspelled keys are reported with their section."""
        config = ExperimentConfig.from_dict({"experiment": "theory_curves", "analysis": {"p_lsit": [1]},
                                             "sead": 3})
        problems = validate(config)
        assert "analysis.p_lsit: unknown key" in problems
        assert "config.sead: unknown key" in problems

    def test_type_problems(self):
        """Values of the wrong type are reported, not raised."""
        config = ExperimentConfig.from_dict({"experiment": "simulate", "seed": 1,
                                             "control": {"window": "wide", "guard_mode": "sometimes"}})
        problems = validate(config)
        assert any(p.startswith("control.window:") for p in problems)
        assert any(p.startswith("control.guard_mode:") for p in problems)

    def test_unknown_experiment(self):
        """Unknown kinds list the accepted ones."""
        config = ExperimentConfig.from_dict({"experiment": "unknown_experiment"})
        assert any(p.startswith("experiment: unknown kind") for p in validate(config))

    def test_correlated_needs_two_channels(self):
        """Correlated Monte Carlo needs two distinct channels."""
        config = ExperimentConfig.from_dict({"experiment": "mc_curves", "seed": 1,
                                             "monte_carlo": {"mode": "correlated"},
                                             "channels": {"delays": [0]}})
        assert "channels.delays: correlated mode needs two channels" in validate(config)

    def test_stream_source_required(self):
        """classify_stream needs exactly one input."""
        config = ExperimentConfig.from_dict({"experiment": "classify_stream"})
        assert any(p.startswith("stream:") for p in validate(config))

    def test_scenario_problems(self):
        """Scenario tables must line up."""
        config = ExperimentConfig.from_dict({"experiment": "simulate", "seed": 1,
                                             "scenario": {"boundaries": [100, 200],
                                                          "segment_channels": [0],
                                                          "segment_double_talk": [False, False]}})
        assert any(p.startswith("scenario.segment_channels:") for p in validate(config))

    def test_round_trip_dict(self):
        """to_dict echoes the settings the manifest records."""
        config = load_config(CONFIG_DIR / "mc_correlated_g10.yaml")
        echoed = config.to_dict()
        assert echoed["experiment"] == "mc_curves"
        assert echoed["monte_carlo"]["mode"] == "correlated"
        assert echoed["analysis"]["p_list"] == [1, 4, 32]
        assert echoed["input"]["rho"] == [0.5]

    def test_rho_sweep_config(self):
        """The bundled rho sweeps run three correlations along sigma_x^2 in [0, 1] at p = 32."""
        for name, gain in (("mc_rho_sweep_g10.yaml", -10.0), ("mc_rho_sweep_g6.yaml", 6.0)):
            config = load_config(CONFIG_DIR / name)
            assert config.input.rho == (0.0, 0.5, 0.9)
            assert config.analysis.input_variance_grid[0] == 0.0
            assert config.analysis.input_variance_grid[-1] == 1.0
            assert config.analysis.p_list == (32,)
            assert config.channels.gain_db == gain
            settings = config.monte_carlo_settings()
            assert settings.rho == (0.0, 0.5, 0.9)
            assert config.to_dict()["analysis"]["input_variance_grid"] == list(config.analysis.input_variance_grid)

    def test_several_rho_need_correlated_sweep(self):
        """A list of rho values is refused outside correlated mc_curves."""
        config = ExperimentConfig.from_dict({"experiment": "simulate", "seed": 1, "input": {"rho": [0.0, 0.5]}})
        assert "input.rho: several values are only swept by mc_curves in correlated mode" in validate(config)
        config = ExperimentConfig.from_dict({"experiment": "mc_curves", "seed": 1, "input": {"rho": [0.2, 1.5]},
                                             "monte_carlo": {"mode": "correlated"}})
        assert any(p.startswith("input.rho: every value") for p in validate(config))

    def test_scalar_rho_becomes_list(self):
        """rho: 0.3 reads as a one-element list and drives the scenario."""
        config = ExperimentConfig.from_dict({"experiment": "simulate", "seed": 1, "input": {"rho": 0.3}})
        assert config.input.rho == (0.3,)
        assert config.scenario_config().rho == 0.3

    def test_variance_grid_needs_correlated_mode(self):
        """The input-variance axis is only accepted by correlated Monte Carlo, and replaces the c_x^2 grid there."""
        config = ExperimentConfig.from_dict({"experiment": "mc_curves", "seed": 1,
                                             "analysis": {"input_variance_grid": [0.0, 1.0]}})
        assert "analysis.input_variance_grid: only used by mc_curves in correlated mode" in validate(config)
        config = ExperimentConfig.from_dict({"experiment": "mc_curves", "seed": 1,
                                             "monte_carlo": {"mode": "correlated"},
                                             "analysis": {"input_variance_grid": [0.0, 1.0], "cx2_grid": []}})
        assert validate(config) == []
        config = ExperimentConfig.from_dict({"experiment": "mc_curves", "seed": 1,
                                             "monte_carlo": {"mode": "correlated"},
                                             "analysis": {"input_variance_grid": [-0.5]}})
        assert "analysis.input_variance_grid: values must be non-negative" in validate(config)


if __name__ == "__main__":
    pytest.main([__file__])
