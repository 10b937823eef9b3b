"""
Experiment Configuration

YAML experiment files: one mapping per section (noise, channels, input,
analysis, monte_carlo, control, scenario, stream) plus the top-level keys
experiment, seed and output. Missing keys take the published defaults.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import yaml

from .canceler import ControlConfig, GuardMode
from .errors import ConfigError
from .gamma_analysis import McMode, MonteCarloSettings
from .signal_models import Channel, NoisePowers, ScenarioConfig, make_exponential_channel

logger = logging.getLogger(__name__)


class ExperimentKind(str, Enum):
    THEORY_CURVES = "theory_curves"
    MC_CURVES = "mc_curves"
    SIMULATE = "simulate"
    CLASSIFY_STREAM = "classify_stream"

    @property
    def stochastic(self) -> bool:
        return self in (ExperimentKind.MC_CURVES, ExperimentKind.SIMULATE)


SECTIONS = ("noise", "channels", "input", "analysis", "monte_carlo", "control", "scenario", "stream")
TOP_LEVEL_KEYS = ("experiment", "seed", "output") + SECTIONS


class _Section:
    """Typed `.get` over one YAML mapping that records conversion problems."""

    def __init__(self, name: str, data: Any, problems: List[str]):
        self.name = name
        self.problems = problems
        if data is None:
            data = {}
        if not isinstance(data, dict):
            problems.append(f"{name}: expected a mapping, got {type(data).__name__}")
            data = {}
        self.data = data
        self.used = set()

    def get(self, key: str, default: Any, kind: Callable = float) -> Any:
        self.used.add(key)
        value = self.data.get(key, default)
        if value is None:
            if default is not None:
                self.problems.append(f"{self.name}.{key}: must not be empty")
            return default
        return self._convert(key, value, kind, default)

    def get_list(self, key: str, default: Any, kind: Callable = float) -> Any:
        """List value; unconvertible items are reported and dropped."""
        self.used.add(key)
        value = self.data.get(key, default)
        if value is None:
            return ()
        if not isinstance(value, (list, tuple)):
            value = [value]
        converted = [self._convert(key, item, kind, None) for item in value]
        return tuple(item for item in converted if item is not None)

    def _convert(self, key: str, value: Any, kind: Callable, default: Any) -> Any:
        if kind is bool:
            if isinstance(value, bool):
                return value
            self.problems.append(f"{self.name}.{key}: expected true/false, got {value!r}")
            return default
        if kind is int and isinstance(value, float) and not value.is_integer():
            self.problems.append(f"{self.name}.{key}: expected an integer, got {value!r}")
            return default
        try:
            return kind(value)
        except (TypeError, ValueError):
            self.problems.append(f"{self.name}.{key}: cannot interpret {value!r} as {getattr(kind, '__name__', kind)}")
            return default

    def check_unknown(self):
        for key in sorted(set(self.data) - self.used):
            self.problems.append(f"{self.name}.{key}: unknown key")


@dataclass
class NoiseConfig:
    """Noise/double-talk powers; `levels` turns the curve experiments into a sweep."""

    sigma0_sq: float = 0.001
    sigma1_sq: float = 1.0
    levels: Tuple[Tuple[float, float], ...] = ()

    def noise_levels(self) -> List[NoisePowers]:
        pairs = self.levels or ((self.sigma0_sq, self.sigma1_sq),)
        return [NoisePowers(s0, s1) for s0, s1 in pairs]


@dataclass
class ChannelConfig:
    gain_db: float = -10.0
    delays: Tuple[int, ...] = (0, 10, 20)
    length: int = 1024
    decay: float = 0.95

    def build(self) -> Tuple[Channel, ...]:
        return tuple(make_exponential_channel(self.gain_db, d, self.length, self.decay) for d in self.delays)


@dataclass
class InputConfig:
    """AR-1 input; several rho values turn a correlated Monte Carlo run into a sweep over rho."""

    rho: Tuple[float, ...] = (0.5,)
    variance: float = 1.0

    def __post_init__(self):
        if isinstance(self.rho, (int, float)):
            self.rho = (float(self.rho),)
        self.rho = tuple(self.rho)


@dataclass
class AnalysisConfig:
    cx2_grid: Tuple[float, ...] = (0.5, 1.0, 2.0, 5.0, 10.0)
    p_list: Tuple[int, ...] = (1, 4, 8, 16, 32)
    theory: bool = True
    # replaces cx2_grid as the swept axis (correlated mc_curves only)
    input_variance_grid: Tuple[float, ...] = ()


@dataclass
class MonteCarloConfig:
    runs: int = 100_000
    mode: str = McMode.IID_PAIRS.value


@dataclass
class ScenarioSection:
    """Segment table of the synthetic scenario; powers come from `noise`, channels from `channels`."""

    boundaries: Tuple[int, ...] = (20000, 80000, 100000, 120000, 140000)
    segment_channels: Tuple[int, ...] = (0, 1, 1, 2, 2)
    segment_double_talk: Tuple[bool, ...] = (False, False, True, True, False)
    settle_samples: int = 5 * 1024
    export_signals: bool = False


@dataclass
class StreamConfig:
    """Input of classify: a statistics CSV, a signal CSV, or a pair of PCM files."""

    statistics: Optional[str] = None
    signals: Optional[str] = None
    pcm_x: Optional[str] = None
    pcm_y: Optional[str] = None
    sample_rate: int = 8000

    @property
    def source(self) -> Optional[str]:
        given = [name for name, value in (("statistics", self.statistics), ("signals", self.signals))
                 if value is not None]
        if self.pcm_x is not None or self.pcm_y is not None:
            given.append("pcm")
        return given[0] if len(given) == 1 else None


@dataclass
class ExperimentConfig:
    """
    Complete description of one run.

    Attributes:
        experiment: Kind of run; None when the subcommand decides
        seed: Root seed, mandatory for Monte Carlo and simulation
        output: Output directory
        base_dir: Directory relative stream paths are resolved against
        parse_problems: Type and key problems found while reading the file
    """

    experiment: Optional[ExperimentKind] = None
    seed: Optional[int] = None
    output: str = "results"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    channels: ChannelConfig = field(default_factory=ChannelConfig)
    input: InputConfig = field(default_factory=InputConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    stream: StreamConfig = field(default_factory=StreamConfig)
    base_dir: Path = field(default=Path("."), repr=False)
    parse_problems: List[str] = field(default_factory=list, repr=False)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], base_dir: Union[str, Path] = ".") -> "ExperimentConfig":
        """Build a config from parsed YAML, collecting every problem instead of stopping at the first."""
        problems: List[str] = []
        top = _Section("config", data, problems)

        experiment = top.get("experiment", None, str)
        kind = None
        if experiment is not None:
            try:
                kind = ExperimentKind(experiment)
            except ValueError:
                choices = ", ".join(k.value for k in ExperimentKind)
                problems.append(f"experiment: unknown kind {experiment!r} (expected one of {choices})")
        seed = top.get("seed", None, int)
        output = top.get("output", "results", str)
        for name in SECTIONS:
            top.used.add(name)
        top.check_unknown()

        noise_data = _Section("noise", top.data.get("noise"), problems)
        levels = []
        for entry in noise_data.get_list("levels", (), dict):
            if not isinstance(entry, dict):
                continue
            level = _Section("noise.levels", entry, problems)
            levels.append((level.get("sigma0_sq", 0.001), level.get("sigma1_sq", 1.0)))
            level.check_unknown()
        noise = NoiseConfig(sigma0_sq=noise_data.get("sigma0_sq", 0.001),
                            sigma1_sq=noise_data.get("sigma1_sq", 1.0),
                            levels=tuple(levels))

        chan = _Section("channels", top.data.get("channels"), problems)
        channels = ChannelConfig(gain_db=chan.get("gain_db", -10.0),
                                 delays=chan.get_list("delays", (0, 10, 20), int),
                                 length=chan.get("length", 1024, int),
                                 decay=chan.get("decay", 0.95))

        inp = _Section("input", top.data.get("input"), problems)
        input_config = InputConfig(rho=inp.get_list("rho", InputConfig.rho), variance=inp.get("variance", 1.0))

        ana = _Section("analysis", top.data.get("analysis"), problems)
        analysis = AnalysisConfig(cx2_grid=ana.get_list("cx2_grid", AnalysisConfig.cx2_grid),
                                  p_list=ana.get_list("p_list", AnalysisConfig.p_list, int),
                                  theory=ana.get("theory", True, bool),
                                  input_variance_grid=ana.get_list("input_variance_grid", ()))

        mc = _Section("monte_carlo", top.data.get("monte_carlo"), problems)
        monte_carlo = MonteCarloConfig(runs=mc.get("runs", 100_000, int),
                                       mode=mc.get("mode", McMode.IID_PAIRS.value, str))

        ctl = _Section("control", top.data.get("control"), problems)
        guard_mode = ctl.get("guard_mode", GuardMode.HYSTERESIS.value, str)
        if guard_mode not in {m.value for m in GuardMode}:
            problems.append(f"control.guard_mode: expected hysteresis or literal, got {guard_mode!r}")
            guard_mode = GuardMode.HYSTERESIS.value
        control = ControlConfig(mu=ctl.get_list("mu", (0.1, 1.0, 0.1, 0.3)),
                                test_interval=ctl.get("test_interval", 1024, int),
                                copy_delay=ctl.get("copy_delay", 512, int),
                                guard_epsilon=ctl.get("guard_epsilon", 0.25),
                                window=ctl.get("window", 32, int),
                                threshold_override=ctl.get("threshold_override", None),
                                guard_mode=guard_mode)

        scn = _Section("scenario", top.data.get("scenario"), problems)
        scenario = ScenarioSection(boundaries=scn.get_list("boundaries", ScenarioSection.boundaries, int),
                                   segment_channels=scn.get_list("segment_channels",
                                                                 ScenarioSection.segment_channels, int),
                                   segment_double_talk=scn.get_list("segment_double_talk",
                                                                    ScenarioSection.segment_double_talk, bool),
                                   settle_samples=scn.get("settle_samples", 5 * 1024, int),
                                   export_signals=scn.get("export_signals", False, bool))

        stm = _Section("stream", top.data.get("stream"), problems)
        stream = StreamConfig(statistics=stm.get("statistics", None, str),
                              signals=stm.get("signals", None, str),
                              pcm_x=stm.get("pcm_x", None, str),
                              pcm_y=stm.get("pcm_y", None, str),
                              sample_rate=stm.get("sample_rate", 8000, int))

        for section in (noise_data, chan, inp, ana, mc, ctl, scn, stm):
            section.check_unknown()

        return cls(experiment=kind, seed=seed, output=output, noise=noise, channels=channels,
                   input=input_config, analysis=analysis, monte_carlo=monte_carlo, control=control,
                   scenario=scenario, stream=stream, base_dir=Path(base_dir), parse_problems=problems)

    def noise_levels(self) -> List[NoisePowers]:
        return self.noise.noise_levels()

    def scenario_config(self) -> ScenarioConfig:
        noise = self.noise_levels()[0]
        return ScenarioConfig(channels=self.channels.build(),
                              boundaries=tuple(self.scenario.boundaries),
                              segment_channels=tuple(self.scenario.segment_channels),
                              segment_double_talk=tuple(self.scenario.segment_double_talk),
                              input_variance=self.input.variance,
                              rho=self.input.rho[0],
                              sigma0_sq=noise.sigma0_sq,
                              sigma1_sq=noise.sigma1_sq,
                              settle_samples=self.scenario.settle_samples)

    def monte_carlo_settings(self) -> MonteCarloSettings:
        mode = McMode(self.monte_carlo.mode)
        channels = None
        if mode is McMode.CORRELATED:
            built = self.channels.build()
            channels = (built[0], built[1])
        return MonteCarloSettings(runs=self.monte_carlo.runs, seed=int(self.seed), mode=mode,
                                  channels=channels, rho=self.input.rho)

    def resolve(self, path: str) -> Path:
        """Stream paths are relative to the config file."""
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.base_dir / candidate

    def to_dict(self) -> Dict[str, Any]:
        """Normalized echo of every setting, as written to the run manifest."""
        control = asdict(self.control)
        control["mu"] = list(self.control.mu)
        control["guard_mode"] = self.control.guard_mode.value
        return {
            "experiment": None if self.experiment is None else self.experiment.value,
            "seed": self.seed,
            "output": self.output,
            "noise": {"sigma0_sq": self.noise.sigma0_sq, "sigma1_sq": self.noise.sigma1_sq,
                      "levels": [{"sigma0_sq": s0, "sigma1_sq": s1} for s0, s1 in self.noise.levels]},
            "channels": {"gain_db": self.channels.gain_db, "delays": list(self.channels.delays),
                         "length": self.channels.length, "decay": self.channels.decay},
            "input": {"rho": list(self.input.rho), "variance": self.input.variance},
            "analysis": {"cx2_grid": list(self.analysis.cx2_grid), "p_list": list(self.analysis.p_list),
                         "theory": self.analysis.theory,
                         "input_variance_grid": list(self.analysis.input_variance_grid)},
            "monte_carlo": asdict(self.monte_carlo),
            "control": control,
            "scenario": {"boundaries": list(self.scenario.boundaries),
                         "segment_channels": list(self.scenario.segment_channels),
                         "segment_double_talk": list(self.scenario.segment_double_talk),
                         "settle_samples": self.scenario.settle_samples,
                         "export_signals": self.scenario.export_signals},
            "stream": asdict(self.stream),
        }


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read an experiment YAML file.

    Raises:
        ConfigError: if the file cannot be read or is not valid YAML
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: invalid YAML ({problem})") from exc
    logger.info(f"Loaded config {path}")
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


def _positive(value: Optional[float]) -> bool:
    return value is not None and value > 0


def validate(config: ExperimentConfig) -> List[str]:
    """
    Every problem that would stop `run`, as 'section.key: message' strings.

    An empty list means the configuration is runnable.
    """
    problems = list(config.parse_problems)
    kind = config.experiment

    if kind is None:
        problems.append("experiment: no experiment kind given")
    if kind is not None and kind.stochastic and config.seed is None:
        problems.append(f"seed: required for {kind.value}")

    pairs = config.noise.levels or ((config.noise.sigma0_sq, config.noise.sigma1_sq),)
    for index, (s0, s1) in enumerate(pairs):
        label = "noise" if not config.noise.levels else f"noise.levels[{index}]"
        if not _positive(s0):
            problems.append(f"{label}.sigma0_sq: must be positive, got {s0}")
        if not _positive(s1):
            problems.append(f"{label}.sigma1_sq: must be positive, got {s1}")

    chan = config.channels
    if chan.length is None or chan.length < 1:
        problems.append(f"channels.length: must be at least 1, got {chan.length}")
    elif any(d is None or not 0 <= d < chan.length for d in chan.delays):
        problems.append(f"channels.delays: every delay must lie in [0, {chan.length})")
    if not chan.delays:
        problems.append("channels.delays: at least one channel is required")
    if chan.decay is None or not 0.0 < chan.decay < 1.0:
        problems.append(f"channels.decay: must lie in (0, 1), got {chan.decay}")

    rho = config.input.rho
    if not rho:
        problems.append("input.rho: at least one value is required")
    elif any(r is None or not 0.0 <= r < 1.0 for r in rho):
        problems.append(f"input.rho: every value must lie in [0, 1), got {list(rho)}")
    correlated = kind is ExperimentKind.MC_CURVES and config.monte_carlo.mode == McMode.CORRELATED.value
    if len(rho) > 1 and not correlated:
        problems.append("input.rho: several values are only swept by mc_curves in correlated mode")
    if not _positive(config.input.variance):
        problems.append(f"input.variance: must be positive, got {config.input.variance}")

    variance_grid = config.analysis.input_variance_grid
    if variance_grid:
        if not correlated:
            problems.append("analysis.input_variance_grid: only used by mc_curves in correlated mode")
        elif any(v is None or v < 0 for v in variance_grid):
            problems.append("analysis.input_variance_grid: values must be non-negative")

    if kind in (ExperimentKind.THEORY_CURVES, ExperimentKind.MC_CURVES):
        sweeps_cx2 = not (variance_grid and correlated)
        if sweeps_cx2 and not config.analysis.cx2_grid:
            problems.append("analysis.cx2_grid: must not be empty")
        elif sweeps_cx2 and any(c is None or c < 0 for c in config.analysis.cx2_grid):
            problems.append("analysis.cx2_grid: values must be non-negative")
        if not config.analysis.p_list:
            problems.append("analysis.p_list: must not be empty")
        elif any(p is None or p < 1 for p in config.analysis.p_list):
            problems.append("analysis.p_list: window lengths must be at least 1")

    if kind is ExperimentKind.MC_CURVES:
        if config.monte_carlo.runs is None or config.monte_carlo.runs < 1:
            problems.append(f"monte_carlo.runs: must be at least 1, got {config.monte_carlo.runs}")
        if config.monte_carlo.mode not in {m.value for m in McMode}:
            problems.append(f"monte_carlo.mode: expected iid_pairs or correlated, got {config.monte_carlo.mode!r}")
        elif config.monte_carlo.mode == McMode.CORRELATED.value:
            if len(chan.delays) < 2:
                problems.append("channels.delays: correlated mode needs two channels")
            elif len(set(chan.delays[:2])) < 2:
                problems.append("channels.delays: the first two channels must differ for correlated mode")

    if kind in (ExperimentKind.SIMULATE, ExperimentKind.CLASSIFY_STREAM):
        problems.extend(f"control.{problem}" for problem in config.control.diagnostics())

    if kind is ExperimentKind.SIMULATE:
        try:
            scenario = config.scenario_config()
        except (TypeError, ValueError, IndexError):
            # already reported through the channel, input and noise checks above
            scenario = None
        if scenario is not None:
            problems.extend(f"scenario.{problem}" for problem in scenario.diagnostics())

    if kind is ExperimentKind.CLASSIFY_STREAM:
        stream = config.stream
        if stream.source is None:
            problems.append("stream: give exactly one of statistics, signals, or pcm_x + pcm_y")
        elif stream.source == "pcm" and (stream.pcm_x is None or stream.pcm_y is None):
            problems.append("stream.pcm_x: both pcm_x and pcm_y are required for PCM input")
        if stream.sample_rate is None or stream.sample_rate < 1:
            problems.append(f"stream.sample_rate: must be positive, got {stream.sample_rate}")

    return problems
