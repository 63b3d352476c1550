"""Experiment configuration: one JSON document drives every CLI command."""
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .autoencoder import VARIANTS
from .calibration import MODES
from .errors import ConfigError
from .simworld.anomalies import AnomalySchedule
from .simworld.track import TRACK_KINDS


@dataclass(frozen=True)
class CorpusSection:
    tracks: tuple = TRACK_KINDS
    frames_per_track: int = 1000
    calibration_frames_per_track: int = 1667
    every: int = 4
    segment: int = 200


@dataclass(frozen=True)
class ModelSection:
    variant: str = "deep"
    layer_dims: tuple | None = None
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.1
    noise_magnitude: float = 0.1  # gaussian input noise, denoising variant only
    kl_weight: float = 1.0


@dataclass(frozen=True)
class CalibrationSection:
    mode: str = "calibrated"
    false_alarm_rate: float = 0.05


@dataclass(frozen=True)
class MonitorSection:
    order: int = 3
    window: int = 30
    horizon: int = 6


@dataclass(frozen=True)
class GuardSection:
    speed_factor: float = 0.5
    warn_floor: float | None = None  # None: taken from the calibration report
    stop_epsilon: float = 0.05


@dataclass(frozen=True)
class SimulationSection:
    track: str = "circle"
    schedules: tuple = ()
    n_episodes: int = 1
    n_frames: int = 2400
    paired: bool = True
    guards_enabled: bool = True  # used when paired is false
    jobs: int = 1
    dump_frames: bool = False


_SECTIONS = {
    "corpus": CorpusSection, "model": ModelSection, "calibration": CalibrationSection,
    "monitor": MonitorSection, "guard": GuardSection, "simulation": SimulationSection,
}


@dataclass(frozen=True)
class ExperimentConfig:
    frame_shape: tuple = (1, 36, 64)
    seed: int = 0
    out: str = "runs/default"
    corpus: CorpusSection = field(default_factory=CorpusSection)
    model: ModelSection = field(default_factory=ModelSection)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    monitor: MonitorSection = field(default_factory=MonitorSection)
    guard: GuardSection = field(default_factory=GuardSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)

    def __post_init__(self):
        validate(self)

    def to_dict(self):
        d = asdict(self)
        d["simulation"]["schedules"] = [asdict(s) for s in self.simulation.schedules]
        return _lists(d)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        d = dict(d)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            for name, typ in _SECTIONS.items():
                if name in d:
                    sec = dict(d[name])
                    bad = set(sec) - {f.name for f in fields(typ)}
                    if bad:
                        raise ConfigError(f"unknown keys in {name}: {sorted(bad)}")
                    if name == "simulation" and "schedules" in sec:
                        sec["schedules"] = tuple(AnomalySchedule(**s) for s in sec["schedules"])
                    for k, v in sec.items():
                        if isinstance(v, list):
                            sec[k] = tuple(v)
                    d[name] = typ(**sec)
            if "frame_shape" in d:
                d["frame_shape"] = tuple(d["frame_shape"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    def with_overrides(self, seed=None, out=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg


def _lists(obj):
    if isinstance(obj, dict):
        return {k: _lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_lists(v) for v in obj]
    return obj


def validate(cfg):
    if len(cfg.frame_shape) != 3 or any(int(v) < 1 for v in cfg.frame_shape):
        raise ConfigError(f"frame_shape must be three positive ints, got {cfg.frame_shape}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be an explicit non-negative integer")
    c = cfg.corpus
    for kind in c.tracks:
        if kind not in TRACK_KINDS:
            raise ConfigError(f"unknown track kind {kind!r}")
    if c.frames_per_track < 0 or c.calibration_frames_per_track < 0 or c.every < 1 or c.segment < 1:
        raise ConfigError("corpus counts must be non-negative and every/segment >= 1")
    if cfg.model.variant not in VARIANTS:
        raise ConfigError(f"unknown autoencoder variant {cfg.model.variant!r}")
    if cfg.calibration.mode not in MODES:
        raise ConfigError(f"calibration mode must be one of {MODES}")
    if not 0.0 < cfg.calibration.false_alarm_rate < 1.0:
        raise ConfigError("false_alarm_rate must lie in (0, 1)")
    s = cfg.simulation
    if s.track not in TRACK_KINDS:
        raise ConfigError(f"unknown track kind {s.track!r}")
    if s.n_episodes < 1 or s.n_frames < 1 or s.jobs < 1:
        raise ConfigError("n_episodes, n_frames and jobs must be >= 1")
    for sched in s.schedules:
        if not isinstance(sched, AnomalySchedule):
            raise ConfigError("schedules must be AnomalySchedule entries")


def load_config(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(doc)
