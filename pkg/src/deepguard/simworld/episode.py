"""Closed-loop episode runner and the JSON Lines episode log."""
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ParseError
from ..guard import GuardConfig, GuardState, apply_guards, guard_reset
from ..monitor import MonitorState, monitor_step
from .anomalies import AnomalySchedule, inject_anomaly
from .perception import ControllerConfig, ControllerState, PerceptionConfig, controller, perceive
from .render import CameraConfig, render
from .track import Track
from .vehicle import VehicleParams, VehicleState, vehicle_step

GROUND_TRUTH_FLOOR = 0.1
LOG_VERSION = 1


def detect_violation(state, track):
    d = abs(state.lateral_offset)
    if d >= track.road_half_width:
        return "collision"
    if d > track.lane_half_width:
        return "lane_departure"
    return None


@dataclass(frozen=True)
class EpisodeConfig:
    track: Track = Track()
    schedule: tuple = ()
    guards_enabled: bool = False
    seed: int = 0
    n_frames: int = 2400
    dt: float = 1.0 / 12.0
    camera: CameraConfig = CameraConfig()
    perception: PerceptionConfig = PerceptionConfig()
    controller: ControllerConfig = ControllerConfig()
    vehicle: VehicleParams = VehicleParams()
    guard: GuardConfig = GuardConfig()
    sensor_noise: float = 0.02
    steering_noise: float = 0.05
    initial_offset: float = 0.05

    def __post_init__(self):
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        object.__setattr__(self, "schedule", tuple(self.schedule))
        for s in self.schedule:
            if not isinstance(s, AnomalySchedule):
                raise ConfigError(f"schedule entries must be AnomalySchedule, got {s!r}")

    def to_dict(self):
        d = asdict(self)
        d["schedule"] = [asdict(s) for s in self.schedule]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        sub = {
            "track": Track, "camera": CameraConfig, "perception": PerceptionConfig,
            "controller": ControllerConfig, "vehicle": VehicleParams, "guard": GuardConfig,
        }
        try:
            for key, typ in sub.items():
                if key in d and isinstance(d[key], dict):
                    d[key] = typ(**d[key])
            d["schedule"] = tuple(AnomalySchedule(**s) for s in d.get("schedule", ()))
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad episode config: {exc}") from exc


@dataclass
class EpisodeLog:
    header: dict
    records: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    restarts: int = 0
    handovers: int = 0

    @property
    def seed(self):
        return self.header.get("seed")

    def trailer(self):
        counts = {"lane_departure": 0, "collision": 0}
        for v in self.violations:
            counts[v["kind"]] += 1
        return {"type": "trailer", "violations": self.violations, "restarts": self.restarts,
                "handovers": self.handovers, "violation_counts": counts,
                "n_frames": len(self.records)}

    def dumps(self):
        lines = [json.dumps({"type": "header", **self.header}, sort_keys=True)]
        lines += [json.dumps({"type": "frame", **r}, sort_keys=True) for r in self.records]
        lines.append(json.dumps(self.trailer(), sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text, source="<log>"):
        header, records, trailer = None, [], None
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{source}:{n}: {exc}") from exc
            kind = obj.pop("type", None)
            if kind == "header":
                header = obj
            elif kind == "frame":
                records.append(obj)
            elif kind == "trailer":
                trailer = obj
            else:
                raise ParseError(f"{source}:{n}: unknown record type {kind!r}")
        if header is None or trailer is None:
            raise ParseError(f"{source}: episode log needs a header and a trailer")
        return cls(header, records, trailer["violations"], trailer["restarts"],
                   trailer.get("handovers", 0))

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text(), str(path))


def _streams(seed):
    names = ("init", "sensor", "anomaly", "disturbance")
    return dict(zip(names, (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4))))


def run_episode(config, monitor, frame_hook=None):
    """Run one seeded closed-loop episode.

    ``monitor`` is a freshly calibrated MonitorState. ``frame_hook(i, frame)``
    is called with every (corrupted) camera frame, e.g. for PGM dumps.
    Randomness comes from four independent streams spawned from the seed, and
    none of them depends on guard decisions, so paired guards-off/on runs see
    identical frames until the guards first change the trajectory.
    """
    if not isinstance(monitor, MonitorState):
        raise ConfigError("run_episode needs a calibrated MonitorState")
    cfg = config
    track, cam = cfg.track, cfg.camera
    rngs = _streams(cfg.seed)
    state = VehicleState(
        arc_position=0.0,
        lateral_offset=float(rngs["init"].uniform(-cfg.initial_offset, cfg.initial_offset)),
        heading_error=0.0,
        speed=cfg.controller.target_speed,
    )
    memory = ControllerState()
    guard_state = GuardState()
    mstate = monitor
    log = EpisodeLog({"version": LOG_VERSION, "seed": cfg.seed, "config": cfg.to_dict(),
                      "threshold": asdict(monitor.threshold),
                      "monitor": asdict(monitor.config)})
    inside_lane = abs(state.lateral_offset) <= track.lane_half_width
    for i in range(cfg.n_frames):
        levels = [s.intensity(i) for s in cfg.schedule]
        intensity = max(levels, default=0.0)
        frame = render(track, state, cam)
        noise = rngs["sensor"].normal(0.0, 1.0, frame.shape)
        if cfg.sensor_noise > 0:
            frame = np.clip(frame + cfg.sensor_noise * noise, 0.0, 1.0)
        for sched, level in zip(cfg.schedule, levels):
            if level > 0:
                frame = inject_anomaly(frame, sched.kind, level, rngs["anomaly"])
        if frame_hook is not None:
            frame_hook(i, frame)
        est = perceive(frame, track.lane_half_width, cam, cfg.perception)
        act, memory = controller(est, state, cfg.controller, memory, cfg.dt)
        mstate, verdict = monitor_step(mstate, frame)
        if cfg.guards_enabled:
            err = verdict.forecast_max if verdict.trigger == "forecast" else verdict.filtered_error
            act, guard_state = apply_guards(verdict.level, act, guard_state, state.speed, cfg.guard, err)
        disturbance = float(rngs["disturbance"].normal(0.0, 1.0))
        steer = float(np.clip(act.steering + cfg.steering_noise * disturbance, -1.0, 1.0))
        pre = state
        state = vehicle_step(state, replace(act, steering=steer), cfg.dt, track, cfg.vehicle)
        kind = detect_violation(state, track)
        event = None
        if kind == "collision":
            event = "collision"
        elif kind == "lane_departure" and inside_lane:
            event = "lane_departure"
        inside_lane = kind is None
        rec = {
            "frame_index": i,
            "intensity": intensity,
            "ground_truth_anomalous": intensity >= GROUND_TRUTH_FLOOR,
            "raw_error": verdict.raw_error,
            "filtered_error": verdict.filtered_error,
            "forecast_max": verdict.forecast_max,
            "trigger": verdict.trigger,
            "level": verdict.level,
            "ar_params": list(verdict.ar_params) if verdict.ar_params else None,
            "mode": guard_state.mode,
            "warning": guard_state.warning_active,
            "actuation": act.as_dict(),
            "estimate": {"offset": est.lateral_offset_est, "confidence": est.confidence},
            "state": {"s": pre.arc_position, "d": pre.lateral_offset,
                      "heading": pre.heading_error, "speed": pre.speed},
            "violation": event,
        }
        log.records.append(rec)
        if event is not None:
            log.violations.append({"frame_index": i, "kind": event})
        if event == "collision":
            log.restarts += 1
            state = VehicleState(state.arc_position, 0.0, 0.0, 0.0)
            memory = ControllerState()
            inside_lane = True
        if guard_state.mode == "disengaged":
            # hand-over: the driver brings the car back to a safe spot and re-engages
            log.handovers += 1
            state = VehicleState(state.arc_position, 0.0, 0.0, 0.0)
            memory = ControllerState()
            guard_state = guard_reset(guard_state)
            inside_lane = True
    return log
