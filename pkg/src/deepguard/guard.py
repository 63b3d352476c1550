"""Banded guard levels, actuation override and the latching disengagement machine."""
import math
from dataclasses import dataclass, replace

from .errors import NumericError, StateError

LEVELS = ("none", "L1", "L2", "L3")
MODES = ("autonomous", "braking", "disengaged")


def level_rank(level):
    return LEVELS.index(level)


@dataclass(frozen=True)
class Actuation:
    steering: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0
    target_speed: float = 0.0

    def __post_init__(self):
        if not (-1.0 <= self.steering <= 1.0 and 0.0 <= self.throttle <= 1.0
                and 0.0 <= self.brake <= 1.0 and self.target_speed >= 0.0):
            raise ValueError(f"actuation out of range: {self}")

    def as_dict(self):
        return {"steering": self.steering, "throttle": self.throttle,
                "brake": self.brake, "target_speed": self.target_speed}


@dataclass(frozen=True)
class GuardConfig:
    speed_factor: float = 0.5  # L2 target-speed multiplier
    warn_floor: float = 0.055
    stop_epsilon: float = 0.05


@dataclass(frozen=True)
class GuardState:
    mode: str = "autonomous"
    active_level: str = "none"
    warning_active: bool = False
    frames_in_level: int = 0


def classify_level(error, config):
    """Map a (filtered) error onto a guard level.

    L1 covers [level1_floor, band1), L2 [band1, band2), L3 [band2, inf).
    Anything above theta yet below the L1 floor also escalates to L3.
    """
    if not math.isfinite(error):
        raise NumericError(f"non-finite error {error!r}")
    if error <= config.theta:
        return "none"
    if error >= config.band2:
        return "L3"
    if error >= config.band1:
        return "L2"
    if error >= config.level1_floor:
        return "L1"
    return "L3"


def apply_guards(level, actuation, state, speed, config=GuardConfig(), error=0.0):
    """Override the ADS actuation according to ``level``.

    ``speed`` is the current vehicle speed (drives the brake-to-disengage
    latch); ``error`` is the value the level was derived from and decides
    whether L1 escalates from self-healing to a lane-departure warning.
    Steering is never modified.
    """
    frames = state.frames_in_level + 1 if level == state.active_level else 1
    if state.mode == "disengaged":
        held = replace(actuation, throttle=0.0, brake=1.0, target_speed=0.0)
        return held, replace(state, active_level=level,
                             warning_active=level != "none", frames_in_level=frames)
    if state.mode == "braking" or level == "L3":
        out = replace(actuation, throttle=0.0, brake=1.0, target_speed=0.0)
        mode = "disengaged" if speed <= config.stop_epsilon else "braking"
        return out, GuardState(mode, level, level != "none", frames)
    if level == "none":
        return actuation, GuardState("autonomous", "none", False, frames)
    warn = level == "L2" or error >= config.warn_floor
    out = actuation
    if level == "L2":
        out = replace(actuation, target_speed=actuation.target_speed * config.speed_factor)
    return out, GuardState("autonomous", level, warn, frames)


def guard_reset(state):
    if state.mode != "disengaged":
        raise StateError(f"guard_reset requires disengaged mode, not {state.mode!r}")
    return GuardState()
