"""Kinematic bicycle expressed in the track frame."""
import math
from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class VehicleState:
    arc_position: float = 0.0
    lateral_offset: float = 0.0
    heading_error: float = 0.0
    speed: float = 0.0


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.1
    max_steer: float = 0.5  # rad at steering = +-1
    accel_throttle: float = 0.5
    accel_brake: float = 2.0
    max_speed: float = 1.0
    speed_gain: float = 4.0  # proportional target-speed governor, 1/s


def longitudinal_command(actuation, speed, params):
    """Effective (throttle, brake) after the target-speed governor.

    Explicit throttle is capped by what the governor allows and explicit brake
    is raised to what it demands, so lowering ``target_speed`` slows the car
    even when the upstream controller still asks for throttle.
    """
    err = actuation.target_speed - speed
    throttle = min(actuation.throttle, max(0.0, min(1.0, params.speed_gain * err)))
    brake = max(actuation.brake, max(0.0, min(1.0, -params.speed_gain * err)))
    return throttle, brake


def vehicle_step(state, actuation, dt, track, params=VehicleParams()):
    """Explicit Euler step; position terms use the speed at the start of the step."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    v = state.speed
    delta = params.max_steer * actuation.steering
    kappa = track.curvature(state.arc_position)
    psi = state.heading_error
    heading = psi + (v * math.tan(delta) / params.wheelbase - kappa * v) * dt
    d = state.lateral_offset + v * math.sin(psi) * dt
    s = state.arc_position + v * math.cos(psi) * dt
    throttle, brake = longitudinal_command(actuation, v, params)
    accel = params.accel_throttle * throttle - params.accel_brake * brake
    speed = min(max(v + accel * dt, 0.0), params.max_speed)
    return VehicleState(s, d, heading, speed)
