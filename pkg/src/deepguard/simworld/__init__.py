"""Synthetic closed-loop lane-keeping world: tracks, vehicle, camera, weather, driver."""
from .anomalies import ANOMALY_KINDS, AnomalySchedule, inject_anomaly
from .corpus import nominal_corpus, nominal_frames
from .episode import EpisodeConfig, EpisodeLog, detect_violation, run_episode
from .perception import (ControllerConfig, ControllerState, LaneEstimate, PerceptionConfig,
                         controller, perceive)
from .render import CameraConfig, render
from .track import TRACK_KINDS, Track
from .vehicle import VehicleParams, VehicleState, vehicle_step

__all__ = [
    "ANOMALY_KINDS", "AnomalySchedule", "inject_anomaly", "nominal_corpus", "nominal_frames",
    "EpisodeConfig", "EpisodeLog", "detect_violation", "run_episode", "ControllerConfig",
    "ControllerState", "LaneEstimate", "PerceptionConfig", "controller", "perceive",
    "CameraConfig", "render", "TRACK_KINDS", "Track", "VehicleParams", "VehicleState",
    "vehicle_step",
]
