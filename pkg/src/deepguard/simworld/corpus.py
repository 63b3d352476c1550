"""Nominal (anomaly-free) frames for autoencoder training and calibration."""
import numpy as np

from ..errors import ConfigError
from .perception import ControllerState, controller, perceive
from .render import CameraConfig, render
from .track import Track
from .vehicle import VehicleState, vehicle_step
from ..guard import Actuation


def nominal_frames(track, n_frames, seed, camera=CameraConfig(), every=4, segment=200,
                   max_offset=0.1, max_heading=0.1, sensor_noise=0.02, steering_noise=0.05,
                   dt=1.0 / 12.0):
    """Sample frames from clean closed-loop driving on ``track``.

    Each segment starts at a random arc position with a random lateral offset
    and heading error, so the corpus covers recoveries as well as steady lane
    keeping. Every ``every``-th frame is kept.
    """
    if n_frames < 0:
        raise ConfigError("n_frames must be >= 0")
    rng = np.random.default_rng(seed)
    out = np.empty((n_frames,) + camera.shape)
    k = 0
    while k < n_frames:
        state = VehicleState(
            float(rng.uniform(0.0, track.length)),
            float(rng.uniform(-max_offset, max_offset)),
            float(rng.uniform(-max_heading, max_heading)),
            0.30,
        )
        memory = ControllerState()
        for i in range(segment):
            frame = render(track, state, camera)
            frame = np.clip(frame + sensor_noise * rng.standard_normal(frame.shape), 0.0, 1.0)
            if i % every == 0:
                out[k] = frame
                k += 1
                if k == n_frames:
                    break
            est = perceive(frame, track.lane_half_width, camera)
            act, memory = controller(est, state, memory=memory, dt=dt)
            steer = float(np.clip(act.steering + steering_noise * rng.standard_normal(), -1.0, 1.0))
            act = Actuation(steer, act.throttle, act.brake, act.target_speed)
            state = vehicle_step(state, act, dt, track)
    return out


def nominal_corpus(track_kinds, n_per_track, seed, camera=CameraConfig(), **kwargs):
    """Frames for each track kind, concatenated in the given order.

    Returns (frames, counts) where counts maps track kind to frame count.
    """
    if not track_kinds:
        raise ConfigError("track list is empty")
    seqs = np.random.SeedSequence(seed).spawn(len(track_kinds))
    parts, counts = [], {}
    for kind, ss in zip(track_kinds, seqs):
        frames = nominal_frames(Track.standard(kind), n_per_track, ss, camera, **kwargs)
        parts.append(frames)
        counts[kind] = len(frames)
    return np.concatenate(parts), counts
