"""Sliding-window observation pre-filter and the combined KDH step.

During warmup the raw observation feeds the Kalman update unchanged. Once two
full windows of valid observations exist, the update instead receives

    recent_weight * mean(newest window) + prior_weight * mean(window before it)

Counts between ``warmup_len`` and ``2 * window_len`` still pass the raw value
through. Dropouts never enter the buffer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import kalman
from .config import pick
from .kalman import FilterParams, KalmanState
from .signal_model import BoundaryObservation, Status


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = 50
    recent_weight: float = 0.7
    prior_weight: float = 0.3
    warmup_len: int = 50

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if self.warmup_len < 1:
            raise ValueError("warmup_len must be >= 1")
        for name in ("recent_weight", "prior_weight"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if abs(self.recent_weight + self.prior_weight - 1.0) > 1e-12:
            raise ValueError("recent_weight + prior_weight must equal 1")

    @classmethod
    def from_config(cls, config: dict[str, str]) -> "WindowConfig":
        return cls(**pick(config, {
            "window_len": int,
            "recent_weight": float,
            "prior_weight": float,
            "warmup_len": int,
        }))


DEFAULT_WINDOW = WindowConfig()


class WindowState(NamedTuple):
    buffer: tuple[float, ...] = ()
    count: int = 0


def push(state: WindowState, z, cfg: WindowConfig = DEFAULT_WINDOW) -> WindowState:
    """Append a valid depth, evicting the oldest beyond ``2 * window_len``.

    ``z`` may be a float or a :class:`BoundaryObservation`; dropout
    observations return ``state`` unchanged.
    """
    if isinstance(z, BoundaryObservation):
        if z.status is not Status.VALID:
            return state
        z = z.depth_px
    if not math.isfinite(z):
        raise ValueError(f"observation must be finite, got {z!r}")
    cap = 2 * cfg.window_len
    buf = state.buffer
    if len(buf) >= cap:
        buf = buf[len(buf) - cap + 1 :]
    return WindowState(buf + (float(z),), state.count + 1)


def effective_observation(state: WindowState, z: float, cfg: WindowConfig = DEFAULT_WINDOW) -> float:
    """Observation to feed the Kalman update; ``state`` must already contain ``z``."""
    n = cfg.window_len
    if state.count <= cfg.warmup_len or state.count < 2 * n:
        return z
    buf = state.buffer
    recent = sum(buf[n:]) / n
    prior = sum(buf[:n]) / n
    return cfg.recent_weight * recent + cfg.prior_weight * prior


class TrackState(NamedTuple):
    kalman: KalmanState
    window: WindowState


def init_track(first_observation: float, params: FilterParams = kalman.DEFAULT_PARAMS) -> TrackState:
    return TrackState(kalman.init_state(first_observation, params), WindowState())


def kdh_step(
    track: TrackState,
    obs: BoundaryObservation,
    params: FilterParams = kalman.DEFAULT_PARAMS,
    cfg: WindowConfig = DEFAULT_WINDOW,
) -> tuple[TrackState, float]:
    ks, ws = track
    prior = kalman.predict(ks, params)
    if obs.status is Status.VALID:
        ws = push(ws, obs.depth_px, cfg)
        z_eff = effective_observation(ws, obs.depth_px, cfg)
        post = kalman.update(prior, z_eff, params)._replace(steps=ks.steps + 1)
    else:
        post = prior._replace(last_gain=0.0, steps=ks.steps + 1)
    return TrackState(post, ws), post.x_hat
