"""Scalar Kalman filter for one boundary track.

States are immutable; every operation returns a new :class:`KalmanState`.
The gain and covariance recursions are the standard scalar ones::

    predict:  x = f x,          p = f p f + q
    update:   K = p h / (h p h + r)
              x = x + K (z - h x)
              p = (1 - K h) p

Defaults are F = H = 1, Q = 1e-5, R = 1 and P0 = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .config import pick
from .signal_model import BoundaryObservation, Status


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FilterParams:
    f: float = 1.0
    h: float = 1.0
    q: float = 1e-5
    r: float = 1.0
    p0: float = 1.0

    def __post_init__(self):
        for name in ("q", "r", "p0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        for name in ("f", "h"):
            value = getattr(self, name)
            if not math.isfinite(value) or value == 0:
                raise ValueError(f"{name} must be finite and nonzero, got {value!r}")

    @classmethod
    def from_config(cls, config: dict[str, str]) -> "FilterParams":
        return cls(**pick(config, {k: float for k in ("f", "h", "q", "r", "p0")}))


DEFAULT_PARAMS = FilterParams()


class KalmanState(NamedTuple):
    x_hat: float
    p: float
    last_gain: float = 0.0
    steps: int = 0


def init_state(first_observation: float, params: FilterParams = DEFAULT_PARAMS) -> KalmanState:
    if not math.isfinite(first_observation):
        raise ValueError(f"initial observation must be finite, got {first_observation!r}")
    return KalmanState(float(first_observation), params.p0, 0.0, 0)


def predict(state: KalmanState, params: FilterParams = DEFAULT_PARAMS) -> KalmanState:
    f = params.f
    return KalmanState(f * state.x_hat, f * state.p * f + params.q, state.last_gain, state.steps)


def update(prior: KalmanState, z: float, params: FilterParams = DEFAULT_PARAMS) -> KalmanState:
    if not math.isfinite(z):
        raise ValueError(f"observation must be finite, got {z!r}")
    h = params.h
    p = prior.p
    k = p * h / (h * p * h + params.r)
    x = prior.x_hat + k * (z - h * prior.x_hat)
    return KalmanState(x, (1.0 - k * h) * p, k, prior.steps)


def step(
    state: KalmanState, obs: BoundaryObservation, params: FilterParams = DEFAULT_PARAMS
) -> tuple[KalmanState, float]:
    """Advance one column: predict, then update unless the observation is a dropout.

    A dropout leaves ``last_gain`` at 0 since no observation was blended in.
    """
    prior = predict(state, params)
    if obs.status is Status.VALID:
        post = update(prior, obs.depth_px, params)._replace(steps=state.steps + 1)
    else:
        post = prior._replace(last_gain=0.0, steps=state.steps + 1)
    return post, post.x_hat


def steady_state(
    params: FilterParams = DEFAULT_PARAMS, tol: float = 1e-15, max_iter: int = 1_000_000
) -> tuple[float, float]:
    """Iterate the prior-covariance recursion to its fixpoint.

    Returns ``(p_prior_star, k_star)``. Convergence for the default Q/R is
    slow (contraction factor about (1 - sqrt(q/r))**2 per step), hence the
    generous ``max_iter``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    f, h, q, r = params.f, params.h, params.q, params.r
    p_prior = f * params.p0 * f + q
    for _ in range(max_iter):
        k = p_prior * h / (h * p_prior * h + r)
        nxt = f * ((1.0 - k * h) * p_prior) * f + q
        if not math.isfinite(nxt):
            break
        if abs(nxt - p_prior) < tol:
            p_prior = nxt
            return p_prior, p_prior * h / (h * p_prior * h + r)
        p_prior = nxt
    raise ConvergenceError(
        f"prior covariance did not converge within {max_iter} iterations (last {p_prior!r})"
    )
