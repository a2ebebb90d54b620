"""Per-layer streaming tracks and a scikit-learn style batch wrapper.

Three pipelines share one interface:

``raw``     observations passed through; dropout columns yield NaN.
``kalman``  plain Kalman filter on each valid observation.
``kdh``     sliding-window pre-filter feeding the Kalman update.
"""
from __future__ import annotations

import math
from math import isfinite
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import kalman
from ._validation import check_depths, check_pipeline
from .kalman import FilterParams
from .signal_model import LAYERS, BoundaryObservation, BoundaryTrace, LayerId, Status
from .window import DEFAULT_WINDOW, TrackState, WindowConfig, WindowState


class LayerTrack:
    """Causal tracker for a single layer.

    The filter is initialised from the first valid observation. Dropouts
    before that point have nothing to predict from and yield NaN.

    ``step`` inlines the arithmetic of :func:`octrack.window.kdh_step` and
    :func:`octrack.kalman.step` (same operations, same order, so results
    are bit-identical) to keep per-column overhead low; ``state`` exposes
    the equivalent immutable :class:`TrackState`.
    """

    _TRIM = 2048

    def __init__(
        self,
        pipeline: str = "kdh",
        params: FilterParams = kalman.DEFAULT_PARAMS,
        window: WindowConfig = DEFAULT_WINDOW,
    ):
        self.pipeline = check_pipeline(pipeline)
        self.params = params
        self.window = window
        self.started = False
        self._x = self._p = self._gain = 0.0
        self._steps = 0
        self._hist: list[float] = []
        self._count = 0
        # hot-path copies of the configuration
        self._kdh = self.pipeline == "kdh"
        self._f, self._h, self._q, self._r = params.f, params.h, params.q, params.r
        self._n = window.window_len
        self._cap = 2 * window.window_len
        self._active_from = max(window.warmup_len + 1, 2 * window.window_len)
        self._rw, self._pw = window.recent_weight, window.prior_weight

    @property
    def state(self) -> TrackState | None:
        if not self.started:
            return None
        cap = 2 * self.window.window_len
        buf = tuple(self._hist[-cap:]) if self.pipeline == "kdh" else ()
        return TrackState(
            kalman.KalmanState(self._x, self._p, self._gain, self._steps),
            WindowState(buf, self._count),
        )

    def step(self, obs: BoundaryObservation) -> tuple[float, float]:
        """Consume one observation; return ``(estimate, gain)``."""
        valid = obs.status is Status.VALID
        if self.pipeline == "raw":
            return (obs.depth_px, math.nan) if valid else (math.nan, math.nan)
        if not self.started:
            if not valid:
                return math.nan, math.nan
            if not math.isfinite(obs.depth_px):
                raise ValueError(f"observation must be finite, got {obs.depth_px!r}")
            self._x, self._p = float(obs.depth_px), self.params.p0
            self.started = True
        f = self._f
        x = f * self._x
        p = f * self._p * f + self._q
        self._steps += 1
        if not valid:
            self._x, self._p, self._gain = x, p, 0.0
            return x, 0.0
        z = obs.depth_px
        if not isfinite(z):
            raise ValueError(f"observation must be finite, got {z!r}")
        z = float(z)
        if self._kdh:
            hist = self._hist
            hist.append(z)
            self._count += 1
            if self._count >= self._active_from:
                n = self._n
                if len(hist) > self._TRIM:
                    del hist[: -self._cap]
                recent = sum(hist[-n:]) / n
                prior = sum(hist[-self._cap : -n]) / n
                z = self._rw * recent + self._pw * prior
        h = self._h
        k = p * h / (h * p * h + self._r)
        x = x + k * (z - h * x)
        self._x = x
        self._p = (1.0 - k * h) * p
        self._gain = k
        return x, k

    def run(self, observations: Iterable[BoundaryObservation]) -> tuple[np.ndarray, np.ndarray]:
        est, gain = [], []
        for obs in observations:
            e, g = self.step(obs)
            est.append(e)
            gain.append(g)
        return np.array(est, dtype=np.float64), np.array(gain, dtype=np.float64)


def observations_from_depths(depths: np.ndarray, layer: LayerId) -> list[BoundaryObservation]:
    out = []
    for k, d in enumerate(depths):
        d = float(d)
        if math.isnan(d):
            out.append(BoundaryObservation.dropout(layer, k))
        else:
            out.append(BoundaryObservation(layer, k, d, Status.VALID))
    return out


def track_pairs(
    pairs: Iterable[tuple[BoundaryObservation, BoundaryObservation]],
    pipeline: str = "kdh",
    params: FilterParams = kalman.DEFAULT_PARAMS,
    window: WindowConfig = DEFAULT_WINDOW,
) -> dict[LayerId, BoundaryTrace]:
    """Stream per-column (epithelium, DM) pairs through one track per layer."""
    tracks = {layer: LayerTrack(pipeline, params, window) for layer in LAYERS}
    raw = {layer: [] for layer in LAYERS}
    est = {layer: [] for layer in LAYERS}
    gain = {layer: [] for layer in LAYERS}
    for pair in pairs:
        for obs in pair:
            e, g = tracks[obs.layer].step(obs)
            raw[obs.layer].append(obs)
            est[obs.layer].append(e)
            gain[obs.layer].append(g)
    return {
        layer: BoundaryTrace(layer, tuple(raw[layer]), np.array(est[layer]), np.array(gain[layer]))
        for layer in LAYERS
    }


class BoundaryTracker(TransformerMixin, BaseEstimator):
    """Filter boundary depth sequences column by column.

    ``transform`` takes an array of shape ``(n_columns,)`` or
    ``(n_columns, n_layers)`` with NaN marking dropout columns and returns
    the filtered estimates in the same layout. Each layer gets an
    independent track and every call starts from a fresh state, so
    ``transform`` on a prefix of the columns equals the prefix of
    ``transform`` on all of them.

    Parameters
    ----------
    pipeline : {"kdh", "kalman", "raw"}
    f, h, q, r, p0 : float
        Scalar filter parameters.
    window_len, recent_weight, prior_weight, warmup_len
        Sliding-window pre-filter settings (``kdh`` only).
    """

    def __init__(
        self,
        pipeline="kdh",
        f=1.0,
        h=1.0,
        q=1e-5,
        r=1.0,
        p0=1.0,
        window_len=50,
        recent_weight=0.7,
        prior_weight=0.3,
        warmup_len=50,
    ):
        self.pipeline = pipeline
        self.f = f
        self.h = h
        self.q = q
        self.r = r
        self.p0 = p0
        self.window_len = window_len
        self.recent_weight = recent_weight
        self.prior_weight = prior_weight
        self.warmup_len = warmup_len

    def fit(self, X=None, y=None):
        self.pipeline_ = check_pipeline(self.pipeline)
        self.params_ = FilterParams(self.f, self.h, self.q, self.r, self.p0)
        self.window_ = WindowConfig(
            self.window_len, self.recent_weight, self.prior_weight, self.warmup_len
        )
        if X is not None:
            self.n_features_in_ = check_depths(X).shape[1]
        return self

    def track(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(estimates, gains)``, both shaped like the 2-D input."""
        check_is_fitted(self, "params_")
        X = check_depths(X)
        est = np.empty_like(X)
        gain = np.empty_like(X)
        for j in range(X.shape[1]):
            t = LayerTrack(self.pipeline_, self.params_, self.window_)
            est[:, j], gain[:, j] = t.run(observations_from_depths(X[:, j], LAYERS[j % 2]))
        return est, gain

    def transform(self, X):
        squeeze = np.ndim(X) == 1
        est, _ = self.track(X)
        return est[:, 0] if squeeze else est
