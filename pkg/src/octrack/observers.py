"""Observation providers: gradient-peak detector, CSV replay, noisy oracle.

Every provider yields one ``(epithelium, DM)`` pair of
:class:`BoundaryObservation` per column, which is what the trackers consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.ndimage import uniform_filter1d
from sklearn.base import BaseEstimator, TransformerMixin

from . import io
from ._validation import check_frame_array
from .config import pick
from .signal_model import (
    AScanColumn,
    BoundaryObservation,
    FormatError,
    LayerId,
    MScanFrame,
    Status,
)
from .synth import SyntheticScene, ground_truth

EPI, DM = LayerId.EPITHELIUM, LayerId.DM
Pair = tuple[BoundaryObservation, BoundaryObservation]


@dataclass(frozen=True)
class DetectorConfig:
    search_halfwidth: int = 40
    min_layer_separation: int = 30
    gradient_threshold: float = 0.0
    smoothing_radius: int = 2

    def __post_init__(self):
        if self.search_halfwidth < 1:
            raise ValueError("search_halfwidth must be >= 1")
        if self.min_layer_separation < 1:
            raise ValueError("min_layer_separation must be >= 1")
        if self.gradient_threshold < 0 or self.smoothing_radius < 0:
            raise ValueError("gradient_threshold and smoothing_radius must be non-negative")

    @classmethod
    def from_config(cls, config: dict[str, str]) -> "DetectorConfig":
        return cls(**pick(config, {
            "search_halfwidth": int,
            "min_layer_separation": int,
            "gradient_threshold": float,
            "smoothing_radius": int,
        }))


# -- gradient-peak detector -------------------------------------------------

def parabolic_offset(left: float, centre: float, right: float) -> float:
    """Vertex offset of the parabola through three equally spaced samples."""
    denom = left - 2.0 * centre + right
    if denom >= 0:
        return 0.0
    return min(max(0.5 * (left - right) / denom, -0.5), 0.5)


def _locate_band(smooth: np.ndarray, grad: np.ndarray, lo: int, hi: int, cfg: DetectorConfig):
    """Find the strongest rising edge in ``[lo, hi)`` and refine to its band crest.

    The rising edge decides validity (peak gradient above threshold); the
    returned depth is the intensity crest just below it, sub-pixel refined.
    Returns NaN when no edge qualifies.
    """
    if hi - lo < 1:
        return math.nan
    edge = lo + int(np.argmax(grad[lo:hi]))  # first maximum: shallower row wins ties
    if not grad[edge] > cfg.gradient_threshold:
        return math.nan
    n = smooth.shape[0]
    crest = edge
    stop = min(n - 1, edge + cfg.search_halfwidth)
    while crest < stop and smooth[crest + 1] > smooth[crest]:
        crest += 1
    if 0 < crest < n - 1:
        return crest + parabolic_offset(smooth[crest - 1], smooth[crest], smooth[crest + 1])
    return float(crest)


def detect_boundaries(
    column, previous: tuple[float, float] | None = None, cfg: DetectorConfig = DetectorConfig()
) -> Pair:
    """Locate the epithelium and DM bands in one A-scan column.

    ``previous`` anchors each layer's search to ``previous +/- search_halfwidth``;
    a missing or NaN anchor falls back to the top half of the column for the
    epithelium and to everything at least ``min_layer_separation`` below the
    epithelium for the DM.
    """
    if isinstance(column, AScanColumn):
        index, values = column.index, column.intensities
    else:
        index, values = 0, column
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    sep, hw = cfg.min_layer_separation, cfg.search_halfwidth
    if n < 2 * sep:
        raise ValueError(f"column of {n} samples is shorter than 2 * min_layer_separation")

    smooth = values
    if cfg.smoothing_radius:
        smooth = uniform_filter1d(values, 2 * cfg.smoothing_radius + 1, mode="nearest")
    grad = np.gradient(smooth)

    prev_epi, prev_dm = previous if previous is not None else (math.nan, math.nan)
    if math.isfinite(prev_epi):
        c = int(round(prev_epi))
        lo, hi = max(0, c - hw), min(n, c + hw + 1)
    else:
        lo, hi = 0, n // 2
    epi = _locate_band(smooth, grad, lo, hi, cfg)

    floor = int(math.floor(epi)) + sep if math.isfinite(epi) else 0
    if math.isfinite(prev_dm):
        c = int(round(prev_dm))
        lo, hi = max(floor, c - hw), min(n, c + hw + 1)
    elif math.isfinite(epi):
        lo, hi = floor, n
    else:
        lo, hi = n // 2, n
    dm = _locate_band(smooth, grad, lo, hi, cfg)
    if math.isfinite(epi) and math.isfinite(dm) and not dm > epi:
        dm = math.nan

    def make(layer, depth):
        if math.isnan(depth):
            return BoundaryObservation.dropout(layer, index)
        return BoundaryObservation(layer, index, depth, Status.VALID)

    return make(EPI, epi), make(DM, dm)


def detect_frame(frame: MScanFrame, cfg: DetectorConfig = DetectorConfig()) -> Iterator[Pair]:
    """Detect column by column, anchoring each search on the last valid detections."""
    anchor = [math.nan, math.nan]
    for col in frame.columns():
        pair = detect_boundaries(col, tuple(anchor), cfg)
        for j, obs in enumerate(pair):
            if obs.is_valid:
                anchor[j] = obs.depth_px
        yield pair


class GradientPeakDetector(TransformerMixin, BaseEstimator):
    """Frame (depth x width array) -> ``(width, 2)`` boundary depths, NaN = dropout."""

    def __init__(self, search_halfwidth=40, min_layer_separation=30, gradient_threshold=0.0,
                 smoothing_radius=2):
        self.search_halfwidth = search_halfwidth
        self.min_layer_separation = min_layer_separation
        self.gradient_threshold = gradient_threshold
        self.smoothing_radius = smoothing_radius

    def fit(self, X=None, y=None):
        self.config_ = DetectorConfig(
            self.search_halfwidth, self.min_layer_separation,
            self.gradient_threshold, self.smoothing_radius,
        )
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit()
        data = X.data if isinstance(X, MScanFrame) else check_frame_array(X)
        pairs = detect_frame(MScanFrame(data), self.config_)
        return np.array([[o.depth_px for o in pair] for pair in pairs], dtype=np.float64)


# -- replay -------------------------------------------------------------------

class ObservationReplay:
    """Sequential cursor over an observation CSV, one column pair at a time."""

    def __init__(self, source):
        if isinstance(source, (str, Path)):
            self._fh = open(source, newline="")
            self._owns = True
        else:
            self._fh = source
            self._owns = False
        self._rows = io.iter_observation_rows(self._fh)
        self._pending: BoundaryObservation | None = None
        self._expected = 0

    def _take(self) -> BoundaryObservation | None:
        if self._pending is not None:
            obs, self._pending = self._pending, None
            return obs
        return next(self._rows, None)

    def replay_next(self) -> Pair | None:
        first = self._take()
        if first is None:
            return None
        k = self._expected
        if first.column_index != k:
            raise FormatError(
                f"out-of-order or missing column (expected {k})", column=first.column_index
            )
        second = self._take()
        if second is None or second.column_index != k:
            self._pending = second
            raise FormatError(f"missing layer {_other(first.layer).value}", column=k)
        if second.layer is first.layer:
            raise FormatError(f"duplicate layer {first.layer.value}", column=k)
        self._expected += 1
        return (first, second) if first.layer is EPI else (second, first)

    def __iter__(self) -> Iterator[Pair]:
        while (pair := self.replay_next()) is not None:
            yield pair

    def close(self):
        if self._owns:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _other(layer: LayerId) -> LayerId:
    return DM if layer is EPI else EPI


def replay_next(reader: ObservationReplay) -> Pair | None:
    return reader.replay_next()


# -- noisy oracle -------------------------------------------------------------

def noisy_oracle(scene: SyntheticScene, column_index: int, seed: int | None = None) -> Pair:
    """Ground truth plus observation noise and scheduled artifacts.

    A pure function of ``(scene, column_index, seed)``: each column draws
    from its own generator keyed on both, so any prefix of columns is
    reproduced exactly. ``seed`` defaults to ``scene.seed``.
    """
    k = int(column_index)
    epi, dm = ground_truth(scene, k)
    if scene.in_dropout(k):
        return BoundaryObservation.dropout(EPI, k), BoundaryObservation.dropout(DM, k)
    rng = np.random.default_rng([scene.seed if seed is None else seed, k])
    noise = rng.normal(0.0, 1.0, 2) * scene.sigma_obs
    jag_amp = scene.jag_amplitude(k)
    jag = rng.uniform(-jag_amp, jag_amp, 2) if jag_amp else (0.0, 0.0)
    hi = math.nextafter(float(scene.depth_px), 0.0)
    depths = [min(max(t + float(e) + float(j), 0.0), hi) for t, e, j in zip((epi, dm), noise, jag)]
    return (
        BoundaryObservation(EPI, k, depths[0], Status.VALID),
        BoundaryObservation(DM, k, depths[1], Status.VALID),
    )


def oracle_pairs(scene: SyntheticScene, seed: int | None = None) -> Iterator[Pair]:
    for k in range(scene.width_px):
        yield noisy_oracle(scene, k, seed)
