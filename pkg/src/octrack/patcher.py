"""Split frames into normalized column patches and put them back together.

A 512-wide frame becomes 16 non-overlapping patches of 32 columns each
(full depth), normalized with dataset-level mean and standard deviation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .signal_model import MScanFrame, validate_frame


@dataclass(frozen=True)
class PatchConfig:
    patch_width: int = 32
    patches_per_frame: int = 16
    norm_mean: float = 0.0
    norm_std: float = 1.0

    def __post_init__(self):
        if self.patch_width < 1 or self.patches_per_frame < 1:
            raise ValueError("patch_width and patches_per_frame must be positive")
        if not (math.isfinite(self.norm_std) and self.norm_std > 0):
            raise ValueError("norm_std must be positive")

    @property
    def frame_width(self) -> int:
        return self.patch_width * self.patches_per_frame


@dataclass(frozen=True)
class Patch:
    origin_column: int
    data: np.ndarray


def _as_data(frame) -> np.ndarray:
    return frame.data if isinstance(frame, MScanFrame) else validate_frame(frame).data


def compute_norm_stats(frames: Iterable) -> tuple[float, float]:
    """Population mean and standard deviation over every pixel of every frame."""
    arrays = [np.ravel(_as_data(f)) for f in frames]
    if not arrays:
        raise ValueError("no frames given")
    pixels = np.concatenate(arrays)
    mean = float(pixels.mean())
    std = float(pixels.std())
    if not std > 0:
        raise ValueError("zero variance: cannot normalize a constant dataset")
    return mean, std


def extract_patches(frame, cfg: PatchConfig = PatchConfig()) -> list[Patch]:
    data = _as_data(frame)
    if data.shape[1] != cfg.frame_width:
        raise ValueError(
            f"frame width {data.shape[1]} != patch_width * patches_per_frame = {cfg.frame_width}"
        )
    w = cfg.patch_width
    return [
        Patch(i * w, (data[:, i * w : (i + 1) * w] - cfg.norm_mean) / cfg.norm_std)
        for i in range(cfg.patches_per_frame)
    ]


def reassemble(patches: Sequence[Patch], cfg: PatchConfig = PatchConfig()) -> MScanFrame:
    """Inverse of :func:`extract_patches`; placement follows ``origin_column``."""
    if not patches:
        raise ValueError("no patches given")
    ordered = sorted(patches, key=lambda p: p.origin_column)
    expected = 0
    for p in ordered:
        if p.origin_column > expected:
            raise ValueError(f"gap in patch coverage at column {expected}")
        if p.origin_column < expected:
            raise ValueError(f"overlapping patch at column {p.origin_column}")
        expected = p.origin_column + p.data.shape[1]
    data = np.concatenate([p.data for p in ordered], axis=1) * cfg.norm_std + cfg.norm_mean
    return MScanFrame(data)


class PatchNormalizer(TransformerMixin, BaseEstimator):
    """``fit`` learns normalization statistics; ``transform`` cuts patches.

    ``transform`` accepts one frame and returns its list of patches;
    ``inverse_transform`` rebuilds the frame from a list of patches.
    """

    def __init__(self, patch_width=32, patches_per_frame=16):
        self.patch_width = patch_width
        self.patches_per_frame = patches_per_frame

    def fit(self, X, y=None):
        frames = [X] if isinstance(X, (MScanFrame, np.ndarray)) else list(X)
        self.norm_mean_, self.norm_std_ = compute_norm_stats(frames)
        return self

    def _config(self) -> PatchConfig:
        check_is_fitted(self, "norm_std_")
        return PatchConfig(self.patch_width, self.patches_per_frame, self.norm_mean_, self.norm_std_)

    def transform(self, X):
        return extract_patches(X, self._config())

    def inverse_transform(self, X):
        return reassemble(X, self._config())
