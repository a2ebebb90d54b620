"""Synthetic M-scan scenes with known boundary trajectories.

Each layer renders as a Gaussian bright band centred on its true depth.
Both layers share one motion term (the whole eye moves), so their
separation is constant unless drift is configured. Jag events and
observation noise are applied by :func:`octrack.observers.noisy_oracle`,
not to the image.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import pick
from .signal_model import MScanFrame


class Regime(enum.Enum):
    CLEAN = "clean"
    LOW_SNR = "lowsnr"
    MOTION = "motion"
    DROPOUT_JAGGED = "dropoutjagged"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        key = text.strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(
            f"unknown preset {text!r}; choose from {', '.join(m.value for m in cls)}"
        )


@dataclass(frozen=True)
class SyntheticScene:
    width_px: int = 512
    depth_px: int = 512
    epi_base: float = 120.0
    dm_base: float = 330.0
    motion_amplitude: float = 0.0
    motion_period: float = 256.0
    drift_per_column: float = 0.0
    band_sigma: float = 3.0
    band_intensity: float = 200.0
    background_noise_sigma: float = 2.0
    sigma_obs: float = 0.5
    dropout_intervals: tuple[tuple[int, int], ...] = ()
    jag_events: tuple[tuple[int, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.width_px < 1 or self.depth_px < 1:
            raise ValueError("frame dimensions must be positive")
        if self.band_sigma <= 0 or self.band_intensity <= 0 or self.motion_period <= 0:
            raise ValueError("band_sigma, band_intensity and motion_period must be positive")
        if min(self.motion_amplitude, self.background_noise_sigma, self.sigma_obs) < 0:
            raise ValueError("amplitudes and noise levels must be non-negative")
        if not self.epi_base + 3 * self.band_sigma < self.dm_base:
            raise ValueError("epithelium and DM bands overlap")
        for start, end in self.dropout_intervals:
            if not 0 <= start <= end:
                raise ValueError(f"bad dropout interval [{start}, {end})")

    def replace(self, **changes) -> "SyntheticScene":
        return dataclasses.replace(self, **changes)

    def in_dropout(self, k: int) -> bool:
        return any(start <= k < end for start, end in self.dropout_intervals)

    def jag_amplitude(self, k: int) -> float:
        """Largest jag amplitude scheduled at column ``k`` (0 when none)."""
        return max((abs(a) for c, a in self.jag_events if c == k), default=0.0)

    @classmethod
    def from_config(cls, config: dict[str, str], base: "SyntheticScene | None" = None) -> "SyntheticScene":
        base = base or cls()
        fields = {
            "width_px": int, "depth_px": int, "epi_base": float, "dm_base": float,
            "motion_amplitude": float, "motion_period": float, "drift_per_column": float,
            "band_sigma": float, "band_intensity": float, "background_noise_sigma": float,
            "sigma_obs": float, "seed": int,
            "dropout_intervals": _parse_intervals, "jag_events": _parse_jags,
        }
        changes = pick(config, fields)
        return base.replace(**changes) if changes else base


def _parse_intervals(text: str) -> tuple[tuple[int, int], ...]:
    """``"10:30, 100:120"`` -> ((10, 30), (100, 120))."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        a, _, b = item.partition(":")
        out.append((int(a), int(b)))
    return tuple(out)


def _parse_jags(text: str) -> tuple[tuple[int, float], ...]:
    """``"40:25, 90:-30"`` -> ((40, 25.0), (90, -30.0))."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        a, _, b = item.partition(":")
        out.append((int(a), float(b)))
    return tuple(out)


def _clamp(v: float, depth_px: int) -> float:
    return min(max(v, 0.0), math.nextafter(float(depth_px), 0.0))


def ground_truth(scene: SyntheticScene, k: int) -> tuple[float, float]:
    if not 0 <= k < scene.width_px:
        raise IndexError(f"column {k} outside [0, {scene.width_px})")
    common = scene.motion_amplitude * math.sin(2 * math.pi * k / scene.motion_period)
    common += scene.drift_per_column * k
    return (
        _clamp(scene.epi_base + common, scene.depth_px),
        _clamp(scene.dm_base + common, scene.depth_px),
    )


def truth_array(scene: SyntheticScene) -> np.ndarray:
    """Shape ``(width_px, 2)``: epithelium and DM depth per column."""
    return np.array([ground_truth(scene, k) for k in range(scene.width_px)], dtype=np.float64)


def render_frame(scene: SyntheticScene) -> tuple[MScanFrame, np.ndarray]:
    truth = truth_array(scene)
    rng = np.random.default_rng(scene.seed)
    rows = np.arange(scene.depth_px, dtype=np.float64)[:, None]
    noise = rng.normal(0.0, scene.background_noise_sigma, (scene.depth_px, scene.width_px))
    data = np.clip(noise, 0.0, None) if scene.background_noise_sigma > 0 else np.zeros_like(noise)
    amp = np.full(scene.width_px, scene.band_intensity)
    for start, end in scene.dropout_intervals:
        amp[start:end] = 0.0
    two_s2 = 2.0 * scene.band_sigma**2
    for j in range(2):
        data += amp * np.exp(-((rows - truth[:, j]) ** 2) / two_s2)
    return MScanFrame(data), truth


def preset(regime: Regime | str, seed: int = 0, width_px: int = 512, depth_px: int = 512) -> SyntheticScene:
    """Scene analogue of one failure regime.

    Jag columns for ``DROPOUT_JAGGED`` are drawn from ``seed`` and kept
    outside the dropout intervals.
    """
    if isinstance(regime, str):
        regime = Regime.parse(regime)
    scale = width_px / 512.0
    base = SyntheticScene(width_px=width_px, depth_px=depth_px, seed=seed)
    if regime is Regime.CLEAN:
        return base.replace(sigma_obs=0.5, background_noise_sigma=2.0)
    if regime is Regime.LOW_SNR:
        return base.replace(sigma_obs=3.0, background_noise_sigma=30.0, band_intensity=120.0)
    if regime is Regime.MOTION:
        return base.replace(motion_amplitude=15.0, motion_period=200.0, sigma_obs=1.5)
    starts = [int(s * scale) for s in (140, 280, 420)]
    intervals = tuple((s, min(s + 20, width_px)) for s in starts)
    rng = np.random.default_rng(seed)
    allowed = [k for k in range(1, width_px) if not any(a <= k < b for a, b in intervals)]
    cols = np.sort(rng.choice(allowed, size=min(10, len(allowed)), replace=False))
    amps = rng.uniform(20.0, 40.0, size=cols.size)
    jags = tuple((int(c), float(a)) for c, a in zip(cols, amps))
    return base.replace(sigma_obs=1.5, dropout_intervals=intervals, jag_events=jags)
