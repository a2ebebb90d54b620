"""Kalman-filter boundary tracking for M-mode OCT epithelium and DM traces."""
from .evaluation import EvalConfig, EvalReport, compare, jaggedness, mean_abs_error, px_to_um, reduction_pct
from .kalman import FilterParams, KalmanState, init_state, predict, steady_state, step, update
from .observers import DetectorConfig, GradientPeakDetector, ObservationReplay, detect_boundaries, noisy_oracle, oracle_pairs
from .patcher import Patch, PatchConfig, PatchNormalizer, compute_norm_stats, extract_patches, reassemble
from .signal_model import (
    LAYERS,
    AScanColumn,
    BoundaryObservation,
    BoundaryTrace,
    LayerId,
    MScanFrame,
    Status,
    validate_frame,
)
from .synth import Regime, SyntheticScene, ground_truth, preset, render_frame, truth_array
from .tracker import BoundaryTracker, LayerTrack, track_pairs
from .window import WindowConfig, WindowState, effective_observation, kdh_step, push

__version__ = "0.1.0"
