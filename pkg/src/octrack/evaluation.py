"""Boundary error metrics: mean absolute error, unit conversion, reductions, jaggedness."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .signal_model import LAYERS, LayerId

UM_PER_PX = 2.61


@dataclass(frozen=True)
class EvalConfig:
    um_per_px: float = UM_PER_PX

    def __post_init__(self):
        if not self.um_per_px > 0:
            raise ValueError("um_per_px must be positive")


@dataclass(frozen=True)
class EvalReport:
    layer: LayerId
    mae_px: float
    mae_um: float
    n_columns: int
    jaggedness_px: float


def _pair(estimates, truth) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(estimates, dtype=np.float64).ravel()
    tru = np.asarray(truth, dtype=np.float64).ravel()
    if est.shape != tru.shape:
        raise ValueError(f"length mismatch: {est.size} estimates vs {tru.size} truth values")
    if est.size == 0:
        raise ValueError("empty input")
    return est, tru


def mean_abs_error(estimates, truth) -> float:
    est, tru = _pair(estimates, truth)
    return float(np.mean(np.abs(est - tru)))


def px_to_um(px: float, cfg: EvalConfig = EvalConfig()) -> float:
    return px * cfg.um_per_px


def reduction_pct(baseline_mae: float, method_mae: float) -> float:
    if not baseline_mae > 0:
        raise ValueError(f"baseline error must be positive, got {baseline_mae!r}")
    return 100.0 * (baseline_mae - method_mae) / baseline_mae


def jaggedness(estimates) -> float:
    """Mean absolute first difference of a trace."""
    est = np.asarray(estimates, dtype=np.float64).ravel()
    if est.size < 2:
        raise ValueError("jaggedness needs at least two points")
    return float(np.mean(np.abs(np.diff(est))))


def evaluate(layer: LayerId, estimates, truth, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Score one trace. NaN estimates (no output on that column) are skipped."""
    est, tru = _pair(estimates, truth)
    emitted = ~np.isnan(est)
    if not emitted.any():
        raise ValueError(f"{layer.value}: trace has no estimates")
    mae = mean_abs_error(est[emitted], tru[emitted])
    jag = jaggedness(est[emitted]) if emitted.sum() >= 2 else 0.0
    return EvalReport(layer, mae, px_to_um(mae, cfg), int(emitted.sum()), jag)


@dataclass(frozen=True)
class Comparison:
    raw: dict[LayerId, EvalReport]
    kdh: dict[LayerId, EvalReport]
    reduction: dict[LayerId, float]

    def to_json(self) -> str:
        rows = []
        for pipeline, reports in (("raw", self.raw), ("kdh", self.kdh)):
            for layer, rep in reports.items():
                row = asdict(rep)
                row["layer"] = layer.value
                row["pipeline"] = pipeline
                red = self.reduction[layer]
                row["reduction_pct"] = round(red, 2) if pipeline == "kdh" and math.isfinite(red) else None
                rows.append(row)
        return json.dumps(rows, indent=2)

    def table(self) -> str:
        names = {LayerId.EPITHELIUM: "Epithelium", LayerId.DM: "DM"}
        layers = [l for l in LAYERS if l in self.raw]
        head = ["Approach"] + [f"Average {names[l]} Error" for l in layers]
        body = []
        for label, reports in (("KDH", self.kdh), ("Raw", self.raw)):
            cells = [label]
            for l in layers:
                r = reports[l]
                cells.append(f"{r.mae_px:.2f} pixel  {r.mae_um:.4f} um")
            body.append(cells)
        body.append(["Reduction"] + [f"{self.reduction[l]:.2f}%" for l in layers])
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        fmt = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
        rule = "  ".join("-" * w for w in widths)
        return "\n".join([fmt(head), rule] + [fmt(r) for r in body])


def compare(
    raw: Mapping[LayerId, np.ndarray],
    kdh: Mapping[LayerId, np.ndarray],
    truth: Mapping[LayerId, np.ndarray],
    cfg: EvalConfig = EvalConfig(),
) -> Comparison:
    """Score raw and KDH traces against truth per layer.

    Raw traces have NaN on dropout columns and are scored on emitted
    columns only; KDH traces carry predict-only estimates there, which count.
    """
    raw_r, kdh_r, red = {}, {}, {}
    for layer in LAYERS:
        if layer not in truth:
            continue
        raw_r[layer] = evaluate(layer, raw[layer], truth[layer], cfg)
        kdh_r[layer] = evaluate(layer, kdh[layer], truth[layer], cfg)
        base = raw_r[layer].mae_px
        red[layer] = reduction_pct(base, kdh_r[layer].mae_px) if base > 0 else (
            0.0 if kdh_r[layer].mae_px == 0 else -math.inf
        )
    return Comparison(raw_r, kdh_r, red)
