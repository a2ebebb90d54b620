"""Command-line entry point: ``octrack synth | track | eval | bench``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import gc
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .config import ENV_VAR, load_config
from .evaluation import EvalConfig, compare
from .kalman import FilterParams
from .observers import DetectorConfig, ObservationReplay, detect_frame, oracle_pairs
from .signal_model import LAYERS, LayerId, OctrackError
from .synth import SyntheticScene, preset, render_frame, truth_array
from .tracker import LayerTrack, track_pairs
from .window import WindowConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunManifest:
    source_kind: str  # "frame" | "obs" | "preset"
    source: str
    pipeline: str = "kdh"
    config_path: str | None = None
    out: Path | None = None
    seed: int | None = None
    columns: int | None = None

    @classmethod
    def parse_source(cls, text: str, **kw) -> "RunManifest":
        kind, sep, value = text.partition(":")
        if not sep or kind not in ("frame", "obs", "preset") or not value:
            raise UsageError(f"--source must be frame:<path>, obs:<path> or preset:<name>, got {text!r}")
        return cls(kind, value, **kw)


def _scene(name: str, config: dict, seed: int | None, columns: int | None = None) -> SyntheticScene:
    try:
        width = int(config.get("width_px", columns or 512))
        scene = preset(name, seed=0 if seed is None else seed, width_px=width,
                       depth_px=int(config.get("depth_px", 512)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scene = SyntheticScene.from_config(config, scene)
    if seed is not None:
        scene = scene.replace(seed=seed)
    return scene


def load_pairs(m: RunManifest, config: dict):
    """Observation pairs and (when known) truth for a manifest's source."""
    if m.source_kind == "preset":
        scene = _scene(m.source, config, m.seed, m.columns)
        return list(oracle_pairs(scene)), truth_array(scene)
    if m.source_kind == "obs":
        with ObservationReplay(m.source) as reader:
            return list(reader), None
    frame = io.read_frame(m.source)
    return list(detect_frame(frame, DetectorConfig.from_config(config))), None


def _filter_settings(config: dict):
    return FilterParams.from_config(config), WindowConfig.from_config(config)


# -- subcommands --------------------------------------------------------------

def cmd_synth(args, config) -> int:
    scene = _scene(args.preset, config, args.seed)
    frame, truth = render_frame(scene)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "pgm":
        io.write_pgm(out.with_name(out.name + ".pgm"), io.quantize(frame))
    else:
        io.write_raw(out.with_name(out.name + ".raw"), frame)
    io.write_truth(out.with_name(out.name + ".truth.csv"), truth)
    io.write_observations(out.with_name(out.name + ".obs.csv"), oracle_pairs(scene))
    return EXIT_OK


def cmd_track(args, config) -> int:
    m = _manifest(args)
    pairs, truth = load_pairs(m, config)
    params, window = _filter_settings(config)
    traces = track_pairs(pairs, m.pipeline, params, window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for layer, trace in traces.items():
        io.write_trace(out / f"{layer.value}.trace.csv", trace.raw_depths, trace.filtered, trace.gain)
    if truth is not None:
        io.write_truth(out / "truth.csv", truth)
    return EXIT_OK


def _layer_of(path: Path) -> LayerId:
    for layer in LAYERS:
        if path.name.startswith(layer.value + ".") or f".{layer.value}." in path.name:
            return layer
    raise UsageError(f"cannot tell the layer of {path}; name it <layer>.trace.csv")


def cmd_eval(args, config) -> int:
    truth = io.read_truth(args.truth)
    raw, kdh, tru = {}, {}, {}
    for p in map(Path, args.traces):
        layer = _layer_of(p)
        trace = io.read_trace(p)
        n = len(trace["raw_px"])
        if n != len(truth):
            raise io.FormatError(
                f"{p}: {n} trace rows vs {len(truth)} truth rows", column=min(n, len(truth))
            )
        raw[layer], kdh[layer] = trace["raw_px"], trace["filtered_px"]
        tru[layer] = truth[:, LAYERS.index(layer)]
    if not tru:
        raise UsageError("no trace files given")
    um = float(config.get("um_per_px", EvalConfig().um_per_px))
    result = compare(raw, kdh, tru, EvalConfig(um))
    print(result.table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(result.to_json() + "\n")
        (out / "report.txt").write_text(result.table() + "\n")
    else:
        print(result.to_json())
    return EXIT_OK


def _time_loop(pairs, pipeline, params, window) -> float:
    ta, tb = LayerTrack(pipeline, params, window), LayerTrack(pipeline, params, window)
    sa, sb = ta.step, tb.step
    t0 = time.perf_counter()
    for a, b in pairs:
        sa(a)
        sb(b)
    return time.perf_counter() - t0


def _latencies(pairs, pipeline, params, window) -> np.ndarray:
    ta, tb = LayerTrack(pipeline, params, window), LayerTrack(pipeline, params, window)
    sa, sb = ta.step, tb.step
    clock = time.perf_counter_ns
    out = np.empty(len(pairs), dtype=np.int64)
    for i, (a, b) in enumerate(pairs):
        t0 = clock()
        sa(a)
        sb(b)
        out[i] = clock() - t0
    return out


def bench(pairs, pipeline="kdh", params=FilterParams(), window=WindowConfig(), repetitions=3) -> dict:
    """Time the tracking loop only; building ``pairs`` is the caller's business.

    Runs over ``n`` and ``2n`` columns are interleaved. Throughput comes
    from the median ``n`` run; the scaling ratio compares summed ``2n`` and
    ``n`` times so run-to-run jitter averages out.
    """
    if repetitions < 1:
        raise UsageError("repetitions must be >= 1")
    doubled = pairs + pairs
    single, double = [], []
    gc_was = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repetitions):
            single.append(_time_loop(pairs, pipeline, params, window))
            double.append(_time_loop(doubled, pipeline, params, window))
        lat = _latencies(pairs, pipeline, params, window)
    finally:
        if gc_was:
            gc.enable()
    n = len(pairs)
    t_med = float(np.median(single))
    t1, t2 = float(sum(single)), float(sum(double))
    return {
        "pipeline": pipeline,
        "n_columns": n,
        "repetitions": repetitions,
        "median_seconds": t_med,
        "best_seconds": min(single),
        "columns_per_second": n / t_med,
        "latency_us": {
            "p50": float(np.percentile(lat, 50)) / 1e3,
            "p99": float(np.percentile(lat, 99)) / 1e3,
        },
        "scaling": {"total_seconds_n": t1, "total_seconds_2n": t2, "time_ratio": t2 / t1 if t1 > 0 else None},
    }


def cmd_bench(args, config) -> int:
    m = _manifest(args)
    pairs, _ = load_pairs(m, config)
    if args.columns and m.source_kind != "preset" and len(pairs) < args.columns:
        reps = -(-args.columns // len(pairs))
        pairs = (pairs * reps)[: args.columns]
    params, window = _filter_settings(config)
    report = bench(pairs, m.pipeline, params, window, args.repetitions)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(text + "\n")
    return EXIT_OK


def _manifest(args) -> RunManifest:
    return RunManifest.parse_source(
        args.source,
        pipeline=args.pipeline,
        config_path=args.config,
        out=Path(args.out) if args.out else None,
        seed=args.seed,
        columns=getattr(args, "columns", None),
    )


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help=f"key=value config file (fallback: ${ENV_VAR})")
    shared.add_argument("--seed", type=int, help="seed for synthetic scenes and noise")

    parser = _Parser(prog="octrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[shared], help="render a synthetic scene")
    p.add_argument("--preset", required=True, help="clean | lowsnr | motion | dropoutjagged")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--format", choices=("pgm", "raw"), default="pgm")
    p.set_defaults(func=cmd_synth)

    for name, func, hlp in (("track", cmd_track, "run a tracking pipeline"),
                            ("bench", cmd_bench, "measure tracking throughput")):
        p = sub.add_parser(name, parents=[shared], help=hlp)
        p.add_argument("--source", required=True, help="frame:<path> | obs:<path> | preset:<name>")
        p.add_argument("--pipeline", choices=("raw", "kalman", "kdh"), default="kdh")
        p.add_argument("--out", required=(name == "track"), help="output directory")
        p.add_argument("--columns", type=int, help="number of columns (preset width, or tile other sources)")
        if name == "bench":
            p.add_argument("--repetitions", type=int, default=3)
        p.set_defaults(func=func)

    p = sub.add_parser("eval", parents=[shared], help="score traces against truth")
    p.add_argument("traces", nargs="+", help="<layer>.trace.csv files")
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="directory for report.json and report.txt")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UsageError as exc:
        print(f"octrack: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OctrackError, ValueError, OSError, IndexError) as exc:
        print(f"octrack: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
