"""Readers and writers for frames, observations, truth and trace files."""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .signal_model import (
    BoundaryObservation,
    FormatError,
    LayerId,
    MScanFrame,
    Status,
    validate_frame,
)

RAW_MAGIC = b"MSCN"
_RAW_HEADER = struct.Struct("<4sIII")

OBS_HEADER = ["layer", "column", "depth_px", "status"]
TRUTH_HEADER = ["column", "epi_px", "dm_px"]
TRACE_HEADER = ["column", "raw_px", "filtered_px", "gain", "status"]


# -- frames -----------------------------------------------------------------

def write_pgm(path, frame: MScanFrame) -> None:
    """Write a binary (P5) PGM; 8-bit when all values fit, otherwise 16-bit.

    Intensities must already be integers in [0, 65535].
    """
    data = frame.data
    if not np.array_equal(data, np.round(data)):
        raise ValueError("PGM requires integer intensities; quantize first or use raw")
    vmax = int(data.max()) if data.size else 0
    if vmax > 65535 or data.min() < 0:
        raise ValueError("PGM intensities must lie in [0, 65535]")
    maxval = 255 if vmax <= 255 else 65535
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    header = f"P5\n{frame.width_px} {frame.depth_px}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.astype(dtype).tobytes())


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[int], int]:
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        try:
            tokens.append(int(buf[start:pos]))
        except ValueError:
            raise FormatError(f"bad PGM header token {buf[start:pos]!r}") from None
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path) -> MScanFrame:
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5)")
    (width, depth, maxval), offset = _pgm_tokens(buf[2:], 3)
    offset += 2
    if not 0 < maxval <= 65535:
        raise FormatError(f"{path}: invalid maxval {maxval}")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    n = width * depth
    raster = np.frombuffer(buf, dtype=dtype, count=n, offset=offset) if n else None
    if raster is None or raster.size != n:
        raise FormatError(f"{path}: truncated raster")
    return MScanFrame(raster.reshape(depth, width).astype(np.float64))


def write_raw(path, frame: MScanFrame, flags: int = 0) -> None:
    """Write the ``MSCN`` float32 little-endian variant (row-major, depth rows)."""
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(RAW_MAGIC, frame.width_px, frame.depth_px, flags))
        fh.write(frame.data.astype("<f4").tobytes())


def read_raw(path) -> MScanFrame:
    buf = Path(path).read_bytes()
    if len(buf) < _RAW_HEADER.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, width, depth, _flags = _RAW_HEADER.unpack_from(buf)
    if magic != RAW_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _RAW_HEADER.size + 4 * width * depth
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    data = np.frombuffer(buf, dtype="<f4", offset=_RAW_HEADER.size)
    return validate_frame(data.reshape(depth, width).astype(np.float64))


def read_frame(path) -> MScanFrame:
    """Dispatch on the file's magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head[:2] == b"P5":
        return read_pgm(path)
    if head == RAW_MAGIC:
        return read_raw(path)
    raise FormatError(f"{path}: unrecognised frame format")


def quantize(frame: MScanFrame, maxval: int = 65535) -> MScanFrame:
    return MScanFrame(np.clip(np.round(frame.data), 0, maxval))


# -- observations ------------------------------------------------------------

def _fmt(x: float) -> str:
    return "" if x is None or math.isnan(x) else repr(float(x))


def write_observations(path, pairs: Iterable[Iterable[BoundaryObservation]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OBS_HEADER)
        for pair in pairs:
            for obs in pair:
                depth = _fmt(obs.depth_px) if obs.is_valid else ""
                w.writerow([obs.layer.value, obs.column_index, depth, obs.status.value])


def parse_observation_row(row: Mapping[str, str], line: int) -> BoundaryObservation:
    try:
        column = int(row["column"])
    except (TypeError, ValueError, KeyError):
        raise FormatError(f"bad column field {row.get('column')!r}", line=line) from None
    try:
        layer = LayerId.parse(row["layer"] or "")
        status = Status((row["status"] or "").strip().lower())
    except (ValueError, KeyError) as exc:
        raise FormatError(str(exc), column=column, line=line) from None
    if status is Status.DROPOUT:
        return BoundaryObservation.dropout(layer, column)
    try:
        depth = float(row["depth_px"])
    except (TypeError, ValueError):
        raise FormatError(f"bad depth {row['depth_px']!r}", column=column, line=line) from None
    if not math.isfinite(depth):
        raise FormatError("non-finite depth on a valid row", column=column, line=line)
    return BoundaryObservation(layer, column, depth, status)


def iter_observation_rows(fh) -> Iterator[BoundaryObservation]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != OBS_HEADER:
        raise FormatError(f"expected header {','.join(OBS_HEADER)}", line=1)
    for row in reader:
        if None in row or any(v is None for v in row.values()):
            raise FormatError("wrong number of fields", line=reader.line_num)
        yield parse_observation_row(row, reader.line_num)


# -- truth -------------------------------------------------------------------

def write_truth(path, truth: np.ndarray) -> None:
    """``truth`` has shape (n_columns, 2): epithelium, DM."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRUTH_HEADER)
        for k, (epi, dm) in enumerate(truth):
            w.writerow([k, repr(float(epi)), repr(float(dm))])


def read_truth(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRUTH_HEADER:
            raise FormatError(f"{path}: expected header {','.join(TRUTH_HEADER)}", line=1)
        for k, row in enumerate(reader):
            try:
                column = int(row["column"])
                epi, dm = float(row["epi_px"]), float(row["dm_px"])
            except (TypeError, ValueError):
                raise FormatError(f"{path}: malformed row", line=reader.line_num) from None
            if column != k:
                raise FormatError(f"{path}: expected column {k}", column=column, line=reader.line_num)
            rows.append((epi, dm))
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


# -- traces ------------------------------------------------------------------

def write_trace(path, raw: np.ndarray, filtered: np.ndarray, gain: np.ndarray) -> None:
    """One layer's trace; NaN in ``raw`` marks a dropout column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for k in range(len(raw)):
            status = Status.DROPOUT if math.isnan(raw[k]) else Status.VALID
            w.writerow([k, _fmt(raw[k]), _fmt(filtered[k]), _fmt(gain[k]), status.value])


def read_trace(path) -> dict[str, np.ndarray]:
    cols: dict[str, list[float]] = {"raw_px": [], "filtered_px": [], "gain": []}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise FormatError(f"{path}: expected header {','.join(TRACE_HEADER)}", line=1)
        for k, row in enumerate(reader):
            try:
                column = int(row["column"])
                for key in cols:
                    cols[key].append(float(row[key]) if row[key] else math.nan)
            except (TypeError, ValueError):
                raise FormatError(f"{path}: malformed row", line=reader.line_num) from None
            if column != k:
                raise FormatError(f"{path}: expected column {k}", column=column, line=reader.line_num)
    return {key: np.array(v, dtype=np.float64) for key, v in cols.items()}


# -- normalization sidecar ---------------------------------------------------

def write_norm_stats(path, mean: float, std: float) -> None:
    Path(path).write_text(f"mean={float(mean)!r}\nstd={float(std)!r}\n")


def read_norm_stats(path) -> tuple[float, float]:
    values = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}: expected key=value, got {line!r}")
        values[key.strip()] = float(value)
    try:
        return values["mean"], values["std"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing {exc.args[0]}") from None
