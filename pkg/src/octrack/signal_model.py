"""Shared data vocabulary: A-scan columns, M-scan frames, observations, traces.

Depth is measured in pixels with row 0 at the top of the image, so the
epithelium always sits above (has a smaller depth than) Descemet's membrane.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_WIDTH_PX = 512
DEFAULT_DEPTH_PX = 512


class OctrackError(Exception):
    """Base class for data errors raised by this package."""


class DimensionMismatchError(OctrackError, ValueError):
    def __init__(self, column: int, expected: int, got: int):
        self.column = column
        super().__init__(
            f"column {column}: expected {expected} depth samples, got {got}"
        )


class NonFiniteError(OctrackError, ValueError):
    pass


class FormatError(OctrackError, ValueError):
    """Malformed file content; ``column`` / ``line`` locate the problem when known."""

    def __init__(self, message: str, *, column: int | None = None, line: int | None = None):
        self.column = column
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class LayerId(enum.Enum):
    EPITHELIUM = "epithelium"
    DM = "dm"

    @classmethod
    def parse(cls, text: str) -> "LayerId":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown layer {text!r}") from None


LAYERS = (LayerId.EPITHELIUM, LayerId.DM)


class Status(enum.Enum):
    VALID = "valid"
    DROPOUT = "dropout"


class AScanColumn(NamedTuple):
    index: int
    intensities: np.ndarray


class BoundaryObservation(NamedTuple):
    """One raw per-column depth for one layer.

    ``depth_px`` carries no meaning when ``status`` is DROPOUT and is set to NaN.
    """

    layer: LayerId
    column_index: int
    depth_px: float
    status: Status = Status.VALID

    @property
    def is_valid(self) -> bool:
        return self.status is Status.VALID

    @classmethod
    def dropout(cls, layer: LayerId, column_index: int) -> "BoundaryObservation":
        return cls(layer, column_index, math.nan, Status.DROPOUT)


@dataclass(frozen=True)
class MScanFrame:
    """A depth x time intensity grid; ``data[row, column]``."""

    data: np.ndarray

    @property
    def depth_px(self) -> int:
        return self.data.shape[0]

    @property
    def width_px(self) -> int:
        return self.data.shape[1]

    def column(self, k: int) -> AScanColumn:
        return AScanColumn(k, self.data[:, k])

    def columns(self):
        for k in range(self.width_px):
            yield self.column(k)

    @classmethod
    def from_columns(cls, columns: Sequence) -> "MScanFrame":
        return validate_frame(columns)


@dataclass(frozen=True)
class BoundaryTrace:
    layer: LayerId
    raw: tuple[BoundaryObservation, ...]
    filtered: np.ndarray
    gain: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (len(self.raw) == len(self.filtered) == len(self.gain)):
            raise ValueError("raw, filtered and gain must have equal length")

    def __len__(self) -> int:
        return len(self.raw)

    @property
    def raw_depths(self) -> np.ndarray:
        """Raw depths with NaN on dropout columns."""
        return np.array([o.depth_px if o.is_valid else np.nan for o in self.raw])


def validate_frame(frame) -> MScanFrame:
    """Check a frame (or a sequence of columns) against the frame invariants.

    Accepts an :class:`MScanFrame`, a 2-D array laid out depth x width, or a
    sequence of columns (1-D arrays or :class:`AScanColumn`). Ragged columns
    raise :class:`DimensionMismatchError` naming the first offending column.
    """
    if isinstance(frame, MScanFrame):
        data = frame.data
    elif isinstance(frame, np.ndarray):
        data = frame
    else:
        cols = []
        depth = None
        for k, col in enumerate(frame):
            if isinstance(col, AScanColumn):
                if col.index != k:
                    raise FormatError(f"non-consecutive column index {col.index}", column=k)
                col = col.intensities
            col = np.asarray(col, dtype=np.float64)
            if col.ndim != 1:
                raise DimensionMismatchError(k, depth or 0, col.size)
            if depth is None:
                depth = col.shape[0]
            elif col.shape[0] != depth:
                raise DimensionMismatchError(k, depth, col.shape[0])
            cols.append(col)
        if not cols:
            raise ValueError("frame has no columns")
        data = np.stack(cols, axis=1)

    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise ValueError(f"frame must be a non-empty 2-D grid, got shape {data.shape}")
    finite = np.isfinite(data)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise NonFiniteError(f"non-finite sample at row {row}, column {col}")
    if (data < 0).any():
        row, col = np.argwhere(data < 0)[0]
        raise ValueError(f"negative intensity at row {row}, column {col}")
    if isinstance(frame, MScanFrame):
        return frame
    return MScanFrame(data)
