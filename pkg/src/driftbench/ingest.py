"""Load measurement series from delimited text files."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesSource:
    path: Union[str, Path]
    column: Union[str, int]
    delimiter: str = ","
    missing_tokens: frozenset = field(default_factory=lambda: frozenset({"", "NA", "NaN", "nan", "?"}))
    header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError(f"delimiter must be a single character, got {self.delimiter!r}")


@dataclass(frozen=True)
class Preset:
    column: str
    delimiter: str
    missing: frozenset
    threshold: float


# UCI "Beijing PM2.5 Data" and "Individual household electric power consumption".
PRESETS = {
    "pm25": Preset("pm2.5", ",", frozenset({"NA"}), 75.0),
    "power": Preset("Global_active_power", ";", frozenset({"?"}), 0.5),
}


def preset_source(name: str, path) -> SeriesSource:
    p = PRESETS[name]
    return SeriesSource(path, p.column, p.delimiter, p.missing, header=True)


def _resolve_column(column, header_row, path) -> int:
    if isinstance(column, int):
        idx = column
    elif header_row is not None and column in header_row:
        return header_row.index(column)
    elif isinstance(column, str) and column.lstrip("-").isdigit():
        idx = int(column)
    else:
        raise ValueError(f"{path}: column {column!r} not found in header {header_row}")
    if header_row is not None and not 0 <= idx < len(header_row):
        raise ValueError(f"{path}: column index {idx} out of range for {len(header_row)} columns")
    return idx


def load_series(src: SeriesSource) -> tuple[list[float], int]:
    """Return ``(values, skipped)``; rows with a missing or unparseable measurement are skipped."""
    path = Path(src.path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    values: list[float] = []
    skipped = 0
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=src.delimiter)
        header_row = None
        if src.header:
            header_row = [h.strip() for h in next(reader, [])]
            if not header_row:
                raise ValueError(f"{path}: empty file")
        idx = _resolve_column(src.column, header_row, path)
        for row in reader:
            if not row:
                continue
            if idx >= len(row):
                skipped += 1
                continue
            cell = row[idx].strip()
            if cell in src.missing_tokens:
                skipped += 1
                continue
            try:
                v = float(cell)
            except ValueError:
                skipped += 1
                continue
            if not math.isfinite(v):
                skipped += 1
                continue
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no parseable values in column {src.column!r}")
    return values, skipped


def rounded_median(values) -> float:
    """Lower-middle median rounded to the nearest integer, halves away from zero."""
    v = sorted(values)
    if not v:
        raise ValueError("median of empty list")
    m = v[(len(v) - 1) // 2]
    return math.copysign(math.floor(abs(m) + 0.5), m)


def resolve_threshold(name: str, values) -> float:
    """Preset threshold, logging when the data's rounded median disagrees with it."""
    p = PRESETS[name]
    med = rounded_median(values)
    if name == "pm25" and med != p.threshold:
        log.warning("pm25 rounded median is %s; using the preset threshold %s", med, p.threshold)
    return p.threshold
