"""Dyadic interval algebra over 1-based time steps.

An interval at ``level`` n with ``index`` i covers ``[i * 2**n, (i + 1) * 2**n - 1]``.
Index 0 is excluded, so every time step t is covered by exactly
``floor(log2 t) + 1`` intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels


@dataclass(frozen=True, order=True)
class DyadicInterval:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be non-negative, got {self.level}")
        if self.index < 1:
            raise ValueError(f"index must be >= 1, got {self.index}")

    @property
    def start(self) -> int:
        return self.index << self.level

    @property
    def end(self) -> int:
        return ((self.index + 1) << self.level) - 1

    @property
    def length(self) -> int:
        return 1 << self.level

    def __contains__(self, t: int) -> bool:
        return self.start <= t <= self.end

    def as_tuple(self) -> tuple[int, int]:
        return (self.start, self.end)

    def __repr__(self):
        return f"[{self.start},{self.end}]"


@dataclass(frozen=True)
class TimeRange:
    first: int
    last: int

    def __post_init__(self):
        if self.first < 1:
            raise ValueError(f"time steps are 1-based, got first={self.first}")
        if self.last < self.first:
            raise ValueError(f"empty range [{self.first}, {self.last}]")

    @property
    def length(self) -> int:
        return self.last - self.first + 1


def _check_time(t: int) -> int:
    t = int(t)
    if t < 1:
        raise ValueError(f"time steps are 1-based, got t={t}")
    return t


def active_set(t: int) -> list[DyadicInterval]:
    """All dyadic intervals containing ``t``, ordered by increasing level."""
    t = _check_time(t)
    return [DyadicInterval(n, t >> n) for n in range(t.bit_length())]


def active_count(t: int) -> int:
    return _check_time(t).bit_length()


def geometric_cover(r: TimeRange | tuple[int, int]) -> list[DyadicInterval]:
    """Partition ``r`` into consecutive dyadic intervals.

    Greedy: at cursor ``a`` take the largest aligned block ``2**n`` (``2**n``
    divides ``a``) that still fits inside the range. Lengths first grow by
    doubling and then shrink, each at most half of the previous one.
    """
    if not isinstance(r, TimeRange):
        r = TimeRange(*r)
    levels = np.empty(2 * r.length.bit_length() + 2, dtype=np.int64)
    count = kernels.cover_levels(r.first, r.last, levels)
    out = []
    a = r.first
    for n in levels[:count].tolist():
        out.append(DyadicInterval(n, a >> n))
        a += 1 << n
    return out


def segment_ranges(boundaries: Sequence[int]) -> list[TimeRange]:
    """``(0, tau_1, ..., tau_N)`` -> ``[TimeRange(tau_{i-1}+1, tau_i)]``."""
    b = [int(x) for x in boundaries]
    if len(b) < 2 or b[0] != 0:
        raise ValueError("boundaries must start at 0 and contain at least one segment end")
    for lo, hi in zip(b, b[1:]):
        if hi <= lo:
            raise ValueError(f"boundaries must be strictly increasing, got {lo} then {hi}")
    return [TimeRange(lo + 1, hi) for lo, hi in zip(b, b[1:])]


def cover_of_segments(boundaries: Sequence[int], horizon: int | None = None) -> list[DyadicInterval]:
    """Concatenated geometric covers of every segment; a partition of ``[1, T]``."""
    ranges = segment_ranges(boundaries)
    if horizon is not None and ranges[-1].last != horizon:
        raise ValueError(f"last boundary {ranges[-1].last} does not match horizon {horizon}")
    out: list[DyadicInterval] = []
    for r in ranges:
        out.extend(geometric_cover(r))
    return out


def is_partition(pieces: Iterable[DyadicInterval], r: TimeRange) -> bool:
    cursor = r.first
    for p in pieces:
        if p.start != cursor:
            return False
        cursor = p.end + 1
    return cursor == r.last + 1
