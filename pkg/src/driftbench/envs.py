"""Reward environments: segmented Bernoulli, thresholded time series, raw replay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


SWEEP_KINDS = ("gap", "shifts", "seglen", "experts", "scaledN", "scaledDelta", "scaledBoth")

DEFAULT_SWEEPS = {
    "gap": (0.06, 0.17, 0.28, 0.39, 0.5),
    "shifts": (2, 4, 8, 16, 32),
    "seglen": (10, 100, 1000, 10000),
    "experts": (2, 4, 8, 16, 32),
    "scaledN": (1000, 4000, 16000, 64000),
    "scaledDelta": (1000, 4000, 16000, 64000),
    "scaledBoth": (1000, 4000, 16000, 64000),
}

SEGMENT_LENGTH = 800


@dataclass(frozen=True)
class SegmentTruth:
    boundaries: tuple[int, ...]
    best: tuple[int, ...]
    gaps: tuple[float, ...]

    @property
    def delta(self) -> float:
        return min(self.gaps)


@dataclass(frozen=True)
class SegmentedBernoulliSpec:
    """Piecewise-stationary Bernoulli rewards; ``segments`` holds ``(length, means)`` pairs."""

    segments: tuple[tuple[int, tuple[float, ...]], ...]

    def __post_init__(self):
        segs = tuple((int(n), tuple(float(p) for p in ps)) for n, ps in self.segments)
        if not segs:
            raise ValueError("need at least one segment")
        K = len(segs[0][1])
        if K < 2:
            raise ValueError("need at least 2 experts")
        for i, (n, ps) in enumerate(segs):
            if n < 1:
                raise ValueError(f"segment {i} has length {n}")
            if len(ps) != K:
                raise ValueError(f"segment {i} has {len(ps)} means, expected {K}")
            if not all(0.0 <= p <= 1.0 for p in ps):
                raise ValueError(f"segment {i} means outside [0, 1]: {ps}")
        object.__setattr__(self, "segments", segs)

    @property
    def K(self) -> int:
        return len(self.segments[0][1])

    @property
    def N(self) -> int:
        return len(self.segments)

    @property
    def T(self) -> int:
        return self.boundaries[-1]

    @property
    def boundaries(self) -> tuple[int, ...]:
        out = [0]
        for n, _ in self.segments:
            out.append(out[-1] + n)
        return tuple(out)

    def means(self) -> np.ndarray:
        return np.array([ps for _, ps in self.segments])

    def truth(self) -> SegmentTruth:
        best, gaps = [], []
        for _, ps in self.segments:
            p = np.asarray(ps)
            k = int(np.argmax(p))
            best.append(k)
            gaps.append(float(p[k] - np.max(np.delete(p, k))))
        return SegmentTruth(self.boundaries, tuple(best), tuple(gaps))

    def segment_of(self, t: int) -> int:
        """0-based index i of the segment with ``tau_{i-1} < t <= tau_i``."""
        if not 1 <= t <= self.T:
            raise ValueError(f"t={t} outside [1, {self.T}]")
        return int(np.searchsorted(self.boundaries, t, side="left")) - 1

    def round_means(self) -> np.ndarray:
        return np.repeat(self.means(), [n for n, _ in self.segments], axis=0)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """All ``T`` reward vectors at once; same draws as calling :func:`bernoulli_step` for t = 1..T."""
        return (rng.random((self.T, self.K)) < self.round_means()).astype(np.float64)


def bernoulli_step(spec: SegmentedBernoulliSpec, truth, t: int, rng: np.random.Generator) -> np.ndarray:
    ps = np.asarray(spec.segments[spec.segment_of(t)][1])
    return (rng.random(spec.K) < ps).astype(np.float64)


def _alternating(lengths: Sequence[int], delta: float) -> SegmentedBernoulliSpec:
    hi, lo = 0.5 + delta / 2, 0.5 - delta / 2
    segs = [(n, (hi, lo) if i % 2 == 0 else (lo, hi)) for i, n in enumerate(lengths)]
    return SegmentedBernoulliSpec(tuple(segs))


def _uniform(n_segments: int, K: int, rng: np.random.Generator) -> SegmentedBernoulliSpec:
    means = rng.random((n_segments, K))
    return SegmentedBernoulliSpec(tuple((SEGMENT_LENGTH, tuple(row)) for row in means))


def _even_split(T: int, N: int) -> list[int]:
    base, extra = divmod(T, N)
    return [base + (1 if i < extra else 0) for i in range(N)]


def make_sweep_spec(kind: str, value, rng: Optional[np.random.Generator] = None) -> SegmentedBernoulliSpec:
    """Environment for one point of a synthetic sweep.

    ``shifts`` and ``experts`` draw their means from ``rng``; the others are
    deterministic. Scaled kinds take the horizon ``T`` as the swept value.
    """
    if kind == "gap":
        return _alternating([SEGMENT_LENGTH] * 2, float(value))
    if kind == "seglen":
        n = int(value)
        return SegmentedBernoulliSpec(((n, (0.7, 0.5)), (n, (0.5, 0.7))))
    if kind in ("shifts", "experts"):
        if rng is None:
            raise ValueError(f"{kind} sweep draws random means and needs an rng")
        if kind == "shifts":
            return _uniform(int(value), 2, rng)
        return _uniform(2, int(value), rng)
    if kind in ("scaledN", "scaledDelta", "scaledBoth"):
        T = int(value)
        root = math.sqrt(T)
        N = 10 if kind == "scaledDelta" else max(1, round(root))
        delta = 0.1 if kind == "scaledN" else 1.0 / root
        if N > T:
            raise ValueError(f"T={T} too small for {N} segments")
        return _alternating(_even_split(T, N), delta)
    raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")


def synthetic_sweep_specs(kind: str, values=None, rng: Optional[np.random.Generator] = None) -> list[SegmentedBernoulliSpec]:
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")
    values = DEFAULT_SWEEPS[kind] if values is None else values
    return [make_sweep_spec(kind, v, rng) for v in values]


@dataclass(frozen=True)
class ThresholdReplaySpec:
    series: tuple[float, ...]
    threshold: float

    def __post_init__(self):
        s = tuple(float(v) for v in self.series)
        if not s:
            raise ValueError("series is empty")
        if any(math.isnan(v) for v in s):
            raise ValueError("series contains NaN; filter missing values first")
        object.__setattr__(self, "series", s)


def threshold_rewards(spec: ThresholdReplaySpec) -> np.ndarray:
    """``(T, 2)`` rewards: column 0 predicts "above" (``v > threshold``), column 1 "below"."""
    v = np.asarray(spec.series)
    above = v > spec.threshold
    return np.column_stack([above, ~above]).astype(np.float64)


def replay_rewards(rows) -> np.ndarray:
    """Validate pre-normalized reward rows; errors name the 1-based row."""
    rows = list(rows)
    if not rows:
        raise ValueError("no reward rows")
    K = len(rows[0])
    if K < 2:
        raise ValueError("need at least 2 experts per row")
    out = np.empty((len(rows), K))
    for i, row in enumerate(rows, start=1):
        if len(row) != K:
            raise ValueError(f"row {i}: expected {K} entries, got {len(row)}")
        for k, v in enumerate(row):
            v = float(v)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"row {i}: entry {k + 1} = {v} outside [0, 1]")
            out[i - 1, k] = v
    return out


def square_wave(period: int = 200, T: int = 4000, high: float = 1.0, low: float = 0.0) -> np.ndarray:
    """Deterministic series alternating ``high``/``low`` every half period."""
    t = np.arange(T)
    return np.where((t % period) < period // 2, high, low).astype(np.float64)
