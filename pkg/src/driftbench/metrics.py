"""Regret, reward and complexity accounting over run traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass
class RunTrace:
    """Per-round record of one policy run.

    ``actions`` are 0-based expert indices. ``obtained`` is ``r_t(x_t)`` in
    sampled mode, or the distribution-weighted reward when ``fractional``.
    """

    policy: str
    rewards: np.ndarray
    actions: np.ndarray
    obtained: np.ndarray
    ops: np.ndarray
    levels: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    fractional: bool = False
    seed: Optional[int] = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.actions)

    @property
    def K(self) -> int:
        return self.rewards.shape[1]


@dataclass(frozen=True)
class ReplicationStats:
    mean: float
    std: float
    n: int


def _boundaries_of(truth) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(truth.boundaries, dtype=np.int64), np.asarray(truth.best, dtype=np.int64)


def best_expert_per_round(truth, T: int) -> np.ndarray:
    bounds, best = _boundaries_of(truth)
    if bounds[-1] != T:
        raise ValueError(f"segments cover {bounds[-1]} rounds but trace has {T}")
    return np.repeat(best, np.diff(bounds))


def realized_regret(trace: RunTrace, truth) -> float:
    """Sum over rounds of ``r_t(k*_i) - obtained_t`` where ``k*_i`` is the segment's best expert."""
    T = len(trace)
    kstar = best_expert_per_round(truth, T)
    best_rewards = trace.rewards[np.arange(T), kstar]
    return float(np.sum(best_rewards) - np.sum(trace.obtained))


def oracle_reward(trace: RunTrace, truth) -> float:
    T = len(trace)
    kstar = best_expert_per_round(truth, T)
    return float(np.sum(trace.rewards[np.arange(T), kstar]))


def total_reward(trace: RunTrace | Sequence[float]) -> float:
    obtained = trace.obtained if isinstance(trace, RunTrace) else trace
    return float(np.sum(np.asarray(obtained, dtype=float)))


def relative_lift(candidate: float, baseline: float) -> float:
    """Improvement of ``candidate`` over ``baseline``, in percent."""
    if not baseline > 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return 100.0 * (candidate - baseline) / baseline


def cumulative_reward_diff(rewards) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 2 or r.shape[1] != 2:
        raise ValueError(f"need a (T, 2) reward array, got shape {r.shape}")
    return np.cumsum(r[:, 0] - r[:, 1])


def aggregate(values: Sequence[float]) -> ReplicationStats:
    """Mean and sample standard deviation (``n - 1`` denominator, 0 for a single value)."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("cannot aggregate an empty list")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return ReplicationStats(mean=float(np.mean(v)), std=std, n=int(v.size))


def complexity_profile(trace: RunTrace) -> list[tuple[int, int]]:
    """``(t, accumulator updates)`` for every round, t starting at 1."""
    return [(i + 1, int(c)) for i, c in enumerate(trace.ops)]


def fits_log_growth(profile, K: int) -> bool:
    return all(c == K * t.bit_length() for t, c in profile)

