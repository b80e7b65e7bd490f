"""Expert-selection policies: Follow-The-Leader, Follow-The-Best-Interval, AdaNormalHedge.

Each policy alternates ``choose()`` and ``update(rewards)`` once per round.
The per-round arithmetic lives in :mod:`driftbench.kernels`; :func:`run_policy`
drives a whole reward matrix through the same kernels without the Python
round-trip.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .dyadic import DyadicInterval
from .metrics import RunTrace

POLICIES = ("ftl", "ftbi", "anh")
ANH_MODES = ("sampled", "fractional")

# FTBI slot rows; enough for any t < 2**63.
_MAX_LEVELS = 63


@dataclass(frozen=True)
class Decision:
    expert: int
    interval: Optional[DyadicInterval] = None
    distribution: Optional[np.ndarray] = None


@dataclass(frozen=True)
class IntervalSlot:
    interval: DyadicInterval
    weights: np.ndarray


@dataclass(frozen=True)
class SleepingExpert:
    birth: int
    arm: int
    R: float
    C: float
    lifetime: int


def validate_rewards(r, K: int) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (K,):
        raise ValueError(f"expected {K} rewards, got shape {r.shape}")
    if not np.all((r >= 0.0) & (r <= 1.0)):
        raise ValueError(f"rewards must lie in [0, 1], got {r.tolist()}")
    return r


def validate_reward_matrix(rewards) -> np.ndarray:
    r = np.ascontiguousarray(rewards, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] < 2:
        raise ValueError(f"need a (T, K>=2) reward array, got shape {r.shape}")
    bad = ~((r >= 0.0) & (r <= 1.0))
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise ValueError(f"reward out of [0, 1] at round {row + 1}: {r[row].tolist()}")
    return r


def anh_potential(R: float, C: float) -> float:
    """AdaNormalHedge weight ``(Phi(R+1, C+1) - Phi(R-1, C+1)) / 2``.

    ``Phi(R, C) = exp(max(R, 0)**2 / (3 C))``. Overflows to ``inf`` for large
    ``R**2 / C``; the policies work with :func:`anh_log_potential` instead.
    """
    if C < 0:
        raise ValueError(f"C must be non-negative, got {C}")
    a = max(R + 1.0, 0.0) ** 2 / (3.0 * (C + 1.0))
    b = max(R - 1.0, 0.0) ** 2 / (3.0 * (C + 1.0))
    try:
        return 0.5 * (math.exp(a) - math.exp(b))
    except OverflowError:
        return math.inf


def anh_log_potential(R: float, C: float) -> float:
    return float(kernels.anh_log_weight(float(R), float(C)))


class Policy:
    name = "policy"

    def __init__(self, K: int, seed=None):
        if int(K) < 2:
            raise ValueError(f"need at least 2 experts, got K={K}")
        self.K = int(K)
        self.t = 1
        self.ops = 0
        self.rng = np.random.default_rng(seed)
        self._pending: Optional[Decision] = None

    def choose(self) -> Decision:
        if self._pending is not None:
            raise RuntimeError("choose() called twice without update()")
        self._pending = self._choose()
        return self._pending

    def update(self, rewards, decision: Optional[Decision] = None) -> None:
        if self._pending is None:
            raise RuntimeError("update() called before choose()")
        if decision is not None and decision is not self._pending:
            raise ValueError("decision does not belong to this round")
        r = validate_rewards(rewards, self.K)
        self.ops = self._update(r, self._pending)
        self._pending = None
        self.t += 1

    def _choose(self) -> Decision:
        raise NotImplementedError

    def _update(self, r, d) -> int:
        raise NotImplementedError


class FTL(Policy):
    """Plays the expert with the largest cumulative reward; ties to the lowest index."""

    name = "ftl"

    def __init__(self, K, seed=None):
        super().__init__(K, seed)
        self.weights = np.zeros(self.K)

    def _choose(self):
        return Decision(int(kernels.ftl_choose(self.weights)))

    def _update(self, r, d):
        return int(kernels.ftl_update(self.weights, r))


class FTBI(Policy):
    """Follow-The-Best-Interval.

    Keeps one FTL instance per dyadic interval containing the current round,
    weighted by reward relative to the action actually played, and follows
    the best (interval, expert) pair.
    """

    name = "ftbi"

    def __init__(self, K, seed=None):
        super().__init__(K, seed)
        self._W = np.zeros((_MAX_LEVELS, self.K))

    def _choose(self):
        n, k = kernels.ftbi_choose(self._W, self.t)
        return Decision(int(k), DyadicInterval(int(n), self.t >> int(n)))

    def _update(self, r, d):
        return int(kernels.ftbi_update(self._W, self.t, r, d.expert))

    def slots(self) -> list[IntervalSlot]:
        """Live slots for the pending round, or the last completed round if none is pending."""
        t = self.t if self._pending is not None else self.t - 1
        if t < 1:
            return []
        return [
            IntervalSlot(DyadicInterval(n, t >> n), self._W[n].copy())
            for n in range(t.bit_length())
        ]


class ANH(Policy):
    """AdaNormalHedge over sleeping (birth time, arm) experts.

    Birth times are pruned with a streaming schedule: a sleeper born at
    ``odd * 2**j`` lives ``2**(j+2) + 1`` rounds, so O(log t) are alive.
    ``mode="sampled"`` draws the played arm from the policy distribution;
    ``mode="fractional"`` reports the argmax arm and credits the expected reward.
    """

    name = "anh"

    def __init__(self, K, seed=None, mode="sampled"):
        super().__init__(K, seed)
        if mode not in ANH_MODES:
            raise ValueError(f"unknown ANH mode {mode!r}")
        self.mode = mode
        cap = kernels.anh_capacity(1024)
        self._births = np.zeros(cap, dtype=np.int64)
        self._expiry = np.zeros(cap, dtype=np.int64)
        self._R = np.zeros((cap, self.K))
        self._C = np.zeros((cap, self.K))
        self._births[0] = 1
        self._expiry[0] = 1 + kernels.anh_lifetime(1)
        self._m = 1

    def _grow(self):
        cap = 2 * self._births.shape[0]
        for name in ("_births", "_expiry", "_R", "_C"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def distribution(self) -> np.ndarray:
        p = np.empty(self.K)
        kernels.anh_distribution(self._R, self._C, self._m, p)
        return p

    def _choose(self):
        p = self.distribution()
        if self.mode == "fractional":
            x = kernels.argmax_index(p)
        else:
            x = kernels.sample_index(p, self.rng.random())
        return Decision(int(x), distribution=p)

    def _update(self, r, d):
        if self._m >= self._births.shape[0]:
            self._grow()
        self._m, ops = kernels.anh_update(
            self._births, self._expiry, self._R, self._C, self._m, self.t, r, d.distribution
        )
        return int(ops)

    def sleepers(self) -> list[SleepingExpert]:
        out = []
        for i in range(self._m):
            s = int(self._births[i])
            life = int(self._expiry[i]) - s
            for k in range(self.K):
                out.append(SleepingExpert(s, k, float(self._R[i, k]), float(self._C[i, k]), life))
        return out


def make_policy(kind: str, K: int, seed=None, anh_mode: str = "sampled") -> Policy:
    """Fresh policy state at t=1."""
    kind = kind.lower()
    if kind == "ftl":
        return FTL(K, seed)
    if kind == "ftbi":
        return FTBI(K, seed)
    if kind == "anh":
        return ANH(K, seed, mode=anh_mode)
    raise ValueError(f"unknown policy {kind!r}; expected one of {POLICIES}")


policy_reset = make_policy


def run_policy(kind: str, rewards, seed=None, anh_mode: str = "sampled") -> RunTrace:
    """Run a fresh policy over a ``(T, K)`` reward matrix using the batch kernels.

    Produces the same trace as stepping :func:`make_policy` round by round.
    ``wall_time`` covers only the policy computation.
    """
    kind = kind.lower()
    r = validate_reward_matrix(rewards)
    T, K = r.shape
    rows = np.arange(T)
    levels = probs = None
    fractional = False
    if kind == "ftl":
        t0 = time.perf_counter()
        actions, ops = kernels.ftl_run(r)
        elapsed = time.perf_counter() - t0
        obtained = r[rows, actions]
    elif kind == "ftbi":
        t0 = time.perf_counter()
        actions, levels, ops = kernels.ftbi_run(r)
        elapsed = time.perf_counter() - t0
        obtained = r[rows, actions]
    elif kind == "anh":
        if anh_mode not in ANH_MODES:
            raise ValueError(f"unknown ANH mode {anh_mode!r}")
        fractional = anh_mode == "fractional"
        rng = np.random.default_rng(seed)
        uniforms = np.zeros(T) if fractional else rng.random(T)
        t0 = time.perf_counter()
        actions, obtained, ops, probs = kernels.anh_run(r, uniforms, fractional, kernels.anh_capacity(T))
        elapsed = time.perf_counter() - t0
    else:
        raise ValueError(f"unknown policy {kind!r}; expected one of {POLICIES}")
    return RunTrace(
        policy=kind,
        rewards=r,
        actions=actions,
        obtained=obtained,
        ops=ops,
        levels=levels,
        probs=probs,
        fractional=fractional,
        seed=seed if isinstance(seed, int) else None,
        wall_time=elapsed,
    )


def warmup() -> None:
    """Trigger numba compilation so later timings exclude it."""
    r = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    for kind in POLICIES:
        run_policy(kind, r, seed=0)
    run_policy("anh", r, seed=0, anh_mode="fractional")
