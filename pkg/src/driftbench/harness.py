"""Experiment orchestration: seeded replications, aggregation and result files."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import envs, ingest, metrics
from .policies import ANH_MODES, POLICIES, run_policy, warmup

log = logging.getLogger(__name__)

EXPERIMENT_KINDS = envs.SWEEP_KINDS + ("replay", "bench")
BENCH_LENGTHS = (10, 100, 1000, 10000, 100000)
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    policies: tuple = ("ftbi", "anh")
    reps: Optional[int] = None
    seed: int = 0
    values: Optional[tuple] = None
    anh_mode: str = "sampled"
    jobs: int = 1
    timing: Optional[bool] = None
    dataset: str = "square"
    data_file: Optional[str] = None
    threshold: Optional[float] = None
    column: Optional[str] = None
    header: bool = True
    out: Optional[str] = None
    format: str = "csv"
    diff_out: Optional[str] = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        pols = tuple(p.lower() for p in self.policies)
        if not pols:
            raise ValueError("policy list is empty")
        for p in pols:
            if p not in POLICIES:
                raise ValueError(f"unknown policy {p!r}; expected a subset of {POLICIES}")
        if len(set(pols)) != len(pols):
            raise ValueError(f"duplicate policies in {pols}")
        object.__setattr__(self, "policies", tuple(sorted(pols, key=POLICIES.index)))
        if self.reps is not None and self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.anh_mode not in ANH_MODES:
            raise ValueError(f"unknown ANH mode {self.anh_mode!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown output format {self.format!r}")
        if self.values is not None:
            vals = tuple(self.values)
            if not vals:
                raise ValueError("empty sweep value list")
            object.__setattr__(self, "values", vals)

    @property
    def replications(self) -> int:
        if self.reps is not None:
            return self.reps
        return 1 if self.kind == "replay" else 20

    @property
    def with_timing(self) -> bool:
        return self.kind == "bench" if self.timing is None else self.timing

    def sweep_values(self) -> tuple:
        if self.values is not None:
            return self.values
        if self.kind == "bench":
            return BENCH_LENGTHS
        return envs.DEFAULT_SWEEPS[self.kind]


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    param: object
    policy: str
    metric: str
    mean: float
    std: float
    n: int
    seed: int
    runtime_policy: Optional[float] = None
    runtime_total: Optional[float] = None


FIELDS = tuple(f.name for f in fields(ResultRow))


def replication_streams(seed: int, rep: int):
    """``(env_rng, {policy: seed_sequence})`` for one replication, independent of run order."""
    env_ss, pol_ss = np.random.SeedSequence(seed + rep).spawn(2)
    return np.random.default_rng(env_ss), dict(zip(POLICIES, pol_ss.spawn(len(POLICIES))))


def _environment(kind: str, value, rng) -> envs.SegmentedBernoulliSpec:
    if kind == "bench":
        T = int(value)
        if T < 2 or T % 2:
            raise ValueError(f"bench horizon must be an even number >= 2, got {T}")
        return envs.make_sweep_spec("seglen", T // 2)
    return envs.make_sweep_spec(kind, value, rng)


def replicate(kind, value, rep, seed, policies, anh_mode):
    """Traces of every policy for one replication at one sweep point.

    Returns ``(spec, {policy: RunTrace}, env_seconds)``. Depends only on the
    arguments, never on which worker runs it or in what order.
    """
    t0 = time.perf_counter()
    env_rng, pol_seeds = replication_streams(seed, rep)
    spec = _environment(kind, value, env_rng)
    rewards = spec.sample(env_rng)
    env_time = time.perf_counter() - t0
    traces = {p: run_policy(p, rewards, seed=pol_seeds[p], anh_mode=anh_mode) for p in policies}
    return spec, traces, env_time


def run_unit(kind, value, rep, seed, policies, anh_mode):
    """One replication at one sweep point, reduced to per-policy measurements."""
    spec, traces, env_time = replicate(kind, value, rep, seed, policies, anh_mode)
    truth = spec.truth()
    out = {}
    for p, tr in traces.items():
        out[p] = {
            "regret": metrics.realized_regret(tr, truth),
            "updates_total": float(np.sum(tr.ops)),
            "updates_final_round": float(tr.ops[-1]),
            "time_policy": tr.wall_time,
            "time_total": env_time + tr.wall_time,
        }
    return out


def map_units(fn, units, jobs):
    if jobs == 1 or len(units) == 1:
        return [fn(*u) for u in units]
    with ProcessPoolExecutor(max_workers=jobs, initializer=warmup) as pool:
        return list(pool.map(fn, *zip(*units)))


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """All sweep points x policies x replications, aggregated to result rows."""
    if cfg.kind == "replay":
        return run_replay(cfg)[0]
    warmup()
    values = cfg.sweep_values()
    reps = cfg.replications
    units = [
        (cfg.kind, v, rep, cfg.seed, cfg.policies, cfg.anh_mode)
        for v in values
        for rep in range(reps)
    ]
    results = map_units(run_unit, units, cfg.jobs)
    by_point = {}
    for (_, v, rep, *_), res in zip(units, results):
        by_point.setdefault(v, [None] * reps)[rep] = res

    metric_names = ["regret"]
    if cfg.kind == "bench":
        metric_names += ["updates_total", "updates_final_round"]
    rows = []
    for v in values:
        for p in cfg.policies:
            per_rep = [by_point[v][rep][p] for rep in range(reps)]
            t_pol = t_tot = None
            if cfg.with_timing:
                t_pol = float(np.mean([m["time_policy"] for m in per_rep]))
                t_tot = float(np.mean([m["time_total"] for m in per_rep]))
            for name in metric_names:
                s = metrics.aggregate([m[name] for m in per_rep])
                rows.append(ResultRow(cfg.kind, v, p, name, s.mean, s.std, s.n, cfg.seed, t_pol, t_tot))
            if cfg.with_timing:
                for name, key in (("time_policy_s", "time_policy"), ("time_total_s", "time_total")):
                    s = metrics.aggregate([m[key] for m in per_rep])
                    rows.append(ResultRow(cfg.kind, v, p, name, s.mean, s.std, s.n, cfg.seed, t_pol, t_tot))
                if cfg.kind == "bench":
                    s = metrics.aggregate([m["time_policy"] / int(v) for m in per_rep])
                    rows.append(ResultRow(cfg.kind, v, p, "time_per_round_policy_s", s.mean, s.std, s.n, cfg.seed, t_pol, t_tot))
    return rows


def _dataset_and_path(cfg: ExperimentConfig) -> tuple[str, Optional[str]]:
    name, sep, path = cfg.dataset.partition(":")
    if name not in ("square", "pm25", "power", "csv", "rewards"):
        raise ValueError(f"unknown dataset {cfg.dataset!r}; expected square, pm25, power, csv:PATH or rewards:PATH")
    return name, (path if sep else cfg.data_file)


def load_replay_rewards(cfg: ExperimentConfig) -> tuple[np.ndarray, Optional[float]]:
    """Reward matrix for a replay run and the threshold used (``None`` for raw reward files)."""
    name, path = _dataset_and_path(cfg)
    if name == "square":
        series = envs.square_wave()
        thr = 0.5 if cfg.threshold is None else cfg.threshold
    elif name == "rewards":
        if not path:
            raise ValueError("rewards dataset needs a file: rewards:PATH")
        return _load_reward_rows(Path(path), cfg.header), None
    else:
        if not path:
            raise ValueError(f"dataset {name} needs a file: --dataset {name}:PATH or --data-file PATH")
        if name == "csv":
            col = 0 if cfg.column is None else cfg.column
            src = ingest.SeriesSource(path, col, header=cfg.header)
        else:
            src = ingest.preset_source(name, path)
            if cfg.column is not None:
                src = replace(src, column=cfg.column)
        values, skipped = ingest.load_series(src)
        log.info("%s: %d values, %d rows skipped", path, len(values), skipped)
        series = np.asarray(values)
        if cfg.threshold is not None:
            thr = cfg.threshold
        elif name == "csv":
            thr = ingest.rounded_median(values)
        else:
            thr = ingest.resolve_threshold(name, values)
    return envs.threshold_rewards(envs.ThresholdReplaySpec(series, thr)), thr


def _load_reward_rows(path: Path, header: bool) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if header:
        rows = rows[1:]
    rows = [r for r in rows if r]
    try:
        return envs.replay_rewards(rows)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from None


def run_replay(cfg: ExperimentConfig) -> tuple[list[ResultRow], Optional[np.ndarray]]:
    """Total reward per policy and lift over FTL on a replayed reward sequence.

    FTL always runs as the lift baseline; its rows are emitted only when
    requested in ``cfg.policies``.
    """
    warmup()
    rewards, thr = load_replay_rewards(cfg)
    param = cfg.dataset.partition(":")[0] if thr is None else thr
    reps = cfg.replications
    totals = {p: [] for p in POLICIES}
    times = {p: [] for p in POLICIES}
    run_set = sorted(set(cfg.policies) | {"ftl"}, key=POLICIES.index)
    for rep in range(reps):
        _, pol_seeds = replication_streams(cfg.seed, rep)
        for p in run_set:
            tr = run_policy(p, rewards, seed=pol_seeds[p], anh_mode=cfg.anh_mode)
            totals[p].append(metrics.total_reward(tr))
            times[p].append(tr.wall_time)
    rows = []
    for p in cfg.policies:
        t_pol = float(np.mean(times[p])) if cfg.with_timing else None
        s = metrics.aggregate(totals[p])
        rows.append(ResultRow("replay", param, p, "total_reward", s.mean, s.std, s.n, cfg.seed, t_pol, t_pol))
        if p != "ftl":
            lifts = [metrics.relative_lift(c, b) for c, b in zip(totals[p], totals["ftl"])]
            s = metrics.aggregate(lifts)
            rows.append(ResultRow("replay", param, p, "lift_pct_vs_ftl", s.mean, s.std, s.n, cfg.seed, t_pol, t_pol))
    diff = metrics.cumulative_reward_diff(rewards) if rewards.shape[1] == 2 else None
    return rows, diff


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(row: ResultRow) -> dict:
    d = asdict(row)
    for k, v in d.items():
        if isinstance(v, np.generic):
            d[k] = v.item()
    return d


def render(rows, fmt: str) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to write")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in FIELDS])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([_jsonable(r) for r in rows], indent=2) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def emit(rows, fmt: str = "csv", path=None) -> str:
    """Render rows and write them to ``path`` (if given); returns the text."""
    text = render(rows, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_rows(text: str, fmt: str) -> list[ResultRow]:
    """Inverse of :func:`render`."""
    if fmt == "json":
        return [ResultRow(**d) for d in json.loads(text)]
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        param = d["param"]
        try:
            param = int(param)
        except ValueError:
            try:
                param = float(param)
            except ValueError:
                pass
        opt = lambda s: float(s) if s != "" else None  # noqa: E731
        out.append(
            ResultRow(
                d["experiment"], param, d["policy"], d["metric"], float(d["mean"]), float(d["std"]),
                int(d["n"]), int(d["seed"]), opt(d["runtime_policy"]), opt(d["runtime_total"]),
            )
        )
    return out


def write_diff(diff: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "cumulative_diff"])
        for t, d in enumerate(diff, start=1):
            w.writerow([t, _fmt(float(d))])


def default_jobs() -> int:
    return os.cpu_count() or 1
