import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftbench.envs import SegmentTruth, make_sweep_spec
from driftbench.metrics import (
    RunTrace,
    aggregate,
    complexity_profile,
    cumulative_reward_diff,
    fits_log_growth,
    oracle_reward,
    realized_regret,
    relative_lift,
    total_reward,
)
from driftbench.policies import run_policy


def trace_from(rewards, actions, policy="test"):
    r = np.asarray(rewards, dtype=float)
    a = np.asarray(actions)
    return RunTrace(policy, r, a, r[np.arange(len(a)), a], np.full(len(a), r.shape[1]))


class TestRegret:
    def test_oracle_actions_zero(self):
        truth = SegmentTruth((0, 2, 4), (0, 1), (0.5, 0.5))
        tr = trace_from([(1, 0), (0, 0), (0, 1), (1, 1)], [0, 0, 1, 1])
        assert realized_regret(tr, truth) == 0

    def test_hand_sum(self):
        truth = SegmentTruth((0, 2), (0,), (0.5,))
        assert realized_regret(trace_from([(1, 0), (1, 0)], [1, 0]), truth) == 1

    def test_length_mismatch(self):
        truth = SegmentTruth((0, 3), (0,), (0.5,))
        with pytest.raises(ValueError):
            realized_regret(trace_from([(1, 0)], [0]), truth)

    def test_accounting_identity(self):
        spec = make_sweep_spec("seglen", 300)
        rewards = spec.sample(np.random.default_rng(0))
        for kind in ("ftl", "ftbi", "anh"):
            tr = run_policy(kind, rewards, seed=1)
            assert realized_regret(tr, spec.truth()) + total_reward(tr) == pytest.approx(
                oracle_reward(tr, spec.truth()), abs=1e-9
            )


def test_total_reward():
    assert total_reward([1.0] * 10) == 10
    assert total_reward([]) == 0
    assert total_reward([0.5, 0.25]) == 0.75


class TestLift:
    def test_values(self):
        assert relative_lift(185, 100) == pytest.approx(85)
        assert relative_lift(100, 100) == 0
        assert relative_lift(90, 100) == pytest.approx(-10)

    def test_bad_baseline(self):
        with pytest.raises(ValueError):
            relative_lift(1, 0)


class TestCumulativeDiff:
    def test_examples(self):
        assert cumulative_reward_diff([(1, 0), (1, 0)]).tolist() == [1, 2]
        assert cumulative_reward_diff([(1, 0), (0, 1)]).tolist() == [1, 0]

    def test_wrong_k(self):
        with pytest.raises(ValueError):
            cumulative_reward_diff([(1, 0, 0)])

    @given(st.lists(st.booleans(), min_size=1, max_size=200))
    def test_unit_steps(self, above):
        r = [(1, 0) if a else (0, 1) for a in above]
        steps = np.diff(np.concatenate([[0], cumulative_reward_diff(r)]))
        assert set(np.abs(steps)) == {1}

    @given(st.lists(st.tuples(st.sampled_from([0, 0.5, 1]), st.sampled_from([0, 0.5, 1])), min_size=1, max_size=50))
    def test_monotone_iff_dominance(self, rows):
        d = cumulative_reward_diff(rows)
        steps = np.diff(np.concatenate([[0], d]))
        monotone = np.all(steps >= 0) or np.all(steps <= 0)
        dominated = all(a >= b for a, b in rows) or all(a <= b for a, b in rows)
        assert monotone == dominated


class TestAggregate:
    def test_constant(self):
        s = aggregate([2, 2, 2])
        assert (s.mean, s.std, s.n) == (2, 0, 3)

    def test_sample_std(self):
        s = aggregate([1, 3])
        assert s.mean == 2 and s.std == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_single(self):
        assert aggregate([5.0]).std == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestComplexity:
    def test_ftbi(self):
        rewards = np.random.default_rng(0).random((40, 2))
        prof = complexity_profile(run_policy("ftbi", rewards))
        assert prof[0] == (1, 2)
        assert prof[29] == (30, 10)
        assert fits_log_growth(prof, 2)

    def test_ftl(self):
        rewards = np.random.default_rng(0).random((40, 3))
        assert {c for _, c in complexity_profile(run_policy("ftl", rewards))} == {3}
