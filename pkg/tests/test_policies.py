import math
import pickle

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftbench import kernels
from driftbench.dyadic import DyadicInterval, active_set
from driftbench.policies import (
    ANH,
    FTBI,
    FTL,
    anh_log_potential,
    anh_potential,
    make_policy,
    run_policy,
)

from oracles import brute_ftbi, naive_anh, naive_lifetime


def step_trace(policy, rewards):
    out = []
    for r in rewards:
        d = policy.choose()
        out.append(d)
        policy.update(r, d)
    return out


class TestFTL:
    def test_strict_leader(self):
        p = FTL(2)
        p.weights[:] = [2.0, 1.0]
        assert p.choose().expert == 0

    def test_tie_goes_low(self):
        assert FTL(2).choose().expert == 0

    def test_after_two_wins(self):
        p = FTL(2)
        step_trace(p, [(1, 0), (1, 0)])
        assert p.choose().expert == 0

    def test_reset_weights(self):
        assert FTL(3, seed=0).weights.tolist() == [0, 0, 0]

    def test_ops(self):
        p = FTL(3)
        step_trace(p, [(0, 1, 0)])
        assert p.ops == 3


class TestFTBIChoose:
    def test_first_round(self):
        d = FTBI(2).choose()
        assert d.expert == 0 and d.interval == DyadicInterval(0, 1)

    def test_hand_simulation(self):
        # worked by hand from the update rule with the tie-break
        # (longer interval, then lower expert)
        rewards = [(1, 0)] * 4 + [(0, 1)] * 4
        trace = step_trace(FTBI(2), rewards)
        assert [d.expert for d in trace] == [0, 0, 0, 0, 0, 0, 1, 0]
        assert [d.interval.as_tuple() for d in trace] == [
            (1, 1), (2, 3), (2, 3), (4, 7), (4, 7), (4, 7), (4, 7), (8, 15),
        ]
        assert brute_ftbi(rewards) == [(d.expert, d.interval.as_tuple()) for d in trace]

    def test_argmax_nonnegative(self):
        rng = np.random.default_rng(0)
        p = FTBI(3)
        for _ in range(500):
            d = p.choose()
            n = d.interval.level
            assert p._W[n, d.expert] >= 0
            p.update(rng.random(3), d)


class TestFTBIUpdate:
    def test_direct_formula(self):
        p = FTBI(2)
        for _ in range(5):
            p.update((0.5, 0.5), p.choose())
        d = p.choose()
        before = {s.interval: s.weights.copy() for s in p.slots()}
        forced = type(d)(0, d.interval)
        p._pending = forced
        p.update((1, 0), forced)
        for s in p.slots():
            np.testing.assert_array_equal(s.weights - before[s.interval], [0, -1])

    def test_direct_formula_second_expert(self):
        p = FTBI(2)
        d = p.choose()
        forced = type(d)(1, d.interval)
        p._pending = forced
        before = p.slots()[0].weights.copy()
        p.update((0.3, 0.8), forced)
        np.testing.assert_allclose(p.slots()[0].weights - before, [0.3 - 0.8, 0.0])

    def test_rejects_out_of_range(self):
        p = FTBI(2)
        d = p.choose()
        with pytest.raises(ValueError):
            p.update((1.2, 0.0), d)
        with pytest.raises(ValueError):
            p.update((-0.1, 0.0), d)

    def test_alternation_enforced(self):
        p = FTBI(2)
        with pytest.raises(RuntimeError):
            p.update((0, 1))
        p.choose()
        with pytest.raises(RuntimeError):
            p.choose()

    def test_slot_lifecycle_and_ops(self):
        rng = np.random.default_rng(1)
        p = FTBI(2)
        for t in range(1, 2050):
            d = p.choose()
            assert [s.interval for s in p.slots()] == active_set(t)
            fresh = [s for s in p.slots() if s.interval.start == t]
            assert all(np.all(s.weights == 0) for s in fresh)
            p.update(rng.random(2), d)
            assert p.ops == 2 * (int(math.log2(t)) + 1)
        assert len(p.slots()) == int(math.log2(2049)) + 1

    def test_chosen_weight_unchanged(self):
        rng = np.random.default_rng(2)
        p = FTBI(4)
        for _ in range(700):
            d = p.choose()
            before = {s.interval: s.weights[d.expert] for s in p.slots()}
            p.update(rng.random(4), d)
            for s in p.slots():
                assert s.weights[d.expert] == before[s.interval]


class TestFTBIEquivalence:
    @pytest.mark.parametrize("seed", range(20))
    def test_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(1, 33))
        rewards = rng.random((T, 2))
        rewards[rng.random((T, 2)) < 0.3] = 1.0
        expected = brute_ftbi(rewards.tolist())
        trace = step_trace(FTBI(2), rewards)
        assert [(d.expert, d.interval.as_tuple()) for d in trace] == expected
        batch = run_policy("ftbi", rewards)
        assert batch.actions.tolist() == [x for x, _ in expected]

    @given(st.lists(st.tuples(st.integers(0, 32), st.integers(0, 32)), min_size=1, max_size=64),
           st.integers(0, 32))
    @settings(max_examples=150, deadline=None)
    def test_shift_invariance(self, rows, c):
        # multiples of 1/64 keep the arithmetic exact
        base = np.array(rows, dtype=float) / 64.0
        shifted = base + c / 64.0
        a = run_policy("ftbi", base)
        b = run_policy("ftbi", shifted)
        assert a.actions.tolist() == b.actions.tolist()
        assert a.levels.tolist() == b.levels.tolist()


class TestANHPotential:
    def test_origin(self):
        expected = float(mpmath.mpf(1) / 2 * (mpmath.e ** (mpmath.mpf(1) / 3) - 1))
        assert anh_potential(0, 0) == pytest.approx(expected, abs=1e-12)
        assert anh_potential(0, 0) == pytest.approx(0.1978062, abs=1e-7)

    def test_clipped(self):
        assert anh_potential(-1, 5) == 0.0
        assert anh_log_potential(-1, 5) == -math.inf

    def test_one_one(self):
        expected = float(mpmath.mpf(1) / 2 * (mpmath.e ** (mpmath.mpf(2) / 3) - 1))
        assert anh_potential(1, 1) == pytest.approx(expected, abs=1e-12)
        assert anh_potential(1, 1) == pytest.approx(0.4738670, abs=1e-7)

    @given(st.floats(-5, 50), st.floats(0, 200))
    def test_log_form_agrees(self, R, C):
        w = anh_potential(R, C)
        lw = anh_log_potential(R, C)
        if w == 0:
            assert lw == -math.inf or lw < -700
        elif math.isinf(w):
            assert lw > 700
        else:
            assert math.exp(lw) == pytest.approx(w, rel=1e-9, abs=1e-300)

    def test_log_form_survives_large_regret(self):
        assert math.isfinite(anh_log_potential(5000.0, 5000.0))


class TestANH:
    def test_first_round_uniform(self):
        d = ANH(2, seed=0).choose()
        np.testing.assert_allclose(d.distribution, [0.5, 0.5])

    def test_zero_mass_falls_back_to_uniform(self):
        R = np.full((2, 3), -4.0)
        C = np.full((2, 3), 10.0)
        p = np.empty(3)
        kernels.anh_distribution(R, C, 2, p)
        np.testing.assert_allclose(p, [1 / 3] * 3)

    def test_normalizes_summed_weights(self):
        R = np.array([[0.0, 0.5], [1.0, -2.0]])
        C = np.array([[0.0, 0.5], [1.0, 3.0]])
        p = np.empty(2)
        kernels.anh_distribution(R, C, 2, p)
        mass = [anh_potential(0, 0) + anh_potential(1, 1), anh_potential(0.5, 0.5) + anh_potential(-2, 3)]
        np.testing.assert_allclose(p, np.array(mass) / sum(mass), rtol=1e-12)

    def test_update_example(self):
        p = ANH(2, seed=0)
        d = p.choose()
        p.update((1, 0), d)
        s = {(e.birth, e.arm): e for e in p.sleepers()}
        assert (s[1, 0].R, s[1, 0].C) == (0.5, 0.5)
        assert (s[1, 1].R, s[1, 1].C) == (-0.5, 0.5)
        assert (s[2, 0].R, s[2, 0].C) == (0.0, 0.0)

    def test_lifetime(self):
        assert kernels.anh_lifetime(12) == 17
        for s in range(1, 3000):
            assert kernels.anh_lifetime(s) == naive_lifetime(s)

    def test_alive_set_logarithmic(self):
        p = ANH(2, seed=3, mode="fractional")
        rng = np.random.default_rng(3)
        for _ in range(10_000):
            p.update(rng.random(2), p.choose())
        births = {e.birth for e in p.sleepers()}
        assert len(births) <= 3 * math.log2(10_000)

    def test_regret_accumulators_fuzz(self):
        p = ANH(3, seed=4)
        rng = np.random.default_rng(4)
        for t in range(3000):
            p.update(rng.random(3), p.choose())
            if t % 97 == 0:
                assert all(e.C >= abs(e.R) for e in p.sleepers())

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(8)
        rewards = (rng.random((60, 3)) < [0.7, 0.4, 0.5]).astype(float)
        expected = np.array(naive_anh(rewards.tolist()))
        trace = run_policy("anh", rewards, anh_mode="fractional")
        np.testing.assert_allclose(trace.probs, expected, rtol=1e-10, atol=1e-14)

    def test_distribution_is_probability(self):
        rng = np.random.default_rng(5)
        trace = run_policy("anh", (rng.random((2000, 4)) < 0.5).astype(float), seed=5)
        assert np.all(trace.probs >= 0)
        np.testing.assert_allclose(trace.probs.sum(axis=1), 1.0, atol=1e-9)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ANH(2, mode="greedy")


class TestReset:
    def test_deterministic_state(self):
        a, b = make_policy("ftbi", 2, 7), make_policy("ftbi", 2, 7)
        assert pickle.dumps(a.__dict__) == pickle.dumps(b.__dict__)

    def test_anh_newborns(self):
        assert [(e.birth, e.arm) for e in make_policy("anh", 2, 1).sleepers()] == [(1, 0), (1, 1)]

    def test_rejects_single_expert(self):
        with pytest.raises(ValueError):
            make_policy("ftl", 1, 0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_policy("exp3", 2, 0)


@pytest.mark.parametrize("kind", ["ftl", "ftbi", "anh"])
@pytest.mark.parametrize("mode", ["sampled", "fractional"])
def test_stepping_matches_batch(kind, mode):
    rng = np.random.default_rng(11)
    rewards = (rng.random((1500, 3)) < [0.5, 0.6, 0.4]).astype(float)
    seed = np.random.SeedSequence(99)
    pol = make_policy(kind, 3, seed, anh_mode=mode)
    steps = step_trace(pol, rewards)
    batch = run_policy(kind, rewards, seed=np.random.SeedSequence(99), anh_mode=mode)
    assert [d.expert for d in steps] == batch.actions.tolist()
    if kind == "ftbi":
        assert [d.interval.level for d in steps] == batch.levels.tolist()
    if kind == "anh":
        np.testing.assert_array_equal(np.array([d.distribution for d in steps]), batch.probs)


def test_batch_rejects_bad_rewards():
    with pytest.raises(ValueError, match="round 2"):
        run_policy("ftl", [[0, 1], [0, 1.5]])
