"""Per-round kernels for FTL, FTBI and AdaNormalHedge.

Every function here is compiled with numba when available (see ``_jit``) and
otherwise runs as ordinary Python on numpy arrays. The step functions are
shared by the stateful policy classes and by the whole-run loops, so both
routes produce the same traces.

Experts are 0-based. Time steps are 1-based.
"""

import math

import numpy as np

from ._jit import njit

LOG_HALF = math.log(0.5)


@njit(cache=True)
def bit_length(t):
    n = 0
    while t > 0:
        t >>= 1
        n += 1
    return n


@njit(cache=True)
def cover_levels(first, last, out):
    """Greedy geometric cover of ``[first, last]``; writes piece levels to ``out``, returns the count.

    At cursor ``a`` the piece is the largest ``2**n`` dividing ``a`` that fits.
    ``out`` needs room for ``2 * bit_length(last - first + 1) + 2`` entries.
    """
    a = first
    count = 0
    while a <= last:
        n = 0
        while a % (1 << (n + 1)) == 0:
            n += 1
        while a + (1 << n) - 1 > last:
            n -= 1
        out[count] = n
        count += 1
        a += 1 << n
    return count


# --------------------------------------------------------------------- FTL


@njit(cache=True)
def ftl_choose(W):
    best = 0
    for k in range(1, W.shape[0]):
        if W[k] > W[best]:
            best = k
    return best


@njit(cache=True)
def ftl_update(W, r):
    for k in range(W.shape[0]):
        W[k] += r[k]
    return W.shape[0]


@njit(cache=True)
def ftl_run(rewards):
    T, K = rewards.shape
    W = np.zeros(K)
    actions = np.empty(T, dtype=np.int64)
    ops = np.empty(T, dtype=np.int64)
    for i in range(T):
        x = ftl_choose(W)
        actions[i] = x
        ops[i] = ftl_update(W, rewards[i])
    return actions, ops


# -------------------------------------------------------------------- FTBI
#
# Row n of W holds the weights of the level-n interval containing the current
# round. A row is zeroed when its interval starts (2**n divides t); it is
# simply overwritten after the interval ends, so the live rows at round t are
# exactly rows 0 .. bit_length(t) - 1.


@njit(cache=True)
def ftbi_choose(W, t):
    """Activate fresh slots for round ``t`` and return ``(level, expert)``.

    Ties go to the longer interval, then the lower expert index.
    """
    L = bit_length(t)
    K = W.shape[1]
    for n in range(L):
        if t & ((1 << n) - 1) == 0:
            for k in range(K):
                W[n, k] = 0.0
    best_n = L - 1
    best_k = 0
    best = W[best_n, 0]
    for n in range(L - 1, -1, -1):
        for k in range(K):
            if W[n, k] > best:
                best = W[n, k]
                best_n = n
                best_k = k
    return best_n, best_k


@njit(cache=True)
def ftbi_update(W, t, r, x):
    L = bit_length(t)
    K = W.shape[1]
    rx = r[x]
    for n in range(L):
        for k in range(K):
            W[n, k] += r[k] - rx
    return K * L


@njit(cache=True)
def ftbi_run(rewards):
    T, K = rewards.shape
    W = np.zeros((max(bit_length(T), 1), K))
    actions = np.empty(T, dtype=np.int64)
    levels = np.empty(T, dtype=np.int64)
    ops = np.empty(T, dtype=np.int64)
    for i in range(T):
        t = i + 1
        n, x = ftbi_choose(W, t)
        actions[i] = x
        levels[i] = n
        ops[i] = ftbi_update(W, t, rewards[i], x)
    return actions, levels, ops


# --------------------------------------------------------------------- ANH
#
# Sleeping experts are (birth, arm) pairs. All arms share the birth time, so
# the state is stored per birth: births[i], expiry[i] (last round alive),
# and rows R[i, :], C[i, :]. Rows 0 .. m-1 are alive, ordered by birth.


@njit(cache=True)
def anh_lifetime(s):
    """Rounds a sleeper born at ``s = odd * 2**j`` is retained: ``2**(j+2) + 1``."""
    j = 0
    while s % 2 == 0:
        s //= 2
        j += 1
    return (1 << (j + 2)) + 1


@njit(cache=True)
def anh_log_weight(R, C):
    """``log w(R, C)``; ``-inf`` when the weight is zero (``R <= -1``)."""
    hi = R + 1.0
    if hi <= 0.0:
        return -np.inf
    denom = 3.0 * (C + 1.0)
    a = hi * hi / denom
    lo = R - 1.0
    b = lo * lo / denom if lo > 0.0 else 0.0
    return a + math.log(-math.expm1(b - a)) + LOG_HALF


@njit(cache=True)
def anh_distribution(R, C, m, p):
    """Fill ``p`` with the arm distribution implied by the ``m`` alive rows."""
    K = p.shape[0]
    logmass = np.empty(K)
    lw = np.empty(m)
    for k in range(K):
        mx = -np.inf
        for i in range(m):
            v = anh_log_weight(R[i, k], C[i, k])
            lw[i] = v
            if v > mx:
                mx = v
        if mx == -np.inf:
            logmass[k] = -np.inf
        else:
            s = 0.0
            for i in range(m):
                s += math.exp(lw[i] - mx)
            logmass[k] = mx + math.log(s)
    top = -np.inf
    for k in range(K):
        if logmass[k] > top:
            top = logmass[k]
    if top == -np.inf:
        for k in range(K):
            p[k] = 1.0 / K
        return
    total = 0.0
    for k in range(K):
        p[k] = math.exp(logmass[k] - top)
        total += p[k]
    for k in range(K):
        p[k] /= total


@njit(cache=True)
def sample_index(p, u):
    """Smallest k with ``cumsum(p)[k] > u * sum(p)``."""
    total = 0.0
    for k in range(p.shape[0]):
        total += p[k]
    target = u * total
    acc = 0.0
    last = 0
    for k in range(p.shape[0]):
        if p[k] > 0.0:
            last = k
        acc += p[k]
        if acc > target:
            return k
    return last


@njit(cache=True)
def argmax_index(p):
    best = 0
    for k in range(1, p.shape[0]):
        if p[k] > p[best]:
            best = k
    return best


@njit(cache=True)
def anh_update(births, expiry, R, C, m, t, r, p):
    """Accrue round-``t`` regret, evict expired rows, add the round-``t+1`` newborn.

    Needs ``m < births.shape[0]`` so the newborn fits. Returns
    ``(new_m, accumulator_updates)``.
    """
    K = p.shape[0]
    rhat = 0.0
    for k in range(K):
        rhat += p[k] * r[k]
    for i in range(m):
        for k in range(K):
            g = r[k] - rhat
            R[i, k] += g
            C[i, k] += abs(g)
    ops = m * K
    keep = 0
    for i in range(m):
        if expiry[i] >= t + 1:
            if keep != i:
                births[keep] = births[i]
                expiry[keep] = expiry[i]
                for k in range(K):
                    R[keep, k] = R[i, k]
                    C[keep, k] = C[i, k]
            keep += 1
    s = t + 1
    births[keep] = s
    expiry[keep] = s + anh_lifetime(s)
    for k in range(K):
        R[keep, k] = 0.0
        C[keep, k] = 0.0
    return keep + 1, ops


def anh_capacity(T):
    """Upper bound on simultaneously alive birth times over ``T`` rounds."""
    return 4 * (int(T) + 1).bit_length() + 8


@njit(cache=True)
def anh_run(rewards, uniforms, fractional, cap):
    T, K = rewards.shape
    births = np.zeros(cap, dtype=np.int64)
    expiry = np.zeros(cap, dtype=np.int64)
    R = np.zeros((cap, K))
    C = np.zeros((cap, K))
    births[0] = 1
    expiry[0] = 1 + anh_lifetime(1)
    m = 1
    p = np.empty(K)
    actions = np.empty(T, dtype=np.int64)
    obtained = np.empty(T)
    ops = np.empty(T, dtype=np.int64)
    probs = np.empty((T, K))
    for i in range(T):
        t = i + 1
        anh_distribution(R, C, m, p)
        r = rewards[i]
        if fractional:
            x = argmax_index(p)
            val = 0.0
            for k in range(K):
                val += p[k] * r[k]
            obtained[i] = val
        else:
            x = sample_index(p, uniforms[i])
            obtained[i] = r[x]
        actions[i] = x
        for k in range(K):
            probs[i, k] = p[k]
        m, ops[i] = anh_update(births, expiry, R, C, m, t, r, p)
    return actions, obtained, ops, probs
