"""Compiled hot loop shared by all training modes and back-ends.

One kernel call processes one corpus shard for one epoch.  The kernel
releases the GIL, so worker threads update the shared parameter
matrices concurrently without locks (lost updates are tolerated).  All
randomness comes from an explicit xorshift64* state so single-threaded
runs are bit-reproducible.
"""

import numpy as np
from numba import njit

# uint64 constants; mixing uint64 with signed ints inside numba promotes
# to float64, so shifts and moduli go through these.
_S11 = np.uint64(11)
_S12 = np.uint64(12)
_S25 = np.uint64(25)
_S27 = np.uint64(27)
_STAR = np.uint64(0x2545F4914F6CDD1D)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, nogil=True, inline="always")
def rng_next(state):
    """xorshift64*: advance the 1-element uint64 state, return a uint64."""
    x = state[0]
    x ^= x >> _S12
    x ^= x << _S25
    x ^= x >> _S27
    state[0] = x
    return x * _STAR


@njit(cache=True, nogil=True, inline="always")
def rng_uniform(state):
    """Uniform float64 in [0, 1)."""
    return (rng_next(state) >> _S11) * _INV53


@njit(cache=True, nogil=True, inline="always")
def rng_below(state, n):
    """Uniform integer in [0, n)."""
    return int(rng_next(state) % np.uint64(n))


@njit(cache=True, nogil=True, inline="always")
def sample_cdf(cdf, r):
    """Index of the first cdf entry > r (same as searchsorted right)."""
    lo = 0
    hi = cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= r:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(x):
    if x > 30.0:
        x = 30.0
    elif x < -30.0:
        x = -30.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True, nogil=True)
def train_shard(
    stream,
    start,
    end,
    vectors,
    theta,
    use_hs,
    window,
    dynamic,
    code_off,
    code_bits,
    code_nodes,
    noise_cdf,
    negatives,
    mode,
    strict,
    sense_off,
    gloss_off,
    gloss_ids,
    syn_off,
    syn_ids,
    union_off,
    union_ids,
    stop_mask,
    max_outputs,
    max_gloss_len,
    lr0,
    lr_floor,
    total_planned,
    counter,
    rng_state,
    stats,
):
    # stats: [sum |g|, update count, fallback examples, examples, error flag]
    dim = vectors.shape[1]
    x = np.zeros(dim, dtype=np.float64)
    neu1e = np.zeros(dim, dtype=np.float64)
    ctx = np.empty(2 * window, dtype=np.int32)
    out = np.empty(max_outputs, dtype=np.int32)
    used = np.zeros(max_gloss_len, dtype=np.uint8)
    n = stream.shape[0]

    for i in range(start, end):
        counter[0] += 1
        lr = lr0 * (1.0 - counter[0] / total_planned)
        if lr < lr_floor:
            lr = lr_floor

        if dynamic:
            b = 1 + rng_below(rng_state, window)
        else:
            b = window

        lo = i - b
        if lo < 0:
            lo = 0
        hi = i + b
        if hi > n - 1:
            hi = n - 1
        m = 0
        for j in range(lo, hi + 1):
            if j != i:
                ctx[m] = stream[j]
                m += 1
        if m == 0:
            continue
        stats[3] += 1.0
        target = stream[i]

        for d in range(dim):
            x[d] = 0.0
        for j in range(m):
            row = ctx[j]
            for d in range(dim):
                x[d] += vectors[row, d]
        fm = float(m)
        for d in range(dim):
            x[d] /= fm

        # assemble outputs: the target plus the admitted synonyms
        n_out = 1
        out[0] = target
        n_senses = sense_off[target + 1] - sense_off[target]
        if mode == 1 and n_senses > 0:
            for j in range(union_off[target], union_off[target + 1]):
                out[n_out] = union_ids[j]
                n_out += 1
        elif mode == 2 and n_senses > 0:
            best_s = -1
            best_ov = -1
            for s in range(sense_off[target], sense_off[target + 1]):
                glo = gloss_off[s]
                glen = gloss_off[s + 1] - glo
                for q in range(glen):
                    used[q] = 0
                ov = 0
                for ci in range(m):
                    c = ctx[ci]
                    if stop_mask[c] == 1:
                        continue
                    for q in range(glen):
                        if used[q] == 0 and gloss_ids[glo + q] == c:
                            used[q] = 1
                            ov += 1
                            break
                if ov > best_ov:
                    best_ov = ov
                    best_s = s
            if best_ov == 0:
                stats[2] += 1.0
                best_s = -1 if strict else sense_off[target]
            if best_s >= 0:
                for j in range(syn_off[best_s], syn_off[best_s + 1]):
                    out[n_out] = syn_ids[j]
                    n_out += 1

        for d in range(dim):
            neu1e[d] = 0.0

        if use_hs:
            for oi in range(n_out):
                w = out[oi]
                for j in range(code_off[w], code_off[w + 1]):
                    p = code_nodes[j]
                    f = 0.0
                    for d in range(dim):
                        f += x[d] * theta[p, d]
                    g = 1.0 - code_bits[j] - _sigmoid(f)
                    stats[0] += abs(g)
                    stats[1] += 1.0
                    coef = lr * g
                    for d in range(dim):
                        neu1e[d] += coef * theta[p, d]
                    for d in range(dim):
                        theta[p, d] += coef * x[d]
        else:
            for oi in range(n_out):
                w = out[oi]
                for s in range(negatives + 1):
                    if s == 0:
                        u = w
                        label = 1.0
                    else:
                        label = 0.0
                        attempts = 0
                        while True:
                            u = sample_cdf(noise_cdf, rng_uniform(rng_state))
                            if u != target and u != w:
                                break
                            attempts += 1
                            if attempts > 1000000:
                                stats[4] = 1.0
                                return
                    f = 0.0
                    for d in range(dim):
                        f += x[d] * theta[u, d]
                    g = label - _sigmoid(f)
                    stats[0] += abs(g)
                    stats[1] += 1.0
                    coef = lr * g
                    for d in range(dim):
                        neu1e[d] += coef * theta[u, d]
                    for d in range(dim):
                        theta[u, d] += coef * x[d]

        for j in range(m):
            row = ctx[j]
            for d in range(dim):
                vectors[row, d] += neu1e[d]
