"""Pure-Python / numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
The two must agree bit for bit on the integer-valued outputs (stream words,
hashes, event counts); the round models may differ in the last ulp of a
logarithm, so only their statistics are compared across backends.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
KIND_MULT = 0xD1B54A32D192ED03
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

LAW_POISSON = 0
LAW_UNIFORM = 1
LAW_POWER = 2
LAW_FIXED = 3


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, kind: int, index: int) -> int:
    k = mix64((seed & MASK64) + GOLDEN)
    return mix64(k ^ ((kind * KIND_MULT + index) & MASK64))


def raw_word(key: int, counter: int) -> int:
    z = mix64((key + (counter + 1) * GOLDEN) & MASK64)
    return mix64(z ^ key)


def uniform(key: int, counter: int) -> float:
    return ((raw_word(key, counter) >> 11) + 0.5) * _INV53


# -- vectorised helpers (numpy uint64 arithmetic wraps modulo 2**64) --------

_U = np.uint64


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


def stream_keys(seed: int, kind: int, indices: np.ndarray) -> np.ndarray:
    k = _U(mix64((seed & MASK64) + GOLDEN))
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_vec(k ^ (_U(kind) * _U(KIND_MULT) + idx))


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64_vec(keys + (c + _U(1)) * _U(GOLDEN))
        z = _mix64_vec(z ^ keys)
    return ((z >> _U(11)).astype(np.float64) + 0.5) * _INV53


# -- trajectory hash -------------------------------------------------------


def hash_step(h: int, time: float, cell: int, state: int) -> int:
    bits = int(np.float64(time).view(np.uint64))
    h = mix64(h ^ bits)
    h = mix64(h ^ (cell & MASK64))
    return mix64(h ^ (state & MASK64))


def hash_events(times, cells, states) -> int:
    h = 0
    tb = np.ascontiguousarray(times, dtype=np.float64).view(np.uint64).tolist()
    for bits, c, s in zip(tb, np.asarray(cells).tolist(), np.asarray(states).tolist()):
        h = mix64(h ^ bits)
        h = mix64(h ^ (c & MASK64))
        h = mix64(h ^ (s & MASK64))
    return h


# -- serial standard Glauber kernel ----------------------------------------


def glauber_standard(spins, nbr, prob, lam, key, counter, t, end_time,
                     max_events, sample_every, samples):
    """Cumulative-stream Glauber dynamics, draw order (time, cell, flip).

    ``spins`` is modified in place.  Returns
    ``(t, counter, events, flips, nsamples, hash)``.
    """
    n = spins.shape[0]
    z = nbr.shape[1]
    sp = spins.tolist()
    nb = nbr.tolist()
    pr = prob.tolist()
    rate = lam * n
    events = flips = nsamples = 0
    h = 0
    cap = samples.shape[0] if samples is not None else 0
    code = 0
    if samples is not None:
        for i in range(n):
            if sp[i] > 0:
                code |= 1 << i
    log = math.log
    while max_events < 0 or events < max_events:
        nt = t - log(uniform(key, counter)) / rate
        counter += 1
        if nt >= end_time:
            t = end_time
            break
        t = nt
        c = int(uniform(key, counter) * n)
        counter += 1
        if c >= n:
            c = n - 1
        s = sp[c]
        tot = 0
        for j in nb[c]:
            tot += sp[j]
        idx = (tot + z) // 2 + (z + 1) * (s + 1) // 2
        r = uniform(key, counter)
        counter += 1
        if r < pr[idx]:
            s = -s
            sp[c] = s
            flips += 1
            if samples is not None:
                code ^= 1 << c
        events += 1
        h = hash_step(h, t, c, s)
        if samples is not None and events % sample_every == 0 and nsamples < cap:
            samples[nsamples] = code
            nsamples += 1
    spins[:] = sp
    return t, counter, events, flips, nsamples, h


# -- simplified efficiency models ------------------------------------------


def _increment(law, param, r):
    if law == LAW_POISSON:
        return -np.log(r) / param
    if law == LAW_UNIFORM:
        return r
    if law == LAW_POWER:
        return r ** (1.0 / param)
    return np.ones_like(r)


def one_cell_rounds(nbr, keys, law, param, rounds):
    """Local-time round model; returns N0 for every round (int64 array)."""
    n = nbr.shape[0]
    counters = np.zeros(n, dtype=np.uint64)
    t = _increment(law, param, uniforms(keys, counters))
    counters += _U(1)
    out = np.empty(rounds, dtype=np.int64)
    for k in range(rounds):
        ok = t <= t[nbr].min(axis=1)
        idx = np.flatnonzero(ok)
        out[k] = idx.size
        t[idx] += _increment(law, param, uniforms(keys[idx], counters[idx]))
        counters[idx] += _U(1)
    return out


# neighbour slots N, E, S, W and the four adjacent pairs
_PAIRS = np.array([[0, 1], [1, 2], [2, 3], [3, 0]], dtype=np.int64)


def _pe_neighbours(g):
    i, j = np.divmod(np.arange(g * g), g)
    return np.stack([((i - 1) % g) * g + j, i * g + (j + 1) % g,
                     ((i + 1) % g) * g + j, i * g + (j - 1) % g], axis=1)


def aggregated_rounds(g, m, keys, rounds, lag_bound):
    """p0/p1/p2 round model on a g x g torus of PEs; successes per round.

    A PE keeps its chosen case and neighbour slot until it succeeds (it is
    waiting on one cell).  Fresh choices draw the case, then the slot when
    neighbours are involved; a success then draws the Exp(1) increment of h.
    """
    npe = g * g
    nbrs = _pe_neighbours(g)
    p0 = (m - 2) ** 2 / m ** 2
    p01 = p0 + 4.0 * (m - 2) / m ** 2
    counters = np.zeros(npe, dtype=np.uint64)
    h = np.zeros(npe)
    case = np.full(npe, -1, dtype=np.int64)
    slot = np.zeros(npe, dtype=np.int64)
    rows = np.arange(npe)
    out = np.empty(rounds, dtype=np.int64)
    for k in range(rounds):
        fresh = rows[case < 0]
        if fresh.size:
            u = uniforms(keys[fresh], counters[fresh])
            counters[fresh] += _U(1)
            case[fresh] = np.where(u < p0, 0, np.where(u < p01, 1, 2))
            pick = fresh[case[fresh] > 0]
            v = uniforms(keys[pick], counters[pick])
            counters[pick] += _U(1)
            slot[pick] = np.minimum((v * 4).astype(np.int64), 3)
        ok = np.ones(npe, dtype=bool)
        one = rows[case == 1]
        ok[one] = h[nbrs[one, slot[one]]] >= h[one]
        two = rows[case == 2]
        pair = _PAIRS[slot[two]]
        ok[two] = (h[nbrs[two, pair[:, 0]]] >= h[two]) & (h[nbrs[two, pair[:, 1]]] >= h[two])
        if lag_bound >= 0:
            ok &= (h - h.min()) <= lag_bound
        idx = rows[ok]
        out[k] = idx.size
        h[idx] += -np.log(uniforms(keys[idx], counters[idx]))
        counters[idx] += _U(1)
        case[idx] = -1
    return out
