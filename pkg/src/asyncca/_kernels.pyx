# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Signatures mirror ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, pow
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t KIND_MULT = 0xD1B54A32D192ED03ULL
cdef double INV53 = 1.0 / 9007199254740992.0

LAW_POISSON = 0
LAW_UNIFORM = 1
LAW_POWER = 2
LAW_FIXED = 3


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _word(uint64_t key, uint64_t counter) nogil:
    return _mix(_mix(key + (counter + 1) * GOLDEN) ^ key)


cdef inline double _unif(uint64_t key, uint64_t counter) nogil:
    return (<double>(_word(key, counter) >> 11) + 0.5) * INV53


def mix64(uint64_t z):
    return _mix(z)


def stream_key(seed, int kind, index):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t i = <uint64_t>(index & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t k = _mix(s + GOLDEN)
    return _mix(k ^ (<uint64_t>kind * KIND_MULT + i))


def raw_word(uint64_t key, uint64_t counter):
    return _word(key, counter)


def uniform(uint64_t key, uint64_t counter):
    return _unif(key, counter)


def stream_keys(seed, int kind, indices):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t k = _mix(s + GOLDEN)
    cdef cnp.uint64_t[:] idx = np.ascontiguousarray(indices, dtype=np.uint64)
    out = np.empty(idx.shape[0], dtype=np.uint64)
    cdef cnp.uint64_t[:] o = out
    cdef Py_ssize_t j
    for j in range(idx.shape[0]):
        o[j] = _mix(k ^ (<uint64_t>kind * KIND_MULT + idx[j]))
    return out


def uniforms(keys, counters):
    cdef cnp.uint64_t[:] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef cnp.uint64_t[:] c = np.ascontiguousarray(counters, dtype=np.uint64)
    out = np.empty(k.shape[0], dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t j
    for j in range(k.shape[0]):
        o[j] = _unif(k[j], c[j])
    return out


cdef inline uint64_t _hstep(uint64_t h, double t, int64_t cell, int64_t state) nogil:
    cdef uint64_t bits = (<uint64_t*>&t)[0]
    h = _mix(h ^ bits)
    h = _mix(h ^ <uint64_t>cell)
    return _mix(h ^ <uint64_t>state)


def hash_step(uint64_t h, double time, int64_t cell, int64_t state):
    return _hstep(h, time, cell, state)


def hash_events(times, cells, states):
    cdef double[:] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef int64_t[:] c = np.ascontiguousarray(cells, dtype=np.int64)
    cdef int64_t[:] s = np.ascontiguousarray(states, dtype=np.int64)
    cdef uint64_t h = 0
    cdef Py_ssize_t j
    for j in range(t.shape[0]):
        h = _hstep(h, t[j], c[j], s[j])
    return h


def glauber_standard(int8_t[:] spins, int64_t[:, :] nbr, double[:] prob,
                     double lam, uint64_t key, uint64_t counter, double t,
                     double end_time, int64_t max_events, int64_t sample_every,
                     samples):
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t z = nbr.shape[1]
    cdef double rate = lam * n
    cdef int64_t events = 0, flips = 0, nsamples = 0, cap = 0
    cdef uint64_t h = 0, code = 0
    cdef int64_t[:] smp
    cdef bint sampling = samples is not None
    cdef Py_ssize_t c, j
    cdef int tot, s, idx
    cdef double nt, r
    if sampling:
        smp = samples
        cap = smp.shape[0]
        for j in range(n):
            if spins[j] > 0:
                code |= (<uint64_t>1) << j
    while max_events < 0 or events < max_events:
        nt = t - log(_unif(key, counter)) / rate
        counter += 1
        if nt >= end_time:
            t = end_time
            break
        t = nt
        c = <Py_ssize_t>(_unif(key, counter) * n)
        counter += 1
        if c >= n:
            c = n - 1
        s = spins[c]
        tot = 0
        for j in range(z):
            tot += spins[nbr[c, j]]
        idx = (tot + z) // 2 + (z + 1) * (s + 1) // 2
        r = _unif(key, counter)
        counter += 1
        if r < prob[idx]:
            s = -s
            spins[c] = s
            flips += 1
            if sampling:
                code ^= (<uint64_t>1) << c
        events += 1
        h = _hstep(h, t, c, s)
        if sampling and events % sample_every == 0 and nsamples < cap:
            smp[nsamples] = <int64_t>code
            nsamples += 1
    return t, counter, events, flips, nsamples, h


cdef inline double _incr(int law, double param, double r) nogil:
    if law == 0:
        return -log(r) / param
    if law == 1:
        return r
    if law == 2:
        return pow(r, 1.0 / param)
    return 1.0


def one_cell_rounds(nbr_in, keys_in, int law, double param, Py_ssize_t rounds):
    cdef int64_t[:, :] nbr = np.ascontiguousarray(nbr_in, dtype=np.int64)
    cdef cnp.uint64_t[:] keys = np.ascontiguousarray(keys_in, dtype=np.uint64)
    cdef Py_ssize_t n = nbr.shape[0], z = nbr.shape[1]
    cdef Py_ssize_t k, c, j, cnt
    cdef double tc
    cdef bint ok
    t_arr = np.empty(n, dtype=np.float64)
    new_arr = np.empty(n, dtype=np.float64)
    cnt_arr = np.ones(n, dtype=np.uint64)
    out = np.empty(rounds, dtype=np.int64)
    cdef double[:] t = t_arr
    cdef double[:] nt = new_arr
    cdef cnp.uint64_t[:] ctr = cnt_arr
    cdef int64_t[:] o = out
    for c in range(n):
        t[c] = _incr(law, param, _unif(keys[c], 0))
    with nogil:
        for k in range(rounds):
            cnt = 0
            for c in range(n):
                tc = t[c]
                ok = True
                for j in range(z):
                    if t[nbr[c, j]] < tc:
                        ok = False
                        break
                if ok:
                    nt[c] = tc + _incr(law, param, _unif(keys[c], ctr[c]))
                    ctr[c] += 1
                    cnt += 1
                else:
                    nt[c] = tc
            for c in range(n):
                t[c] = nt[c]
            o[k] = cnt
    return out


def aggregated_rounds(Py_ssize_t g, Py_ssize_t m, keys_in, Py_ssize_t rounds,
                      double lag_bound):
    cdef cnp.uint64_t[:] keys = np.ascontiguousarray(keys_in, dtype=np.uint64)
    cdef Py_ssize_t npe = g * g
    cdef double p0 = <double>((m - 2) * (m - 2)) / (m * m)
    cdef double p01 = p0 + 4.0 * (m - 2) / (m * m)
    cdef int64_t pairs[4][2]
    pairs[0][0] = 0; pairs[0][1] = 1
    pairs[1][0] = 1; pairs[1][1] = 2
    pairs[2][0] = 2; pairs[2][1] = 3
    pairs[3][0] = 3; pairs[3][1] = 0
    nb_arr = np.empty((npe, 4), dtype=np.int64)
    cdef int64_t[:, :] nb = nb_arr
    cdef Py_ssize_t i, j, C, k, s, cnt
    for C in range(npe):
        i = C // g
        j = C % g
        nb[C, 0] = ((i - 1 + g) % g) * g + j
        nb[C, 1] = i * g + (j + 1) % g
        nb[C, 2] = ((i + 1) % g) * g + j
        nb[C, 3] = i * g + (j - 1 + g) % g
    h_arr = np.zeros(npe, dtype=np.float64)
    nh_arr = np.zeros(npe, dtype=np.float64)
    ctr_arr = np.zeros(npe, dtype=np.uint64)
    case_arr = np.full(npe, -1, dtype=np.int64)
    slot_arr = np.zeros(npe, dtype=np.int64)
    out = np.empty(rounds, dtype=np.int64)
    cdef double[:] h = h_arr
    cdef double[:] nh = nh_arr
    cdef cnp.uint64_t[:] ctr = ctr_arr
    cdef int64_t[:] case = case_arr
    cdef int64_t[:] slot = slot_arr
    cdef int64_t[:] o = out
    cdef double u, v, hmin, hc
    cdef bint ok
    with nogil:
        for k in range(rounds):
            hmin = h[0]
            for C in range(1, npe):
                if h[C] < hmin:
                    hmin = h[C]
            cnt = 0
            for C in range(npe):
                hc = h[C]
                if case[C] < 0:
                    # fresh choice; kept until the pending update succeeds
                    u = _unif(keys[C], ctr[C])
                    ctr[C] += 1
                    if u < p0:
                        case[C] = 0
                    else:
                        case[C] = 1 if u < p01 else 2
                        v = _unif(keys[C], ctr[C])
                        ctr[C] += 1
                        s = <Py_ssize_t>(v * 4)
                        slot[C] = 3 if s > 3 else s
                s = slot[C]
                if case[C] == 0:
                    ok = True
                elif case[C] == 1:
                    ok = h[nb[C, s]] >= hc
                else:
                    ok = (h[nb[C, pairs[s][0]]] >= hc) and (h[nb[C, pairs[s][1]]] >= hc)
                if ok and lag_bound >= 0 and hc - hmin > lag_bound:
                    ok = False
                if ok:
                    nh[C] = hc - log(_unif(keys[C], ctr[C]))
                    ctr[C] += 1
                    case[C] = -1
                    cnt += 1
                else:
                    nh[C] = hc
            for C in range(npe):
                h[C] = nh[C]
            o[k] = cnt
    return out
