# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: annealing sweeps, tabu descent, and the dip statistic.

Mirrors qroute._pykernels exactly (same RNG, same operation order), so both
backends produce bit-identical results.
"""

from libc.math cimport exp, fabs
from libc.stdint cimport uint64_t, int64_t, uint8_t

import numpy as np
cimport numpy as cnp

cdef extern from *:
    """
    static inline unsigned long long qr_mulhi64(unsigned long long a, unsigned long long b) {
        return (unsigned long long)(((__uint128_t)a * (__uint128_t)b) >> 64);
    }
    """
    uint64_t qr_mulhi64(uint64_t a, uint64_t b) nogil


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef struct Rng:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline uint64_t _splitmix(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void _seed_rng(Rng* rng, uint64_t seed) nogil:
    cdef uint64_t st = seed
    rng.s0 = _splitmix(&st)
    rng.s1 = _splitmix(&st)
    rng.s2 = _splitmix(&st)
    rng.s3 = _splitmix(&st)


cdef inline uint64_t _next64(Rng* rng) nogil:
    # xoshiro256**
    cdef uint64_t result = _rotl(rng.s1 * 5, 7) * 9
    cdef uint64_t t = rng.s1 << 17
    rng.s2 ^= rng.s0
    rng.s3 ^= rng.s1
    rng.s1 ^= rng.s2
    rng.s0 ^= rng.s3
    rng.s2 ^= t
    rng.s3 = _rotl(rng.s3, 45)
    return result


cdef inline double _uniform(Rng* rng) nogil:
    return (_next64(rng) >> 11) * (1.0 / 9007199254740992.0)


cdef inline uint64_t _bounded(Rng* rng, uint64_t n) nogil:
    return qr_mulhi64(_next64(rng), n)


cdef void _sa_one_read(
    double[::1] linear,
    int64_t[::1] nbr_ptr,
    int64_t[::1] nbr_idx,
    double[::1] nbr_w,
    double[::1] betas,
    uint64_t stream_seed,
    uint8_t[::1] x,
    double[::1] field,
    int64_t[::1] perm,
) nogil:
    cdef Rng rng
    cdef int n = <int>linear.shape[0]
    cdef int sweeps = <int>betas.shape[0]
    cdef int i, s, t, v
    cdef int64_t p, j
    cdef double beta, de, delta

    _seed_rng(&rng, stream_seed)
    for i in range(n):
        x[i] = <uint8_t>(_next64(&rng) >> 63)
    for i in range(n):
        field[i] = linear[i]
    for i in range(n):
        if x[i]:
            for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
                field[nbr_idx[p]] += nbr_w[p]

    for s in range(sweeps):
        beta = betas[s]
        for i in range(n):
            perm[i] = i
        for i in range(n - 1, 0, -1):
            j = <int64_t>_bounded(&rng, <uint64_t>(i + 1))
            t = <int>perm[i]
            perm[i] = perm[j]
            perm[j] = t
        for t in range(n):
            v = <int>perm[t]
            de = (1.0 - 2.0 * x[v]) * field[v]
            if de <= 0.0 or _uniform(&rng) < exp(-beta * de):
                delta = -1.0 if x[v] else 1.0
                x[v] = 1 - x[v]
                for p in range(nbr_ptr[v], nbr_ptr[v + 1]):
                    field[nbr_idx[p]] += nbr_w[p] * delta


def sa_sample(linear, nbr_ptr, nbr_idx, nbr_w, betas, base_seed, num_reads):
    """Run `num_reads` annealing restarts; returns a (num_reads, n) bit matrix.

    Read r uses the RNG stream seeded with base_seed XOR r.
    """
    cdef double[::1] lin = np.ascontiguousarray(linear, dtype=np.float64)
    cdef int64_t[::1] ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    cdef int64_t[::1] idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    cdef double[::1] wgt = np.ascontiguousarray(nbr_w, dtype=np.float64)
    cdef double[::1] bts = np.ascontiguousarray(betas, dtype=np.float64)
    cdef int n = lin.shape[0]
    cdef int reads = int(num_reads)
    cdef uint64_t seed = <uint64_t>(int(base_seed) & 0xFFFFFFFFFFFFFFFF)

    out = np.zeros((reads, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] samples = out
    field_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] field = field_arr
    perm_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] perm = perm_arr
    cdef int r
    with nogil:
        for r in range(reads):
            _sa_one_read(lin, ptr, idx, wgt, bts, seed ^ <uint64_t>r,
                         samples[r], field, perm)
    return out


def tabu_run(linear, nbr_ptr, nbr_idx, nbr_w, offset, iters, tenure, seed):
    """Steepest-descent single-flip tabu search.

    Returns (trajectory bit matrix, trajectory energies, count); the
    trajectory holds every strict improvement of the incumbent, starting
    with the random initial sample.
    """
    cdef double[::1] lin = np.ascontiguousarray(linear, dtype=np.float64)
    cdef int64_t[::1] ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    cdef int64_t[::1] idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    cdef double[::1] wgt = np.ascontiguousarray(nbr_w, dtype=np.float64)
    cdef int n = lin.shape[0]
    cdef int niter = int(iters)
    cdef int ten = int(tenure)
    cdef double off = float(offset)

    traj = np.zeros((niter + 1, n), dtype=np.uint8)
    energies = np.zeros(niter + 1, dtype=np.float64)
    cdef uint8_t[:, ::1] tview = traj
    cdef double[::1] eview = energies

    x_arr = np.zeros(n, dtype=np.uint8)
    field_arr = np.zeros(n, dtype=np.float64)
    until_arr = np.zeros(n, dtype=np.int64)
    cdef uint8_t[::1] x = x_arr
    cdef double[::1] field = field_arr
    cdef int64_t[::1] tabu_until = until_arr

    cdef Rng rng
    cdef int i, t, best_i, adm_i, count
    cdef int64_t p
    cdef double de, cur, best_e, adm_de, best_de, delta
    cdef bint admissible

    _seed_rng(&rng, <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    with nogil:
        for i in range(n):
            x[i] = <uint8_t>(_next64(&rng) >> 63)
        for i in range(n):
            field[i] = lin[i]
        for i in range(n):
            if x[i]:
                for p in range(ptr[i], ptr[i + 1]):
                    field[idx[p]] += wgt[p]
        cur = off
        for i in range(n):
            if x[i]:
                cur += lin[i] + 0.5 * (field[i] - lin[i])

        best_e = cur
        for i in range(n):
            tview[0, i] = x[i]
        eview[0] = cur
        count = 1

        for t in range(niter):
            adm_i = -1
            best_i = -1
            adm_de = 0.0
            best_de = 0.0
            for i in range(n):
                de = (1.0 - 2.0 * x[i]) * field[i]
                if best_i < 0 or de < best_de:
                    best_i = i
                    best_de = de
                admissible = tabu_until[i] <= t or cur + de < best_e
                if admissible and (adm_i < 0 or de < adm_de):
                    adm_i = i
                    adm_de = de
            if adm_i < 0:
                adm_i = best_i
                adm_de = best_de
            delta = -1.0 if x[adm_i] else 1.0
            x[adm_i] = 1 - x[adm_i]
            cur += adm_de
            for p in range(ptr[adm_i], ptr[adm_i + 1]):
                field[idx[p]] += wgt[p] * delta
            tabu_until[adm_i] = t + 1 + ten
            if cur < best_e:
                best_e = cur
                for i in range(n):
                    tview[count, i] = x[i]
                eview[count] = cur
                count += 1
    return traj[:count], energies[:count], count


cdef int _gcm_scan(double* y, double* x, int lo, int hi, double* curve, int64_t* touch) nogil:
    """Greatest convex minorant over [lo, hi]; fills curve, returns touch count."""
    cdef int pos = lo, nt = 1, best, j
    cdef double bslope, s
    curve[lo] = y[lo]
    touch[0] = lo
    while pos < hi:
        best = pos + 1
        bslope = (y[best] - y[pos]) / (x[best] - x[pos])
        for j in range(pos + 2, hi + 1):
            s = (y[j] - y[pos]) / (x[j] - x[pos])
            if s < bslope:
                best = j
                bslope = s
        for j in range(pos + 1, best + 1):
            curve[j] = y[pos] + (x[j] - x[pos]) * bslope
        touch[nt] = best
        nt += 1
        pos = best
    return nt


cdef int _lcm_scan(double* y, double* x, int lo, int hi, double* curve, int64_t* touch) nogil:
    """Least concave majorant over [lo, hi]; touchpoints ascending."""
    cdef int pos = hi, nt = 1, best, j, a, b
    cdef double bslope, s
    cdef int64_t tmp
    curve[hi] = y[hi]
    touch[0] = hi
    while pos > lo:
        best = pos - 1
        bslope = (y[pos] - y[best]) / (x[pos] - x[best])
        for j in range(pos - 2, lo - 1, -1):
            s = (y[pos] - y[j]) / (x[pos] - x[j])
            if s < bslope:
                best = j
                bslope = s
        for j in range(best, pos):
            curve[j] = y[pos] - (x[pos] - x[j]) * bslope
        touch[nt] = best
        nt += 1
        pos = best
    # reverse to ascending order
    a = 0
    b = nt - 1
    while a < b:
        tmp = touch[a]
        touch[a] = touch[b]
        touch[b] = tmp
        a += 1
        b -= 1
    return nt


def dip_statistic(values, counts):
    """Hartigan dip of a weighted sample (sorted unique values + counts)."""
    vals_arr = np.ascontiguousarray(values, dtype=np.float64)
    cnts_arr = np.ascontiguousarray(counts, dtype=np.float64)
    cdef double[::1] x = vals_arr
    cdef int k = x.shape[0]
    if k <= 4 or vals_arr[0] == vals_arr[-1]:
        return 0.0

    hist_arr = cnts_arr / cnts_arr.sum()
    cdf_arr = np.cumsum(hist_arr)
    cdf_left_arr = cdf_arr - hist_arr
    cdef double[::1] hist = hist_arr
    cdef double[::1] cdf = cdf_arr
    cdef double[::1] cdf_left = cdf_left_arr

    gcm_arr = np.zeros(k, dtype=np.float64)
    lcm_arr = np.zeros(k, dtype=np.float64)
    gt_arr = np.zeros(k, dtype=np.int64)
    lt_arr = np.zeros(k, dtype=np.int64)
    left_arr = np.zeros(k + 1, dtype=np.float64)
    right_arr = np.zeros(k + 2, dtype=np.float64)
    cdef double[::1] gcm = gcm_arr
    cdef double[::1] lcm = lcm_arr
    cdef int64_t[::1] gt = gt_arr
    cdef int64_t[::1] lt = lt_arr
    cdef double[::1] left_env = left_arr
    cdef double[::1] right_env = right_arr

    cdef int lo = 0, hi = k - 1
    cdef int left_len = 1, right_len = 1, right_pos = k + 1
    cdef int ng, nl, i, t, xl, xr
    cdef double D = 0.0, d, d_left, d_right, dv, left_diff, right_diff
    cdef double the_dip, m1, m2

    left_env[0] = 0.0
    right_env[right_pos] = 1.0

    with nogil:
        while True:
            ng = _gcm_scan(&cdf_left[0], &x[0], lo, hi, &gcm[0], &gt[0])
            nl = _lcm_scan(&cdf[0], &x[0], lo, hi, &lcm[0], &lt[0])

            d_left = 0.0
            for i in range(ng):
                dv = fabs(lcm[gt[i]] - gcm[gt[i]])
                if dv > d_left:
                    d_left = dv
            d_right = 0.0
            for i in range(nl):
                dv = fabs(lcm[lt[i]] - gcm[lt[i]])
                if dv > d_right:
                    d_right = dv

            if d_right > d_left:
                d = d_right
                xr = -1
                for i in range(nl):
                    if fabs(lcm[lt[i]] - gcm[lt[i]]) == d_right:
                        xr = <int>lt[i]          # last matching touchpoint
                xl = lo
                for i in range(ng):
                    if gt[i] <= xr:
                        xl = <int>gt[i]          # last gcm touchpoint <= xr
            else:
                d = d_left
                xl = -1
                for i in range(ng - 1, -1, -1):
                    if fabs(lcm[gt[i]] - gcm[gt[i]]) == d_left:
                        xl = <int>gt[i]          # first matching touchpoint
                xr = hi
                for i in range(nl - 1, -1, -1):
                    if lt[i] >= xl:
                        xr = <int>lt[i]          # first lcm touchpoint >= xl

            left_diff = 0.0
            for i in range(lo, xl + 1):
                dv = fabs(gcm[i] - cdf[i])
                if dv > left_diff:
                    left_diff = dv
            right_diff = 0.0
            for i in range(xr, hi + 1):
                dv = fabs(lcm[i] - cdf[i] + hist[i])
                if dv > right_diff:
                    right_diff = dv

            if d <= D or xr == lo or xl == hi + 1:
                break
            if left_diff > D:
                D = left_diff
            if right_diff > D:
                D = right_diff

            for i in range(lo + 1, xl + 1):
                left_env[left_len] = gcm[i]
                left_len += 1
            t = hi - 1 - xr + 1                 # number of values prepended
            right_pos -= t
            for i in range(t):
                right_env[right_pos + i] = lcm[xr + i]
            right_len += t
            lo = xl
            hi = xr

        m1 = 0.0
        for i in range(left_len):
            dv = fabs(cdf[i] - left_env[i])
            if dv > m1:
                m1 = dv
        m2 = 0.0
        for i in range(right_len):
            dv = fabs(cdf[k - right_len - 1 + i] - right_env[right_pos + i])
            if dv > m2:
                m2 = dv
        the_dip = m1 if m1 > m2 else m2
    return the_dip / 2.0
