"""Pure-Python kernels, drop-in equivalents of the compiled extension.

Every operation (RNG draws, sweep order, tie breaking, float arithmetic
order) mirrors qroute._native exactly, so the two backends return
bit-identical results.  This module is an order of magnitude slower; it
exists so the package works without a C toolchain.  `qroute bench-kernels`
measures the gap.
"""
from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** seeded through splitmix64, as in the compiled kernel."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        st = seed & _MASK
        st, self.s0 = _splitmix(st)
        st, self.s1 = _splitmix(st)
        st, self.s2 = _splitmix(st)
        st, self.s3 = _splitmix(st)

    def next64(self) -> int:
        s1 = self.s1
        result = ((((s1 * 5) & _MASK) << 7 | ((s1 * 5) & _MASK) >> 57) & _MASK) * 9 & _MASK
        t = (s1 << 17) & _MASK
        self.s2 ^= self.s0
        self.s3 ^= s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = ((self.s3 << 45) | (self.s3 >> 19)) & _MASK
        return result

    def uniform(self) -> float:
        return (self.next64() >> 11) * (1.0 / 9007199254740992.0)

    def bounded(self, n: int) -> int:
        return (self.next64() * n) >> 64


def _sa_one_read(linear, nbr_ptr, nbr_idx, nbr_w, betas, stream_seed, x):
    n = len(linear)
    rng = Xoshiro256(stream_seed)
    for i in range(n):
        x[i] = rng.next64() >> 63
    field = [float(linear[i]) for i in range(n)]
    for i in range(n):
        if x[i]:
            for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
                field[nbr_idx[p]] += nbr_w[p]
    perm = list(range(n))
    for beta in betas:
        for i in range(n):
            perm[i] = i
        for i in range(n - 1, 0, -1):
            j = rng.bounded(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        for t in range(n):
            v = perm[t]
            de = (1.0 - 2.0 * x[v]) * field[v]
            if de <= 0.0 or rng.uniform() < math.exp(-beta * de):
                delta = -1.0 if x[v] else 1.0
                x[v] = 1 - x[v]
                for p in range(nbr_ptr[v], nbr_ptr[v + 1]):
                    field[nbr_idx[p]] += nbr_w[p] * delta


def sa_sample(linear, nbr_ptr, nbr_idx, nbr_w, betas, base_seed, num_reads):
    linear = np.asarray(linear, dtype=np.float64).tolist()
    nbr_ptr = np.asarray(nbr_ptr, dtype=np.int64).tolist()
    nbr_idx = np.asarray(nbr_idx, dtype=np.int64).tolist()
    nbr_w = np.asarray(nbr_w, dtype=np.float64).tolist()
    betas = np.asarray(betas, dtype=np.float64).tolist()
    n = len(linear)
    base = int(base_seed) & _MASK
    out = np.zeros((int(num_reads), n), dtype=np.uint8)
    for r in range(int(num_reads)):
        row = [0] * n
        _sa_one_read(linear, nbr_ptr, nbr_idx, nbr_w, betas, base ^ r, row)
        out[r] = row
    return out


def tabu_run(linear, nbr_ptr, nbr_idx, nbr_w, offset, iters, tenure, seed):
    linear = np.asarray(linear, dtype=np.float64).tolist()
    nbr_ptr = np.asarray(nbr_ptr, dtype=np.int64).tolist()
    nbr_idx = np.asarray(nbr_idx, dtype=np.int64).tolist()
    nbr_w = np.asarray(nbr_w, dtype=np.float64).tolist()
    n = len(linear)
    iters = int(iters)
    tenure = int(tenure)
    rng = Xoshiro256(int(seed) & _MASK)

    traj = np.zeros((iters + 1, n), dtype=np.uint8)
    energies = np.zeros(iters + 1, dtype=np.float64)

    x = [rng.next64() >> 63 for _ in range(n)]
    field = list(linear)
    for i in range(n):
        if x[i]:
            for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
                field[nbr_idx[p]] += nbr_w[p]
    cur = float(offset)
    for i in range(n):
        if x[i]:
            cur += linear[i] + 0.5 * (field[i] - linear[i])

    best_e = cur
    traj[0] = x
    energies[0] = cur
    count = 1
    tabu_until = [0] * n

    for t in range(iters):
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
        for p in range(nbr_ptr[adm_i], nbr_ptr[adm_i + 1]):
            field[nbr_idx[p]] += nbr_w[p] * delta
        tabu_until[adm_i] = t + 1 + tenure
        if cur < best_e:
            best_e = cur
            traj[count] = x
            energies[count] = cur
            count += 1
    return traj[:count], energies[:count], count


def _gcm_scan(y, x, lo, hi, curve, touch):
    pos = lo
    curve[lo] = y[lo]
    touch[0] = lo
    nt = 1
    while pos < hi:
        slopes = (y[pos + 1: hi + 1] - y[pos]) / (x[pos + 1: hi + 1] - x[pos])
        best = pos + 1 + int(np.argmin(slopes))
        bslope = (y[best] - y[pos]) / (x[best] - x[pos])
        curve[pos + 1: best + 1] = y[pos] + (x[pos + 1: best + 1] - x[pos]) * bslope
        touch[nt] = best
        nt += 1
        pos = best
    return nt


def _lcm_scan(y, x, lo, hi, curve, touch):
    pos = hi
    curve[hi] = y[hi]
    touch[0] = hi
    nt = 1
    while pos > lo:
        # minimal slope; largest index wins ties (descending scan in the kernel)
        slopes = (y[pos] - y[lo:pos]) / (x[pos] - x[lo:pos])
        best = pos - 1 - int(np.argmin(slopes[::-1]))
        bslope = (y[pos] - y[best]) / (x[pos] - x[best])
        curve[best:pos] = y[pos] - (x[pos] - x[best:pos]) * bslope
        touch[nt] = best
        nt += 1
        pos = best
    touch[:nt] = touch[:nt][::-1].copy()
    return nt


def dip_statistic(values, counts):
    """Hartigan dip via the greatest-convex-minorant / least-concave-majorant
    narrowing construction, over sorted unique values with multiplicities."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    k = len(x)
    if k <= 4 or x[0] == x[-1]:
        return 0.0
    hist = np.ascontiguousarray(counts, dtype=np.float64)
    hist = hist / hist.sum()
    cdf = np.cumsum(hist)
    cdf_left = cdf - hist

    gcm = np.zeros(k)
    lcm = np.zeros(k)
    gt = np.zeros(k, dtype=np.int64)
    lt = np.zeros(k, dtype=np.int64)
    left_env = np.zeros(k + 1)
    right_env = np.zeros(k + 2)

    lo, hi = 0, k - 1
    left_len = 1
    right_len = 1
    right_pos = k + 1
    left_env[0] = 0.0
    right_env[right_pos] = 1.0
    D = 0.0

    while True:
        ng = _gcm_scan(cdf_left, x, lo, hi, gcm, gt)
        nl = _lcm_scan(cdf, x, lo, hi, lcm, lt)

        gdiffs = np.abs(lcm[gt[:ng]] - gcm[gt[:ng]])
        ldiffs = np.abs(lcm[lt[:nl]] - gcm[lt[:nl]])
        d_left = gdiffs.max()
        d_right = ldiffs.max()

        if d_right > d_left:
            d = d_right
            xr = int(lt[:nl][ldiffs == d_right][-1])
            xl = int(gt[:ng][gt[:ng] <= xr][-1])
        else:
            d = d_left
            xl = int(gt[:ng][gdiffs == d_left][0])
            cand = lt[:nl][lt[:nl] >= xl]
            xr = int(cand[0]) if len(cand) else hi

        left_diff = np.abs(gcm[lo: xl + 1] - cdf[lo: xl + 1]).max()
        right_diff = np.abs(lcm[xr: hi + 1] - cdf[xr: hi + 1] + hist[xr: hi + 1]).max()

        if d <= D or xr == lo or xl == hi + 1:
            break
        D = max(D, left_diff, right_diff)

        ext = xl - lo
        left_env[left_len: left_len + ext] = gcm[lo + 1: xl + 1]
        left_len += ext
        t = hi - xr
        right_pos -= t
        right_env[right_pos: right_pos + t] = lcm[xr: hi]
        right_len += t
        lo, hi = xl, xr

    m1 = np.abs(cdf[:left_len] - left_env[:left_len]).max()
    m2 = np.abs(
        cdf[k - right_len - 1: k - 1] - right_env[right_pos: right_pos + right_len]
    ).max()
    return max(m1, m2) / 2.0
