"""Samplers over compiled QUBOs: simulated annealing, tabu search, and a
decomposition loop that solves clamped sub-problems with an inner sampler.

All three are pure functions of (qubo, params, seed).  Annealing reads run
on independent RNG streams (stream seed = seed XOR read index) and are
merged in read order before aggregation, so results do not depend on
execution order and parallel reads stay reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from ._pykernels import Xoshiro256
from .qubo import QuboCompiled


class EmptyQuboError(ValueError):
    """Sampling attempted on a QUBO with no variables or no weights."""


@dataclass(frozen=True)
class AnnealParams:
    """Annealing schedule: geometric in beta with `sweeps` points."""

    num_reads: int = 100
    sweeps: int = 1000
    beta_hot: float | None = None
    beta_cold: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if (self.beta_hot is None) != (self.beta_cold is None):
            raise ValueError("set both beta_hot and beta_cold or neither")
        if self.beta_hot is not None:
            if self.beta_hot <= 0 or self.beta_cold <= 0:
                raise ValueError("beta range must be positive")
            if not self.beta_hot < self.beta_cold:
                raise ValueError(
                    f"beta_hot must be < beta_cold, got {self.beta_hot} >= {self.beta_cold}"
                )

    def with_seed(self, seed: int) -> "AnnealParams":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SampleRecord:
    sample: tuple[int, ...]
    energy: float
    occurrences: int


class SampleSet:
    """Aggregated samples, sorted by ascending energy then lexicographically."""

    def __init__(self, records: list[SampleRecord]):
        self.records = records

    @classmethod
    def aggregate(cls, q: QuboCompiled, samples) -> "SampleSet":
        counts: dict[tuple[int, ...], int] = {}
        for s in samples:
            key = tuple(int(b) for b in s)
            counts[key] = counts.get(key, 0) + 1
        records = [
            SampleRecord(sample=k, energy=q.energy(k), occurrences=c)
            for k, c in counts.items()
        ]
        records.sort(key=lambda r: (r.energy, r.sample))
        return cls(records)

    @property
    def first(self) -> SampleRecord:
        return self.records[0]

    @property
    def total_occurrences(self) -> int:
        return sum(r.occurrences for r in self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def default_beta_range(q: QuboCompiled) -> tuple[float, float]:
    """Schedule endpoints from the coupling magnitudes.

    beta_hot makes the largest per-variable total coupling accepted with
    probability 1/2; beta_cold makes the smallest nonzero coupling accepted
    with probability 1/100.
    """
    if q.variable_count < 1:
        raise EmptyQuboError("QUBO has no variables")
    totals = np.abs(q.linear).copy()
    min_nonzero = math.inf
    for v in np.abs(q.linear):
        if v > 0:
            min_nonzero = min(min_nonzero, float(v))
    for (i, j), w in q.quadratic.items():
        aw = abs(w)
        totals[i] += aw
        totals[j] += aw
        if aw > 0:
            min_nonzero = min(min_nonzero, aw)
    max_total = float(totals.max())
    if max_total == 0.0 or not math.isfinite(min_nonzero):
        raise EmptyQuboError("QUBO has no nonzero weights; beta range undefined")
    return math.log(2) / max_total, math.log(100) / min_nonzero


def _resolve_betas(q: QuboCompiled, params: AnnealParams) -> np.ndarray:
    if params.beta_hot is None:
        hot, cold = default_beta_range(q)
    else:
        hot, cold = params.beta_hot, params.beta_cold
    return np.geomspace(hot, cold, params.sweeps)


def simulated_annealing(q: QuboCompiled, params: AnnealParams) -> SampleSet:
    """Metropolis single-flip annealing; `num_reads` independent restarts."""
    if q.variable_count < 1:
        raise EmptyQuboError("QUBO has no variables")
    betas = _resolve_betas(q, params)
    ptr, idx, wgt = q.adjacency()
    samples = kernels.sa_sample(
        q.linear, ptr, idx, wgt, betas, params.seed, params.num_reads
    )
    return SampleSet.aggregate(q, samples)


def tabu_search(q: QuboCompiled, iters: int, tenure: int, seed: int = 0) -> SampleSet:
    """Steepest-descent single flips with a recency tabu list.

    A tabu move is admissible when it improves on the incumbent
    (aspiration); if every move is tabu the best move is taken anyway, so
    tenure >= variable_count still terminates.
    """
    if q.variable_count < 1:
        raise EmptyQuboError("QUBO has no variables")
    if iters < 1 or tenure < 1:
        raise ValueError("iters and tenure must be >= 1")
    ptr, idx, wgt = q.adjacency()
    traj, _energies, count = kernels.tabu_run(
        q.linear, ptr, idx, wgt, q.offset, iters, tenure, seed
    )
    return SampleSet.aggregate(q, traj[:count])


def clamp_subqubo(q: QuboCompiled, free: list[int], sample) -> tuple[QuboCompiled, list[int]]:
    """Fix all variables outside `free` at their sample values.

    Clamped couplings fold into the linear terms and offset, so the
    sub-QUBO's energy of any assignment of the free variables equals the
    full energy of the combined sample.
    """
    free = sorted(free)
    pos = {v: p for p, v in enumerate(free)}
    fixed = [i for i in range(q.variable_count) if i not in pos]
    linear = np.zeros(len(free))
    for p, v in enumerate(free):
        linear[p] = q.linear[v]
    offset = q.offset + float(sum(q.linear[i] for i in fixed if sample[i]))
    quadratic: dict[tuple[int, int], float] = {}
    for (i, j), w in q.quadratic.items():
        fi, fj = i in pos, j in pos
        if fi and fj:
            quadratic[(pos[i], pos[j])] = w
        elif fi:
            if sample[j]:
                linear[pos[i]] += w
        elif fj:
            if sample[i]:
                linear[pos[j]] += w
        elif sample[i] and sample[j]:
            offset += w
    return QuboCompiled(len(free), linear, quadratic, offset), free


def decompose_solve(
    q: QuboCompiled,
    subsize: int,
    rounds: int,
    inner: str = "sa",
    seed: int = 0,
    inner_params: AnnealParams | None = None,
    observer=None,
) -> SampleSet:
    """QBSolv-style loop: repeatedly re-solve the `subsize` variables with the
    largest local energy impact under the incumbent, accepting non-increases."""
    if q.variable_count < 1:
        raise EmptyQuboError("QUBO has no variables")
    if subsize < 1:
        raise ValueError(f"subsize must be >= 1, got {subsize}")
    if subsize > q.variable_count:
        raise ValueError(
            f"subsize {subsize} exceeds variable count {q.variable_count}"
        )
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")

    rng = Xoshiro256(seed)
    incumbent = [rng.next64() >> 63 for _ in range(q.variable_count)]
    inc_energy = q.energy(incumbent)
    trajectory = [tuple(incumbent)]

    ptr, idx, wgt = q.adjacency()
    for r in range(rounds):
        # |dE| of flipping each variable under the incumbent
        bits = np.asarray(incumbent, dtype=np.float64)
        fields = q.linear.copy()
        for (i, j), w in q.quadratic.items():
            if incumbent[j]:
                fields[i] += w
            if incumbent[i]:
                fields[j] += w
        gains = np.abs((1.0 - 2.0 * bits) * fields)
        order = np.lexsort((np.arange(q.variable_count), -gains))
        free = sorted(int(v) for v in order[:subsize])

        sub, free = clamp_subqubo(q, free, incumbent)
        sub_seed = rng.next64()
        if callable(inner):
            best = inner(sub, sub_seed).first.sample
        elif inner == "sa":
            p = inner_params or AnnealParams(num_reads=10, sweeps=200)
            best = simulated_annealing(sub, p.with_seed(sub_seed)).first.sample
        elif inner == "tabu":
            best = tabu_search(sub, iters=20 * len(free), tenure=min(10, len(free)), seed=sub_seed).first.sample
        else:
            raise ValueError(f"unknown inner sampler {inner!r}")

        candidate = list(incumbent)
        for p_, v in enumerate(free):
            candidate[v] = int(best[p_])
        cand_energy = q.energy(candidate)
        if cand_energy <= inc_energy:
            incumbent = candidate
            inc_energy = cand_energy
            trajectory.append(tuple(incumbent))
        if observer is not None:
            observer(r, inc_energy)
    return SampleSet.aggregate(q, trajectory)
