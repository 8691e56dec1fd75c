"""Phase 1 of the hybrid solver: capacity-aware K-Medoids and the QUBO
clustering formulation, plus silhouette and dip-test clusterability metrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .instance_io import DistanceMatrix
from .qubo import BinaryPolynomial, VariableRegistry, add_slack_unary

UNASSIGNED = -1


@dataclass(frozen=True)
class ClusteringMultipliers:
    """Penalty weights of the clustering QUBO; the distance weight is static."""

    m1: float = 50000.0  # every customer must be assigned
    m2: float = 20.0     # cluster demand must fit the vehicle
    m3: float = 200.0    # intra-cluster distance weight


@dataclass
class ClusterAssignment:
    labels: list[int]               # per-customer cluster id, -1 = unassigned
    num_clusters: int
    loads: list[int]                # per-cluster demand sums
    medoids: list[int] | None = None

    @classmethod
    def from_labels(cls, labels, num_clusters, demands, medoids=None):
        loads = [0] * num_clusters
        for i, lab in enumerate(labels):
            if lab != UNASSIGNED:
                loads[lab] += demands[i]
        return cls(list(labels), num_clusters, loads, medoids)

    def members(self, k: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == k]

    @property
    def unassigned(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == UNASSIGNED]


def count_demand_errors(assign: ClusterAssignment | list, demands, capacity) -> int:
    labels = assign.labels if isinstance(assign, ClusterAssignment) else assign
    k = (assign.num_clusters if isinstance(assign, ClusterAssignment)
         else (max(labels) + 1 if labels else 0))
    loads = [0] * k
    for i, lab in enumerate(labels):
        if lab != UNASSIGNED:
            loads[lab] += demands[i]
    return sum(1 for ld in loads if ld > capacity)


def _as_array(dist) -> np.ndarray:
    return dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)


def kmedoids_fit(
    dist,
    num_clusters: int,
    demands,
    capacity: int,
    max_iters: int = 200,
    penalty: float = 10000.0,
    cost_model: str = "medoid",
) -> tuple[ClusterAssignment, int]:
    """Partitioning around medoids with a capacity penalty.

    Initial medoids are the highest-demand customers (ties to the lower
    index).  Each outer pass scans (medoid, non-medoid) pairs in row-major
    order and greedily accepts any swap that strictly lowers the cost.

    cost_model "medoid" charges each member its distance to the medoid and
    adds `penalty` once per overloaded cluster; "pairwise" charges the sum
    of all intra-cluster pairwise distances and |capacity - load| * penalty
    unconditionally.
    """
    d = _as_array(dist)
    n = len(demands)
    if not 1 <= num_clusters <= n:
        raise ValueError(f"need 1 <= K <= {n}, got K={num_clusters}")
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    if cost_model not in ("medoid", "pairwise"):
        raise ValueError(f"unknown cost model {cost_model!r}")
    demands = np.asarray(demands)

    order = sorted(range(n), key=lambda i: (-demands[i], i))
    medoids = order[:num_clusters]

    def evaluate(meds):
        labels = d[:, meds].argmin(axis=1)
        cost = 0.0
        for k in range(num_clusters):
            members = np.flatnonzero(labels == k)
            if len(members) == 0:
                continue
            load = int(demands[members].sum())
            if cost_model == "medoid":
                cost += float(d[members, meds[k]].sum())
                if load > capacity:
                    cost += penalty
            else:
                cost += float(d[np.ix_(members, members)].sum())
                cost += abs(capacity - load) * penalty
        return labels, cost

    labels, cost = evaluate(medoids)
    passes = 0
    while passes < max_iters:
        swapped = False
        for slot in range(num_clusters):
            for cand in range(n):
                if cand in medoids:
                    continue
                trial = list(medoids)
                trial[slot] = cand
                trial_labels, trial_cost = evaluate(trial)
                if trial_cost < cost:
                    medoids = trial
                    labels, cost = trial_labels, trial_cost
                    swapped = True
        passes += 1
        if not swapped:
            break

    assign = ClusterAssignment.from_labels(
        [int(l) for l in labels], num_clusters, demands, medoids=list(medoids)
    )
    return assign, passes


def clustering_variable_count(num_customers, num_clusters, capacity, min_demand) -> int:
    """Decision bits plus per-cluster unary capacity slack."""
    slack = math.ceil((capacity - 1) / min_demand)
    return num_customers * num_clusters + num_clusters * slack


def qubo_clustering_build(
    dist,
    num_clusters: int,
    demands,
    capacity: int,
    mult: ClusteringMultipliers = ClusteringMultipliers(),
) -> BinaryPolynomial:
    """Assignment QUBO over x[customer, cluster] with unary capacity slack.

    H = m3 * sum_k sum_{j>i} d_ij x_ik x_jk
      + m1 * sum_i (1 - sum_k x_ik)^2
      + m2 * sum_k (sum_i d_i x_ik - capacity + slack_k)^2

    where each cluster's slack steps by the minimum demand.
    """
    d = _as_array(dist)
    n = len(demands)
    if num_clusters < 1:
        raise ValueError("need at least one cluster")
    min_demand = min(demands)
    if min_demand < 1:
        raise ValueError("demands must be >= 1")

    reg = VariableRegistry()
    reg.register("x", (n, num_clusters))

    def x(i, k):
        return reg.index("x", (i, k))

    terms: dict[tuple[int, ...], float] = {}
    for k in range(num_clusters):
        for i in range(n - 1):
            for j in range(i + 1, n):
                w = mult.m3 * float(d[i][j])
                if w != 0.0:
                    terms[(x(i, k), x(j, k))] = w
    h = BinaryPolynomial(reg, terms)

    for i in range(n):
        form = BinaryPolynomial.linear_form(
            reg, 1.0, {x(i, k): -1.0 for k in range(num_clusters)}
        )
        h = h + form.square() * mult.m1

    for k in range(num_clusters):
        weights = {x(i, k): float(demands[i]) for i in range(n)}
        reg, slack = add_slack_unary(reg, f"slack_{k}", capacity - 1, min_demand)
        load = BinaryPolynomial.linear_form(reg, -float(capacity), weights) + slack
        h = h + load.square() * mult.m2
    return h


def qubo_clustering_decode(sample, num_customers, num_clusters, demands=None):
    """Read cluster labels off a sample; the lowest set cluster wins.

    Returns (assignment, multiplicity events), each event being
    (customer, set cluster ids) for rows with more than one bit set.
    """
    labels = [UNASSIGNED] * num_customers
    events = []
    for i in range(num_customers):
        row = [k for k in range(num_clusters) if sample[i * num_clusters + k]]
        if row:
            labels[i] = row[0]
            if len(row) > 1:
                events.append((i, row))
    assign = ClusterAssignment.from_labels(
        labels, num_clusters, demands if demands is not None else [0] * num_customers
    )
    return assign, events


def silhouette_score(labels, dist) -> float:
    """Mean silhouette over assigned points; singletons contribute 0."""
    d = _as_array(dist)
    labels = np.asarray(labels)
    assigned = np.flatnonzero(labels != UNASSIGNED)
    clusters = sorted({int(l) for l in labels[assigned]})
    nonempty = [c for c in clusters if (labels == c).sum() > 0]
    if len(nonempty) < 2:
        raise ValueError("silhouette needs at least two nonempty clusters")
    scores = []
    for i in assigned:
        own = labels[i]
        same = np.flatnonzero(labels == own)
        if len(same) == 1:
            scores.append(0.0)
            continue
        a = d[i, same[same != i]].mean()
        b = min(
            d[i, np.flatnonzero(labels == other)].mean()
            for other in nonempty
            if other != own
        )
        denom = max(a, b)
        scores.append(0.0 if denom == 0.0 else (b - a) / denom)
    return float(np.mean(scores))


def dip_clusterability(coords, bootstrap_n: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Dip statistic of the pairwise-distance sample, with a uniform bootstrap
    p-value: the fraction of equal-size uniform(0,1) samples whose dip is at
    least the observed one.  Low p reads as clusterable (multimodal distances).
    """
    pts = np.asarray(coords, dtype=float)
    if len(pts) < 4:
        raise ValueError("dip clusterability needs at least 4 points")
    diff = pts[:, None, :] - pts[None, :, :]
    dmat = np.sqrt((diff ** 2).sum(axis=-1))
    iu = np.triu_indices(len(pts), k=1)
    sample = dmat[iu]
    values, counts = np.unique(sample, return_counts=True)
    dip = kernels.dip_statistic(values, counts.astype(float))

    m = sample.size
    rng = np.random.default_rng(seed)
    ones = np.ones(m)
    exceed = 0
    for _ in range(bootstrap_n):
        u = np.sort(rng.random(m))
        if kernels.dip_statistic(u, ones) >= dip:
            exceed += 1
    return float(dip), exceed / bootstrap_n
