"""Phase 2 classical routing: guided local search around first-improvement
2-opt, applied per cluster over closed [depot, members...] matrices.

The augmented objective is g(x) = sum d_ij + delta * sum p_ij * c_ij over
the arcs the tour traverses; penalties increment on the maximum-utility
arcs (utility c_ij / (1 + p_ij)) at every local optimum, and the incumbent
is tracked under the true cost throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._pykernels import Xoshiro256
from .clustering import ClusterAssignment
from .instance_io import DistanceMatrix, Instance, cluster_distance_matrix_closed
from .validation import RoutedSolution


@dataclass
class Tour:
    nodes: list[int]  # closed: starts and ends at index 0
    length: float


@dataclass
class GlsState:
    penalties: np.ndarray
    delta: float
    incumbent: Tour


def _as_array(dist) -> np.ndarray:
    d = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    return d


def tour_length(nodes, dist) -> float:
    d = _as_array(dist)
    return float(sum(d[nodes[i], nodes[i + 1]] for i in range(len(nodes) - 1)))


def augmented_cost(nodes, dist, penalties, delta: float) -> float:
    d = _as_array(dist)
    total = 0.0
    for i in range(len(nodes) - 1):
        a, b = nodes[i], nodes[i + 1]
        total += d[a, b] + delta * penalties[a, b] * d[a, b]
    return total


def _nearest_neighbor(d: np.ndarray, start: int) -> list[int]:
    n = d.shape[0]
    unvisited = set(range(n))
    unvisited.remove(start)
    tour = [start]
    while unvisited:
        here = tour[-1]
        nxt = min(unvisited, key=lambda j: (d[here, j], j))
        tour.append(nxt)
        unvisited.remove(nxt)
    # rotate so the depot leads, then close the cycle
    k = tour.index(0)
    tour = tour[k:] + tour[:k]
    return tour + [0]


def two_opt_step(nodes, dist, penalties=None, delta: float = 0.0):
    """First 2-opt move (canonical edge order) that improves the cost; the
    cost is the true length unless penalties are supplied.  Returns the
    improved node list, or None at a local optimum."""
    d = _as_array(dist)

    def arc(a, b):
        base = d[a, b]
        if penalties is None:
            return base
        return base + delta * penalties[a, b] * base

    m = len(nodes) - 1  # arcs in the closed tour
    for i in range(m - 1):
        for j in range(i + 1, m):
            a, b = nodes[i], nodes[i + 1]
            c, e = nodes[j], nodes[j + 1]
            if a == c or b == e:
                continue
            gain = arc(a, c) + arc(b, e) - arc(a, b) - arc(c, e)
            if gain < -1e-12:
                return nodes[: i + 1] + nodes[i + 1: j + 1][::-1] + nodes[j + 1:]
    return None


def _or_opt_step(nodes, dist, penalties=None, delta: float = 0.0):
    """Relocate a segment of length 1..3; first improvement or None."""
    d = _as_array(dist)

    def arc(a, b):
        base = d[a, b]
        if penalties is None:
            return base
        return base + delta * penalties[a, b] * base

    m = len(nodes) - 1
    for seg in (1, 2, 3):
        for i in range(1, m - seg + 1):
            before, after = nodes[i - 1], nodes[i + seg]
            chunk = nodes[i: i + seg]
            removed = arc(before, chunk[0]) + arc(chunk[-1], after) - arc(before, after)
            base = nodes[:i] + nodes[i + seg:]
            for j in range(len(base) - 1):
                a, b = base[j], base[j + 1]
                if a == before and b == after:
                    continue
                added = arc(a, chunk[0]) + arc(chunk[-1], b) - arc(a, b)
                if added - removed < -1e-12:
                    return base[: j + 1] + chunk + base[j + 1:]
    return None


def gls_tsp(
    dist,
    iter_budget: int = 10000,
    lambda_coeff: float = 0.3,
    seed: int = 0,
    use_or_opt: bool = False,
) -> Tour:
    """Guided local search from a nearest-neighbor start.

    Both applied moves and penalty updates consume the iteration budget, so
    the search terminates even when no 2-opt move exists.
    """
    d = _as_array(dist)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least a depot and one node")
    if n == 2:
        return Tour([0, 1, 0], tour_length([0, 1, 0], d))

    rng = Xoshiro256(seed)
    nodes = _nearest_neighbor(d, rng.bounded(n))
    penalties = np.zeros((n, n), dtype=np.int64)
    best = Tour(list(nodes), tour_length(nodes, d))

    steps = 0
    while steps < iter_budget:
        delta = lambda_coeff * tour_length(nodes, d) / n
        moved = False
        while steps < iter_budget:
            nxt = two_opt_step(nodes, d, penalties, delta)
            if nxt is None and use_or_opt:
                nxt = _or_opt_step(nodes, d, penalties, delta)
            if nxt is None:
                break
            nodes = nxt
            steps += 1
            moved = True
            true_len = tour_length(nodes, d)
            if true_len < best.length - 1e-12:
                best = Tour(list(nodes), true_len)
        if steps >= iter_budget:
            break
        # local optimum of the augmented cost: penalize max-utility arcs
        utilities = [
            d[nodes[i], nodes[i + 1]] / (1.0 + penalties[nodes[i], nodes[i + 1]])
            for i in range(len(nodes) - 1)
        ]
        top = max(utilities)
        for i, u in enumerate(utilities):
            if u == top:
                a, b = nodes[i], nodes[i + 1]
                penalties[a, b] += 1
                penalties[b, a] += 1
        steps += 1
        if not moved and all(u == top for u in utilities):
            # uniform arcs: every tour is equivalent, nothing left to guide
            break
    return best


def route_clusters(
    inst: Instance,
    assign: ClusterAssignment,
    budget_per_cluster: int = 10000,
    lambda_coeff: float = 0.3,
    seed: int = 0,
    use_or_opt: bool = False,
) -> RoutedSolution:
    """One GLS tour per nonempty cluster, remapped to global node indices
    (depot = 0, customer i -> i + 1)."""
    routes: list[list[tuple[int, int]]] = []
    total = 0.0
    rng = Xoshiro256(seed)
    for k in range(assign.num_clusters):
        members = assign.members(k)
        cluster_seed = rng.next64()
        if not members:
            continue
        closed = cluster_distance_matrix_closed(inst, members)
        tour = gls_tsp(
            closed,
            iter_budget=budget_per_cluster,
            lambda_coeff=lambda_coeff,
            seed=cluster_seed,
            use_or_opt=use_or_opt,
        )
        remap = [0] + [i + 1 for i in members]
        arcs = [
            (remap[tour.nodes[t]], remap[tour.nodes[t + 1]])
            for t in range(len(tour.nodes) - 1)
        ]
        routes.append(arcs)
        total += tour.length
    return RoutedSolution(routes, starting_depot=0, ending_depot=0, distance=total)
