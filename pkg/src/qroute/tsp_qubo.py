"""Phase 2 quantum-style routing: a Hamiltonian-cycle TSP QUBO per cluster.

Variables x[j, v] mean "node v sits at position j of the cycle" with the
depot fixed at position 0; the wrap-around arc back to the depot is added
at decode time, not in the objective.
"""
from __future__ import annotations

from dataclasses import dataclass

from ._pykernels import Xoshiro256
from .clustering import ClusterAssignment
from .instance_io import (
    DistanceMatrix,
    Instance,
    cluster_distance_matrix_closed,
    full_distance_matrix,
)
from .qubo import BinaryPolynomial, VariableRegistry, compile_qubo
from .samplers import AnnealParams, simulated_annealing
from .validation import RoutedSolution


class InvalidSampleError(ValueError):
    """Best sample does not decode to one node per position."""

    def __init__(self, positions):
        self.positions = list(positions)
        super().__init__(
            f"positions without exactly one assigned node: {self.positions}"
        )


@dataclass
class TspQubo:
    poly: BinaryPolynomial
    registry: VariableRegistry
    num_customers: int        # cluster size; node 0 is the depot
    m_a: float
    m_b: float

    @property
    def variable_count(self) -> int:
        return self.registry.total_count


def tsp_qubo_build(
    dist,
    m_a: float = 150.0,
    m_b: float = 700.0,
    double_constraint_multiplier: bool = False,
    open_chain_cost: bool = False,
) -> TspQubo:
    """Cycle constraints weighted by m_a, arc costs by m_b.

    The closing arc back to the depot is charged through the last position's
    occupant, so ground states minimize true cycle length.  Two compatibility
    flags reproduce historical variants: `open_chain_cost` drops the closing
    arc from the objective (the wrap is then only added at decode time, which
    biases ground states toward cycles with an expensive final arc), and
    `double_constraint_multiplier` squares m_a into the constraint block.
    """
    d = dist.values if isinstance(dist, DistanceMatrix) else dist
    size = len(d)  # n + 1 nodes including the depot
    n = size - 1
    if n < 1:
        raise ValueError("need at least one customer in the cluster")
    if m_a <= 0 or m_b <= 0:
        raise ValueError(f"multipliers must be positive, got m_a={m_a}, m_b={m_b}")

    reg = VariableRegistry()
    reg.register("p", (size, size))  # [position, node]

    def x(j, v):
        return reg.index("p", (j, v))

    ca = m_a * m_a if double_constraint_multiplier else m_a

    h = BinaryPolynomial(reg)
    # every node appears at exactly one position
    for v in range(size):
        form = BinaryPolynomial.linear_form(reg, 1.0, {x(j, v): -1.0 for j in range(size)})
        h = h + form.square() * ca
    # every position holds exactly one node
    for j in range(size):
        form = BinaryPolynomial.linear_form(reg, 1.0, {x(j, v): -1.0 for v in range(size)})
        h = h + form.square() * ca
    # the cycle is anchored at the depot
    anchor = BinaryPolynomial.linear_form(reg, 1.0, {x(0, 0): -1.0})
    h = h + anchor.square() * ca

    cost_terms: dict[tuple[int, ...], float] = {}
    for u in range(size):
        for v in range(size):
            if u == v:
                continue
            w = m_b * float(d[u][v])
            if w == 0.0:
                continue
            for j in range(size - 1):
                key = tuple(sorted((x(j, u), x(j + 1, v))))
                cost_terms[key] = cost_terms.get(key, 0.0) + w
    if not open_chain_cost:
        for v in range(1, size):
            w = m_b * float(d[v][0])
            if w != 0.0:
                key = (x(n, v),)
                cost_terms[key] = cost_terms.get(key, 0.0) + w
    h = h + BinaryPolynomial(reg, cost_terms)
    return TspQubo(h, reg, n, m_a, m_b)


def tsp_qubo_decode(sample, num_customers: int, cluster) -> tuple[list[int], list[tuple[int, int]]]:
    """Position-ordered path in global node indices, closed back to the depot.

    Local node 0 stays depot 0; local v maps to cluster[v-1] + 1.  Raises
    InvalidSampleError when any position has zero or multiple set nodes.
    """
    size = num_customers + 1
    bad = []
    path = []
    for j in range(size):
        row = [v for v in range(size) if sample[j * size + v]]
        if len(row) != 1:
            bad.append(j)
            continue
        v = row[0]
        path.append(0 if v == 0 else cluster[v - 1] + 1)
    if bad:
        raise InvalidSampleError(bad)
    path.append(0)
    arcs = [(path[i], path[i + 1]) for i in range(len(path) - 1)]
    return path, arcs


def qubo_route_clusters(
    inst: Instance,
    assign: ClusterAssignment,
    params: AnnealParams,
    m_a: float = 150.0,
    m_b: float = 700.0,
) -> RoutedSolution:
    """Build and sample one TSP QUBO per nonempty cluster.

    Clusters whose best sample fails to decode count as decode errors and
    contribute no route or distance.
    """
    full = None
    routes: list[list[tuple[int, int]]] = []
    total = 0.0
    decode_errors = 0
    rng = Xoshiro256(params.seed)
    for k in range(assign.num_clusters):
        members = assign.members(k)
        cluster_seed = rng.next64()
        if not members:
            continue
        closed = cluster_distance_matrix_closed(inst, members)
        model = tsp_qubo_build(closed, m_a=m_a, m_b=m_b)
        q = compile_qubo(model.poly)
        best = simulated_annealing(q, params.with_seed(cluster_seed)).first
        try:
            _, arcs = tsp_qubo_decode(best.sample, model.num_customers, members)
        except InvalidSampleError:
            decode_errors += 1
            continue
        routes.append(arcs)
        if full is None:
            full = full_distance_matrix(inst)
        total += sum(float(full.values[i][j]) for i, j in arcs)
    return RoutedSolution(
        routes,
        starting_depot=0,
        ending_depot=0,
        distance=total,
        decode_errors=decode_errors,
    )
