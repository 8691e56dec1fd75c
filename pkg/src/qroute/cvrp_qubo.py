"""The monolithic CVRP QUBO: an arcs-by-vehicles decision tensor with six
constraint families plus capacity and sub-tour slack bits.

Variables x[i, j, k] mean "vehicle k travels the arc i -> j" over nodes
0..C+1, where 0 is the start depot and C+1 the end depot.  Sub-tour
elimination enumerates every customer subset of size >= 2, so this solver
is practical only at toy scale, by design: the subset guard refuses
anything larger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .instance_io import Instance, full_distance_matrix
from .qubo import (
    BinaryPolynomial,
    VariableRegistry,
    add_slack_binary,
    add_slack_unary,
    compile_qubo,
)
from .samplers import AnnealParams, decompose_solve, simulated_annealing
from .validation import RoutedSolution, check_solution, total_distance


class SubsetLimitError(ValueError):
    """Guard against the exponential growth of the sub-tour constraint."""


@dataclass(frozen=True)
class CvrpMultipliers:
    cost: float = 1.0
    m1: float = 1.0  # each customer departed exactly once
    m2: float = 1.0  # each vehicle leaves the start depot
    m3: float = 1.0  # each vehicle reaches the end depot
    m4: float = 1.0  # flow conservation at customers
    m5: float = 1.0  # vehicle capacity
    m6: float = 1.0  # sub-tour elimination
    same_node_penalty: float = 1.0  # keeps the otherwise-free i -> i bits out of minima


def default_multipliers(inst: Instance) -> CvrpMultipliers:
    """No tuned set exists for the full solver; scale penalties with the
    largest possible route cost so constraints dominate the cost term."""
    full = full_distance_matrix(inst)
    m = 10.0 * float(full.values.max()) * max(inst.num_customers, 1)
    return CvrpMultipliers(
        cost=1.0, m1=m, m2=m, m3=m, m4=m, m5=m, m6=m, same_node_penalty=m
    )


@dataclass
class VariableCensus:
    decision: int
    capacity_slack: int
    subtour_slack: int

    @property
    def total(self) -> int:
        return self.decision + self.capacity_slack + self.subtour_slack


def variable_census(num_customers: int, num_vehicles: int, capacity: int) -> VariableCensus:
    decision = (num_customers + 2) ** 2 * num_vehicles
    capacity_slack = num_vehicles * (capacity - 1)
    subtour_slack = sum(
        math.comb(num_customers, s) * (s - 1) for s in range(2, num_customers + 1)
    )
    return VariableCensus(decision, capacity_slack, subtour_slack)


def customer_subsets(num_customers: int):
    """All subsets of customer node ids {1..C} with 2 <= |S| <= C, by size."""
    ids = range(1, num_customers + 1)
    for size in range(2, num_customers + 1):
        yield from combinations(ids, size)


@dataclass
class CvrpQubo:
    poly: BinaryPolynomial
    registry: VariableRegistry
    num_customers: int
    num_vehicles: int
    capacity: int
    demands: tuple[int, ...]
    distances: "object"  # (C+2) x (C+2) array, [depot, customers..., depot]
    subsets: list[tuple[int, ...]]
    multipliers: CvrpMultipliers
    census: VariableCensus


def cvrp_qubo_build(
    inst: Instance,
    multipliers: CvrpMultipliers | None = None,
    subset_limit: int = 12,
    capacity_slack_encoding: str = "unary",
) -> CvrpQubo:
    """Default capacity slack is unary with step 1 (capacity - 1 bits per
    vehicle, as the census assumes); "binary" swaps in the compact encoding
    covering [0, capacity] with ceil(log2(capacity + 1)) bits."""
    if inst.num_customers > subset_limit:
        raise SubsetLimitError(
            f"{inst.num_customers} customers need {2 ** inst.num_customers} "
            f"sub-tour subsets; refusing above the limit of {subset_limit} "
            "(slack bits grow exponentially with the number of customers)"
        )
    if capacity_slack_encoding not in ("unary", "binary"):
        raise ValueError(f"unknown slack encoding {capacity_slack_encoding!r}")
    mult = multipliers or default_multipliers(inst)
    nc, nv, cap = inst.num_customers, inst.num_vehicles, inst.capacity
    nodes = nc + 2
    d = full_distance_matrix(inst).values

    reg = VariableRegistry()
    reg.register("x", (nodes, nodes, nv))

    def x(i, j, k):
        return reg.index("x", (i, j, k))

    cap_slacks = []
    for k in range(nv):
        if capacity_slack_encoding == "unary":
            reg, form = add_slack_unary(reg, f"cap_slack_{k}", cap - 1, 1)
        else:
            reg, form = add_slack_binary(reg, f"cap_slack_{k}", cap)
        cap_slacks.append(form)
    subsets = list(customer_subsets(nc))
    sub_slacks = []
    for e, s in enumerate(subsets):
        reg, form = add_slack_unary(reg, f"sub_slack_{e}", len(s) - 1, 1)
        sub_slacks.append(form)

    cost_terms: dict[tuple[int, ...], float] = {}
    for k in range(nv):
        for i in range(nodes):
            for j in range(nodes):
                w = mult.same_node_penalty if i == j else mult.cost * float(d[i][j])
                if w != 0.0:
                    cost_terms[(x(i, j, k),)] = w
    h = BinaryPolynomial(reg, cost_terms)

    # each customer is departed exactly once, by some vehicle
    for i in range(1, nc + 1):
        weights = {x(i, j, k): -1.0 for k in range(nv) for j in range(nodes) if j != i}
        h = h + BinaryPolynomial.linear_form(reg, 1.0, weights).square() * mult.m1

    # every vehicle leaves the start depot once
    for k in range(nv):
        weights = {x(0, j, k): -1.0 for j in range(nodes)}
        h = h + BinaryPolynomial.linear_form(reg, 1.0, weights).square() * mult.m2

    # every vehicle enters the end depot once
    for k in range(nv):
        weights = {x(i, nc + 1, k): -1.0 for i in range(nodes)}
        h = h + BinaryPolynomial.linear_form(reg, 1.0, weights).square() * mult.m3

    # arriving at a customer implies leaving it
    for hnode in range(1, nc + 1):
        for k in range(nv):
            weights = {x(i, hnode, k): 1.0 for i in range(nodes) if i != hnode}
            for j in range(nodes):
                if j != hnode:
                    weights[x(hnode, j, k)] = -1.0
            h = h + BinaryPolynomial.linear_form(reg, 0.0, weights).square() * mult.m4

    # carried demand within capacity (tail demand over customer-customer arcs)
    for k in range(nv):
        weights = {}
        for i in range(1, nc + 1):
            for j in range(1, nc + 1):
                if i != j:
                    weights[x(i, j, k)] = float(inst.demands[i - 1])
        load = BinaryPolynomial.linear_form(reg, -float(cap), weights) + cap_slacks[k]
        h = h + load.square() * mult.m5

    # no closed loops among any customer subset
    for e, s in enumerate(subsets):
        weights = {}
        for k in range(nv):
            for i in s:
                for j in s:
                    if i != j:
                        weights[x(i, j, k)] = 1.0
        bound = float(len(s) - 1)
        form = BinaryPolynomial.linear_form(reg, -bound, weights) + sub_slacks[e]
        h = h + form.square() * mult.m6

    return CvrpQubo(
        poly=h,
        registry=reg,
        num_customers=nc,
        num_vehicles=nv,
        capacity=cap,
        demands=tuple(inst.demands),
        distances=d,
        subsets=subsets,
        multipliers=mult,
        census=variable_census(nc, nv, cap),
    )


def cvrp_qubo_decode(sample, num_customers: int, num_vehicles: int) -> RoutedSolution:
    """Faithful decode: every set decision bit becomes an arc, unfiltered."""
    nodes = num_customers + 2
    routes: list[list[tuple[int, int]]] = [[] for _ in range(num_vehicles)]
    pos = 0
    for i in range(nodes):
        for j in range(nodes):
            for k in range(num_vehicles):
                if sample[pos]:
                    routes[k].append((i, j))
                pos += 1
    return RoutedSolution(routes, starting_depot=0, ending_depot=num_customers + 1)


def _unary_value(model: CvrpQubo, name: str, sample) -> float:
    count = model.registry.shape(name)[0]
    base = model.registry.offset(name)
    return float(sum((l + 1) for l in range(count) if sample[base + l]))


def _set_unary(model: CvrpQubo, name: str, value: int, sample):
    count = model.registry.shape(name)[0]
    remaining = int(value)
    for w in range(count, 0, -1):  # weights are 1..count, so greedy is exact
        if remaining >= w:
            sample[model.registry.index(name, w - 1)] = 1
            remaining -= w
    if remaining:
        raise ValueError(f"cannot represent slack value {value} in {name}")


def encode_solution(model: CvrpQubo, routes) -> list[int]:
    """Bit vector for per-vehicle arc lists, slacks set to their certifying
    values so a feasible solution leaves zero residual in every constraint."""
    sample = [0] * model.registry.total_count
    nc = model.num_customers
    for k, route in enumerate(routes):
        for i, j in route:
            sample[model.registry.index("x", (i, j, k))] = 1
    for k, route in enumerate(routes):
        tail_load = sum(
            model.demands[i - 1]
            for i, j in route
            if 1 <= i <= nc and 1 <= j <= nc and i != j
        )
        _set_unary(model, f"cap_slack_{k}", model.capacity - tail_load, sample)
    for e, s in enumerate(model.subsets):
        inside = sum(
            1
            for route in routes
            for i, j in route
            if i in s and j in s and i != j
        )
        _set_unary(model, f"sub_slack_{e}", (len(s) - 1) - inside, sample)
    return sample


def energy_breakdown(model: CvrpQubo, sample) -> dict[str, float]:
    """Constraint residuals recomputed combinatorially from the decoded arcs
    and slack bits; ties the compiled algebra back to route semantics."""
    nc, nv = model.num_customers, model.num_vehicles
    mult = model.multipliers
    sol = cvrp_qubo_decode(sample, nc, nv)
    routes = sol.routes

    cost = 0.0
    diag = 0
    for route in routes:
        for i, j in route:
            if i == j:
                diag += 1
            else:
                cost += mult.cost * float(model.distances[i][j])

    c1 = 0.0
    for i in range(1, nc + 1):
        departures = sum(
            1 for route in routes for (a, b) in route if a == i and b != i
        )
        c1 += (1.0 - departures) ** 2
    c2 = sum(
        (1.0 - sum(1 for (a, b) in route if a == 0)) ** 2 for route in routes
    )
    c3 = sum(
        (1.0 - sum(1 for (a, b) in route if b == nc + 1)) ** 2 for route in routes
    )
    c4 = 0.0
    for hnode in range(1, nc + 1):
        for route in routes:
            arrive = sum(1 for (a, b) in route if b == hnode and a != hnode)
            leave = sum(1 for (a, b) in route if a == hnode and b != hnode)
            c4 += (arrive - leave) ** 2
    c5 = 0.0
    for k, route in enumerate(routes):
        tail_load = sum(
            model.demands[a - 1]
            for (a, b) in route
            if 1 <= a <= nc and 1 <= b <= nc and a != b
        )
        slack = _unary_value(model, f"cap_slack_{k}", sample)
        c5 += (tail_load - model.capacity + slack) ** 2
    c6 = 0.0
    for e, s in enumerate(model.subsets):
        inside = sum(
            1 for route in routes for (a, b) in route if a in s and b in s and a != b
        )
        slack = _unary_value(model, f"sub_slack_{e}", sample)
        c6 += (inside - (len(s) - 1) + slack) ** 2
    total = (
        cost
        + mult.same_node_penalty * diag
        + mult.m1 * c1
        + mult.m2 * c2
        + mult.m3 * c3
        + mult.m4 * c4
        + mult.m5 * c5
        + mult.m6 * c6
    )
    return {
        "cost": cost,
        "diag_arcs": float(diag),
        "c1": c1,
        "c2": c2,
        "c3": c3,
        "c4": c4,
        "c5": c5,
        "c6": c6,
        "total": total,
    }


def solve_full(
    inst: Instance,
    params: AnnealParams,
    multipliers: CvrpMultipliers | None = None,
    sampler: str = "sa",
    subset_limit: int = 12,
    decompose_subsize: int | None = None,
    decompose_rounds: int = 50,
) -> tuple[RoutedSolution, float]:
    """Build, sample, decode, and audit the monolithic QUBO."""
    model = cvrp_qubo_build(inst, multipliers, subset_limit)
    q = compile_qubo(model.poly)
    if sampler == "sa":
        result = simulated_annealing(q, params)
    elif sampler == "decompose":
        subsize = decompose_subsize or max(1, q.variable_count // 2)
        result = decompose_solve(
            q, subsize=subsize, rounds=decompose_rounds, inner="sa", seed=params.seed
        )
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    best = result.first
    sol = cvrp_qubo_decode(best.sample, model.num_customers, model.num_vehicles)
    sol.report = check_solution(sol, inst)
    sol.distance = total_distance(sol, full_distance_matrix(inst))
    return sol, best.energy
