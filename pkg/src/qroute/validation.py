"""Independent constraint auditor and distance accountant for routed solutions.

Solutions are per-vehicle arc lists.  Hybrid pipelines use node 0 as both
the starting and ending depot; the monolithic solver starts at 0 and ends
at num_customers + 1.  Malformed arcs count as violations; nothing here
raises on bad solutions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance_io import DistanceMatrix, Instance

Arc = tuple[int, int]


@dataclass(frozen=True)
class ViolationReport:
    visit_errors: int = 0          # customers unvisited or visited more than once
    depot_start_errors: int = 0    # vehicles that never leave the starting depot
    depot_end_errors: int = 0      # vehicles that never reach the ending depot
    dead_end_errors: int = 0       # arrivals that are never followed by a departure
    impossible_leave_errors: int = 0  # departures from nodes never arrived at
    loop_errors: int = 0           # extra connected components in a vehicle's route
    capacity_errors: int = 0       # vehicles loaded beyond capacity

    @property
    def total(self) -> int:
        return (
            self.visit_errors
            + self.depot_start_errors
            + self.depot_end_errors
            + self.dead_end_errors
            + self.impossible_leave_errors
            + self.loop_errors
            + self.capacity_errors
        )

    def as_dict(self) -> dict:
        return {
            "visit": self.visit_errors,
            "depot_start": self.depot_start_errors,
            "depot_end": self.depot_end_errors,
            "dead_end": self.dead_end_errors,
            "impossible_leave": self.impossible_leave_errors,
            "loop": self.loop_errors,
            "capacity": self.capacity_errors,
            "total": self.total,
        }


@dataclass
class RoutedSolution:
    """Per-vehicle ordered arc lists over global node indices."""

    routes: list[list[Arc]]
    starting_depot: int = 0
    ending_depot: int = 0
    distance: float = 0.0
    report: ViolationReport | None = None
    decode_errors: int = 0  # clusters whose best sample failed to decode

    @property
    def num_vehicles(self) -> int:
        return len(self.routes)


def _check_visits(routes, num_customers) -> int:
    visits = [0] * num_customers
    for route in routes:
        for _, head in route:
            if 1 <= head <= num_customers:
                visits[head - 1] += 1
    return sum(1 for v in visits if v != 1)


def _check_depot_start(routes, starting_depot) -> int:
    return sum(1 for route in routes if not any(t == starting_depot for t, _ in route))


def _check_depot_end(routes, ending_depot) -> int:
    return sum(1 for route in routes if not any(h == ending_depot for _, h in route))


def _check_dead_ends(routes, ending_depot) -> int:
    errors = 0
    for route in routes:
        for arc in route:
            if arc[1] == ending_depot:
                continue
            leaving = sum(1 for t in route if t[0] == arc[1] and t[0] != t[1])
            if leaving != 1:
                errors += 1
    return errors


def _check_impossible_leaves(routes, starting_depot) -> int:
    errors = 0
    for route in routes:
        for arc in route:
            if arc[0] == starting_depot:
                continue
            arriving = sum(1 for t in route if t[1] == arc[0] and t[0] != t[1])
            if arriving != 1:
                errors += 1
    return errors


def _check_loops(routes) -> int:
    """Successor-map traversal; each extra connected component is one error."""
    errors = 0
    for route in routes:
        succ = {}
        for tail, head in route:
            succ[tail] = head
        visited = set()
        components = 0
        for start in succ:
            if start in visited:
                continue
            components += 1
            node = start
            while node in succ and node not in visited:
                visited.add(node)
                node = succ[node]
        if components > 1:
            errors += components - 1
    return errors


def route_loads(sol: RoutedSolution, demands) -> list[int]:
    """Demand carried per vehicle: sum over arc heads, depot heads excluded."""
    depots = {sol.starting_depot, sol.ending_depot}
    loads = []
    for route in sol.routes:
        load = 0
        for _, head in route:
            if head not in depots and 1 <= head <= len(demands):
                load += demands[head - 1]
        loads.append(load)
    return loads


def check_solution(
    sol: RoutedSolution,
    inst: Instance,
    starting_depot: int | None = None,
    ending_depot: int | None = None,
) -> ViolationReport:
    start = sol.starting_depot if starting_depot is None else starting_depot
    end = sol.ending_depot if ending_depot is None else ending_depot
    routes = sol.routes
    loads = route_loads(
        RoutedSolution(routes, starting_depot=start, ending_depot=end), inst.demands
    )
    return ViolationReport(
        visit_errors=_check_visits(routes, inst.num_customers),
        depot_start_errors=_check_depot_start(routes, start),
        depot_end_errors=_check_depot_end(routes, end),
        dead_end_errors=_check_dead_ends(routes, end),
        impossible_leave_errors=_check_impossible_leaves(routes, start),
        loop_errors=_check_loops(routes),
        capacity_errors=sum(1 for ld in loads if ld > inst.capacity),
    )


def total_distance(sol: RoutedSolution, dist: DistanceMatrix | np.ndarray) -> float:
    """Sum of arc distances over a FULL-ordered matrix (or raw array)."""
    values = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist)
    total = 0.0
    for route in sol.routes:
        for i, j in route:
            total += float(values[i][j])
    return total
