"""Pipeline drivers: wire instances through clustering, routing, and the
monolithic solver, with one master seed fanned out into labeled streams.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .clustering import (
    ClusterAssignment,
    ClusteringMultipliers,
    count_demand_errors,
    kmedoids_fit,
    qubo_clustering_build,
    qubo_clustering_decode,
    silhouette_score,
)
from .cvrp_qubo import solve_full
from .gls import route_clusters
from .instance_io import Instance, distances_without_depots, full_distance_matrix
from .qubo import compile_qubo
from .samplers import AnnealParams, simulated_annealing
from .tsp_qubo import qubo_route_clusters
from .validation import RoutedSolution, check_solution, total_distance

PIPELINES = (
    "hybrid-kmedoids-gls",
    "hybrid-kmedoids-qubo",
    "hybrid-qubo-gls",
    "hybrid-qubo-qubo",
    "full-qubo",
)


def derive_seed(master: int, label: str) -> int:
    """Stable 64-bit stream seed for a named stage of a run."""
    h = 0xCBF29CE484222325  # FNV-1a
    for ch in label.encode():
        h = ((h ^ ch) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    x = (master ^ h) & 0xFFFFFFFFFFFFFFFF
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass
class PipelineSettings:
    """Tunables shared by the CLI and the pipeline drivers.

    The K-Medoids defaults reproduce the published benchmark runs (all-pairs
    cluster cost, unit demand penalty).
    """

    seed: int = 0
    num_reads: int = 100
    sweeps: int = 1000
    kmedoids_cost_model: str = "pairwise"
    kmedoids_penalty: float = 1.0
    kmedoids_max_iters: int = 200
    gls_budget: int = 10000
    gls_lambda: float = 0.3
    gls_or_opt: bool = False
    cluster_m1: float = 50000.0
    cluster_m2: float = 20.0
    cluster_m3: float = 200.0
    routing_m_a: float = 150.0
    routing_m_b: float = 700.0
    subset_limit: int = 12
    full_sampler: str = "sa"

    def anneal_params(self, seed: int, num_reads: int | None = None) -> AnnealParams:
        return AnnealParams(
            num_reads=num_reads or self.num_reads, sweeps=self.sweeps, seed=seed
        )

    def cluster_multipliers(self) -> ClusteringMultipliers:
        return ClusteringMultipliers(self.cluster_m1, self.cluster_m2, self.cluster_m3)


@dataclass
class PipelineResult:
    solution: RoutedSolution
    assignment: ClusterAssignment | None
    silhouette: float | None
    demand_errors: int | None
    energy: float | None
    stream_seeds: dict[str, int] = field(default_factory=dict)

    @property
    def errors(self) -> int:
        total = self.solution.decode_errors
        if self.solution.report is not None:
            total += self.solution.report.total
        return total


def cluster_kmedoids(inst: Instance, settings: PipelineSettings) -> tuple[ClusterAssignment, int]:
    wo = distances_without_depots(full_distance_matrix(inst))
    return kmedoids_fit(
        wo,
        inst.num_vehicles,
        inst.demands,
        inst.capacity,
        max_iters=settings.kmedoids_max_iters,
        penalty=settings.kmedoids_penalty,
        cost_model=settings.kmedoids_cost_model,
    )


def cluster_qubo(
    inst: Instance, settings: PipelineSettings, seed: int
) -> tuple[ClusterAssignment, float]:
    wo = distances_without_depots(full_distance_matrix(inst))
    poly = qubo_clustering_build(
        wo,
        inst.num_vehicles,
        inst.demands,
        inst.capacity,
        settings.cluster_multipliers(),
    )
    q = compile_qubo(poly)
    best = simulated_annealing(q, settings.anneal_params(seed)).first
    assign, _events = qubo_clustering_decode(
        best.sample, inst.num_customers, inst.num_vehicles, inst.demands
    )
    return assign, best.energy


def run_pipeline(inst: Instance, pipeline: str, settings: PipelineSettings) -> PipelineResult:
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; choose from {PIPELINES}")
    seeds = {
        stage: derive_seed(settings.seed, f"{inst.name}/{stage}")
        for stage in ("clustering", "routing", "full")
    }
    full = full_distance_matrix(inst)

    if pipeline == "full-qubo":
        sol, energy = solve_full(
            inst,
            settings.anneal_params(seeds["full"]),
            sampler=settings.full_sampler,
            subset_limit=settings.subset_limit,
        )
        return PipelineResult(sol, None, None, None, energy, seeds)

    energy = None
    if pipeline.startswith("hybrid-kmedoids"):
        assign, _iters = cluster_kmedoids(inst, settings)
    else:
        assign, energy = cluster_qubo(inst, settings, seeds["clustering"])

    if pipeline.endswith("-gls"):
        sol = route_clusters(
            inst,
            assign,
            budget_per_cluster=settings.gls_budget,
            lambda_coeff=settings.gls_lambda,
            seed=seeds["routing"],
            use_or_opt=settings.gls_or_opt,
        )
    else:
        sol = qubo_route_clusters(
            inst,
            assign,
            settings.anneal_params(seeds["routing"]),
            m_a=settings.routing_m_a,
            m_b=settings.routing_m_b,
        )

    sol.report = check_solution(sol, inst)
    sol.distance = total_distance(sol, full)

    wo = distances_without_depots(full)
    try:
        sil = silhouette_score(assign.labels, wo)
    except ValueError:
        sil = None
    return PipelineResult(
        solution=sol,
        assignment=assign,
        silhouette=sil,
        demand_errors=count_demand_errors(assign, inst.demands, inst.capacity),
        energy=energy,
        stream_seeds=seeds,
    )
