"""Benchmark harness CLI.

Subcommands: solve, grid-cluster, grid-route, reads-sweep, census, render,
bench-kernels.  Options come from a JSON config document; CLI flags override
config keys, and the QROUTE_SEED environment variable overrides both.

All CSV schemas are fixed:
  summary.csv       Problem,Nodes,Clusters,Time,Errors,Distance
  grid_cluster.csv  Problem,Constraint 1,Constraint 2,Unassigned Nodes,Demand Errors,Silhouette
  grid_route.csv    Problem,Constraint 1,Constraint 2,Errors,Distance
  reads_sweep.csv   Problem,Nodes,Vehicles,# Reads,Time,Errors,Distance
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dc_fields

import numpy as np

from .clustering import count_demand_errors, qubo_clustering_build, qubo_clustering_decode, silhouette_score
from .cvrp_qubo import variable_census
from .instance_io import Instance, distances_without_depots, full_distance_matrix, load_instance
from .pipelines import PipelineResult, PipelineSettings, derive_seed, run_pipeline, PIPELINES
from .qubo import compile_qubo
from .samplers import simulated_annealing
from .svg import render_routes_svg
from .tsp_qubo import qubo_route_clusters
from .validation import check_solution, total_distance

SUMMARY_HEADER = ["Problem", "Nodes", "Clusters", "Time", "Errors", "Distance"]
GRID_CLUSTER_HEADER = [
    "Problem", "Constraint 1", "Constraint 2", "Unassigned Nodes", "Demand Errors", "Silhouette",
]
GRID_ROUTE_HEADER = ["Problem", "Constraint 1", "Constraint 2", "Errors", "Distance"]
READS_SWEEP_HEADER = ["Problem", "Nodes", "Vehicles", "# Reads", "Time", "Errors", "Distance"]

DEFAULT_M1_GRID = [1000.0, 5000.0, 10000.0, 50000.0, 100000.0]
DEFAULT_M2_GRID = [1.0, 5.0, 10.0, 20.0, 50.0]
DEFAULT_MA_GRID = [50.0, 100.0, 150.0, 300.0]
DEFAULT_MB_GRID = [100.0, 400.0, 700.0, 1000.0]


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def build_settings(cfg: dict, args) -> PipelineSettings:
    settings = PipelineSettings()
    names = {f.name for f in dc_fields(PipelineSettings)}
    for key, value in cfg.items():
        if key in names:
            setattr(settings, key, value)
    for key in names:
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(settings, key, flag)
    env_seed = os.environ.get("QROUTE_SEED")
    if env_seed is not None:
        settings.seed = int(env_seed)
    return settings


def resolve_instances(cfg: dict, args) -> list[str]:
    paths = list(args.instance or []) or list(cfg.get("instances", []))
    if not paths:
        raise SystemExit("no instances given (use --instance or config 'instances')")
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise SystemExit(f"instance files not found: {missing}")
    return paths


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv_rows(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def _write_manifest(out_dir: str, seeds: dict) -> None:
    path = os.path.join(out_dir, "seed_manifest.json")
    existing = {}
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            existing = json.load(fh)
    existing.update(seeds)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(existing, fh, indent=2, sort_keys=True)
        fh.write("\n")


def solution_document(inst: Instance, pipeline: str, seed: int, result: PipelineResult, wall: float) -> dict:
    sol = result.solution
    return {
        "instance": inst.name,
        "pipeline": pipeline,
        "seed": seed,
        "routes": [[[int(i), int(j)] for i, j in route] for route in sol.routes],
        "distance": round(sol.distance, 6),
        "violations": sol.report.as_dict() if sol.report else {},
        "wall_s": wall,
    }


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    settings = build_settings(cfg, args)
    paths = resolve_instances(cfg, args)
    pipeline = args.pipeline or cfg.get("pipeline", "hybrid-kmedoids-gls")
    out_dir = args.out or cfg.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    for path in paths:
        inst = load_instance(path)
        t0 = time.perf_counter()
        result = run_pipeline(inst, pipeline, settings)
        wall = time.perf_counter() - t0
        doc = solution_document(inst, pipeline, settings.seed, result, round(wall, 6))
        sol_path = os.path.join(out_dir, f"{inst.name}.solution.json")
        with open(sol_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        rows.append([
            inst.name,
            inst.num_customers,
            inst.num_vehicles,
            f"{wall:.2f}",
            result.errors,
            f"{result.solution.distance:.2f}",
        ])
        _write_manifest(out_dir, {f"{inst.name}/{k}": v for k, v in result.stream_seeds.items()})
        print(f"{inst.name}: distance={result.solution.distance:.2f} errors={result.errors} ({wall:.2f}s)")

    summary = os.path.join(out_dir, "summary.csv")
    new_file = not os.path.exists(summary)
    with open(summary, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(SUMMARY_HEADER)
        writer.writerows(rows)
    return 0


def _grid_cells(paths, grid_a, grid_b):
    for path in paths:
        for a in grid_a:
            for b in grid_b:
                yield path, a, b


def _run_cells(cells, worker, max_workers):
    """Evaluate cells in a pool; results keyed by cell keep canonical order."""
    cells = list(cells)
    if max_workers <= 1:
        return [worker(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(worker, cells))


def cmd_grid_cluster(args) -> int:
    cfg = load_config(args.config)
    settings = build_settings(cfg, args)
    paths = resolve_instances(cfg, args)
    grid1 = args.m1_grid or cfg.get("m1_grid", DEFAULT_M1_GRID)
    grid2 = args.m2_grid or cfg.get("m2_grid", DEFAULT_M2_GRID)
    out_dir = args.out or cfg.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)

    instances = {p: load_instance(p) for p in paths}

    def worker(cell):
        path, m1, m2 = cell
        inst = instances[path]
        wo = distances_without_depots(full_distance_matrix(inst))
        from .clustering import ClusteringMultipliers

        poly = qubo_clustering_build(
            wo, inst.num_vehicles, inst.demands, inst.capacity,
            ClusteringMultipliers(m1, m2, settings.cluster_m3),
        )
        q = compile_qubo(poly)
        seed = derive_seed(settings.seed, f"{inst.name}/grid-cluster/{m1}/{m2}")
        best = simulated_annealing(q, settings.anneal_params(seed)).first
        assign, _ = qubo_clustering_decode(best.sample, inst.num_customers, inst.num_vehicles, inst.demands)
        unassigned = len(assign.unassigned)
        errors = count_demand_errors(assign, inst.demands, inst.capacity)
        try:
            sil = silhouette_score(assign.labels, wo)
        except ValueError:
            sil = 0.0
        return [inst.name, m1, m2, unassigned, errors, f"{sil:.6f}"]

    rows = _run_cells(_grid_cells(paths, grid1, grid2), worker, args.workers)
    out_path = os.path.join(out_dir, "grid_cluster.csv")
    write_csv(out_path, GRID_CLUSTER_HEADER, rows)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


def cmd_grid_route(args) -> int:
    cfg = load_config(args.config)
    settings = build_settings(cfg, args)
    paths = resolve_instances(cfg, args)
    grid_a = args.ma_grid or cfg.get("ma_grid", DEFAULT_MA_GRID)
    grid_b = args.mb_grid or cfg.get("mb_grid", DEFAULT_MB_GRID)
    out_dir = args.out or cfg.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)

    instances = {p: load_instance(p) for p in paths}
    assignments = {}
    for p, inst in instances.items():
        from .pipelines import cluster_kmedoids

        assignments[p], _ = cluster_kmedoids(inst, settings)

    def worker(cell):
        path, m_a, m_b = cell
        inst = instances[path]
        seed = derive_seed(settings.seed, f"{inst.name}/grid-route/{m_a}/{m_b}")
        sol = qubo_route_clusters(
            inst, assignments[path], settings.anneal_params(seed), m_a=m_a, m_b=m_b
        )
        sol.report = check_solution(sol, inst)
        sol.distance = total_distance(sol, full_distance_matrix(inst))
        errors = sol.decode_errors + sol.report.total
        return [inst.name, m_a, m_b, errors, f"{sol.distance:.2f}"]

    rows = _run_cells(_grid_cells(paths, grid_a, grid_b), worker, args.workers)
    out_path = os.path.join(out_dir, "grid_route.csv")
    write_csv(out_path, GRID_ROUTE_HEADER, rows)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


def cmd_reads_sweep(args) -> int:
    cfg = load_config(args.config)
    settings = build_settings(cfg, args)
    paths = resolve_instances(cfg, args)
    reads_list = args.reads_list or cfg.get("reads_list", [10, 100, 1000])
    out_dir = args.out or cfg.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    for path in paths:
        inst = load_instance(path)
        from .pipelines import cluster_kmedoids

        assign, _ = cluster_kmedoids(inst, settings)
        full = full_distance_matrix(inst)
        for reads in reads_list:
            seed = derive_seed(settings.seed, f"{inst.name}/reads-sweep/{reads}")
            t0 = time.perf_counter()
            sol = qubo_route_clusters(
                inst,
                assign,
                settings.anneal_params(seed, num_reads=int(reads)),
                m_a=settings.routing_m_a,
                m_b=settings.routing_m_b,
            )
            wall = time.perf_counter() - t0
            sol.report = check_solution(sol, inst)
            sol.distance = total_distance(sol, full)
            errors = sol.decode_errors + sol.report.total
            rows.append([
                inst.name, inst.num_customers, inst.num_vehicles,
                int(reads), f"{wall:.2f}", errors, f"{sol.distance:.2f}",
            ])

    out_path = os.path.join(out_dir, "reads_sweep.csv")
    write_csv(out_path, READS_SWEEP_HEADER, rows)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


def cmd_census(args) -> int:
    if args.clustering:
        if args.min_demand is None:
            raise SystemExit("--min-demand is required with --clustering")
        from .clustering import clustering_variable_count

        total = clustering_variable_count(
            args.customers, args.vehicles, args.capacity, args.min_demand
        )
        print(f"clustering variables: {total}")
        return 0
    census = variable_census(args.customers, args.vehicles, args.capacity)
    print(f"decision variables: {census.decision}")
    print(f"capacity slack bits: {census.capacity_slack}")
    print(f"subtour slack bits: {census.subtour_slack}")
    print(f"total: {census.total}")
    return 0


def cmd_render(args) -> int:
    with open(args.solution, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    inst = load_instance(args.instance)
    svg = render_routes_svg(doc.get("routes", []), inst)
    out = args.out or (os.path.splitext(args.solution)[0] + ".svg")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {out}")
    return 0


def cmd_bench_kernels(args) -> int:
    from .kernels import available_backends, get_backend

    rng = np.random.default_rng(args.seed)
    n = args.vars
    linear = rng.integers(-10, 11, n).astype(float)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
    counts = np.zeros(n + 1, dtype=np.int64)
    for i, j in pairs:
        counts[i + 1] += 1
        counts[j + 1] += 1
    ptr = np.cumsum(counts)
    idx = np.zeros(ptr[-1], dtype=np.int64)
    wgt = np.zeros(ptr[-1])
    cursor = ptr[:-1].copy()
    for i, j in pairs:
        w = float(rng.integers(-10, 11))
        idx[cursor[i]] = j
        wgt[cursor[i]] = w
        cursor[i] += 1
        idx[cursor[j]] = i
        wgt[cursor[j]] = w
        cursor[j] += 1
    betas = np.geomspace(0.05, 5.0, args.sweeps)

    print(f"annealing benchmark: {n} vars, {args.reads} reads x {args.sweeps} sweeps")
    results = {}
    for name in available_backends():
        backend = get_backend(name)
        reads = args.reads if name == "native" else max(1, args.reads // 10)
        t0 = time.perf_counter()
        out = backend.sa_sample(linear, ptr, idx, wgt, betas, args.seed, reads)
        dt = (time.perf_counter() - t0) / reads * args.reads
        results[name] = (dt, out[: max(1, args.reads // 10)])
        print(f"  {name:7s} {dt:8.3f} s (extrapolated from {reads} reads)" if reads != args.reads
              else f"  {name:7s} {dt:8.3f} s")
    if len(results) == 2:
        same = np.array_equal(results["native"][1], results["python"][1])
        speedup = results["python"][0] / results["native"][0]
        print(f"  backends agree on shared reads: {same}")
        print(f"  native speedup: {speedup:.0f}x")
    return 0


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok]


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qroute", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--instance", action="append", help="instance path (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, dest="seed")
        p.add_argument("--reads", type=int, dest="num_reads")
        p.add_argument("--sweeps", type=int, dest="sweeps")
        p.add_argument("--workers", type=int, default=1)

    p_solve = sub.add_parser("solve", help="run one pipeline end to end")
    add_common(p_solve)
    p_solve.add_argument("--pipeline", choices=PIPELINES)
    p_solve.set_defaults(func=cmd_solve)

    p_gc = sub.add_parser("grid-cluster", help="clustering multiplier grid search")
    add_common(p_gc)
    p_gc.add_argument("--m1-grid", type=_float_list)
    p_gc.add_argument("--m2-grid", type=_float_list)
    p_gc.set_defaults(func=cmd_grid_cluster)

    p_gr = sub.add_parser("grid-route", help="routing multiplier grid search")
    add_common(p_gr)
    p_gr.add_argument("--ma-grid", type=_float_list)
    p_gr.add_argument("--mb-grid", type=_float_list)
    p_gr.set_defaults(func=cmd_grid_route)

    p_rs = sub.add_parser("reads-sweep", help="per-reads routing table")
    add_common(p_rs)
    p_rs.add_argument("--reads-list", type=_int_list)
    p_rs.set_defaults(func=cmd_reads_sweep)

    p_c = sub.add_parser("census", help="variable counts without building")
    p_c.add_argument("--customers", type=int, required=True)
    p_c.add_argument("--vehicles", type=int, required=True)
    p_c.add_argument("--capacity", type=int, required=True)
    p_c.add_argument("--clustering", action="store_true",
                     help="count clustering-QUBO variables instead")
    p_c.add_argument("--min-demand", type=int)
    p_c.set_defaults(func=cmd_census)

    p_r = sub.add_parser("render", help="solution JSON to SVG")
    p_r.add_argument("--solution", required=True)
    p_r.add_argument("--instance", required=True)
    p_r.add_argument("--out")
    p_r.set_defaults(func=cmd_render)

    p_b = sub.add_parser("bench-kernels", help="compare compiled and Python kernels")
    p_b.add_argument("--vars", type=int, default=64)
    p_b.add_argument("--reads", type=int, default=200)
    p_b.add_argument("--sweeps", type=int, default=500)
    p_b.add_argument("--seed", type=int, default=0)
    p_b.set_defaults(func=cmd_bench_kernels)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
