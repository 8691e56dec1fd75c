import json
import os
import xml.etree.ElementTree as ET

import pytest

from qroute.cli import (
    GRID_CLUSTER_HEADER,
    GRID_ROUTE_HEADER,
    READS_SWEEP_HEADER,
    SUMMARY_HEADER,
    main,
    read_csv_rows,
)
from qroute.instance_io import Instance
from qroute.svg import render_routes_svg

from conftest import GOLDEN_DIR

TOY = os.path.join(os.path.dirname(__file__), "data", "toy5.txt")


def golden(name):
    with open(os.path.join(GOLDEN_DIR, name), "r", encoding="utf-8") as fh:
        return fh.read()


class TestHeaders:
    """The CSV schemas are external interfaces; headers are byte-fixed."""

    def test_summary(self):
        assert ",".join(SUMMARY_HEADER) + "\n" == golden("summary_header.txt")

    def test_grid_cluster(self):
        assert ",".join(GRID_CLUSTER_HEADER) + "\n" == golden("grid_cluster_header.txt")

    def test_grid_route(self):
        assert ",".join(GRID_ROUTE_HEADER) + "\n" == golden("grid_route_header.txt")

    def test_reads_sweep(self):
        assert ",".join(READS_SWEEP_HEADER) + "\n" == golden("reads_sweep_header.txt")


class TestSolve:
    def test_solution_json_matches_golden(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-gls",
            "--seed", "11", "--out", str(out),
        ])
        assert code == 0
        with open(out / "toy5.solution.json", "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        doc["wall_s"] = 0.0
        produced = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        assert produced == golden("toy5.solution.json")

    def test_summary_round_trip(self, tmp_path):
        out = tmp_path / "run"
        main([
            "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-gls",
            "--seed", "11", "--out", str(out),
        ])
        header, rows = read_csv_rows(str(out / "summary.csv"))
        assert header == SUMMARY_HEADER
        assert len(rows) == 1
        problem, nodes, clusters, wall, errors, distance = rows[0]
        assert problem == "toy5"
        assert int(nodes) == 5
        assert int(clusters) == 2
        assert int(errors) == 0
        float(wall), float(distance)  # parse back numerically

    def test_missing_instance_fails_before_output(self, tmp_path):
        out = tmp_path / "never"
        with pytest.raises(SystemExit, match="not found"):
            main(["solve", "--instance", "/nonexistent/foo.xml", "--out", str(out)])
        assert not out.exists()

    def test_identical_runs_reproduce_exactly(self, tmp_path):
        docs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            main([
                "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-qubo",
                "--seed", "4", "--reads", "30", "--sweeps", "100", "--out", str(out),
            ])
            with open(out / "toy5.solution.json") as fh:
                doc = json.load(fh)
            doc["wall_s"] = 0.0  # the one field that may differ between runs
            docs.append(json.dumps(doc, sort_keys=True))
        assert docs[0] == docs[1]

    def test_env_seed_overrides(self, tmp_path, monkeypatch):
        out1 = tmp_path / "one"
        monkeypatch.setenv("QROUTE_SEED", "11")
        main([
            "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-gls",
            "--seed", "999", "--out", str(out1),
        ])
        with open(out1 / "toy5.solution.json") as fh:
            assert json.load(fh)["seed"] == 11

    def test_seed_manifest_written(self, tmp_path):
        out = tmp_path / "run"
        main([
            "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-gls",
            "--seed", "11", "--out", str(out),
        ])
        with open(out / "seed_manifest.json") as fh:
            manifest = json.load(fh)
        assert any(key.startswith("toy5/") for key in manifest)

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "instances": [TOY],
            "pipeline": "hybrid-kmedoids-gls",
            "seed": 5,
            "gls_budget": 50,
        }))
        out = tmp_path / "run"
        main(["solve", "--config", str(cfg), "--seed", "11", "--out", str(out)])
        with open(out / "toy5.solution.json") as fh:
            doc = json.load(fh)
        assert doc["seed"] == 11  # flag beats config


class TestGrids:
    def test_grid_cluster_shape_and_round_trip(self, tmp_path):
        out = tmp_path / "g"
        code = main([
            "grid-cluster", "--instance", TOY, "--out", str(out),
            "--m1-grid", "100,1000", "--m2-grid", "5,20",
            "--reads", "20", "--sweeps", "150", "--seed", "3",
        ])
        assert code == 0
        header, rows = read_csv_rows(str(out / "grid_cluster.csv"))
        assert header == GRID_CLUSTER_HEADER
        assert len(rows) == 4
        for row in rows:
            assert row[0] == "toy5"
            float(row[1]), float(row[2]), int(row[3]), int(row[4]), float(row[5])

    def test_grid_route_shape(self, tmp_path):
        out = tmp_path / "g"
        code = main([
            "grid-route", "--instance", TOY, "--out", str(out),
            "--ma-grid", "1000,20000", "--mb-grid", "100,700",
            "--reads", "20", "--sweeps", "150", "--seed", "3",
        ])
        assert code == 0
        header, rows = read_csv_rows(str(out / "grid_route.csv"))
        assert header == GRID_ROUTE_HEADER
        assert len(rows) == 4

    def test_reads_sweep_rows(self, tmp_path):
        out = tmp_path / "g"
        code = main([
            "reads-sweep", "--instance", TOY, "--out", str(out),
            "--reads-list", "10,50", "--sweeps", "100", "--seed", "3",
        ])
        assert code == 0
        header, rows = read_csv_rows(str(out / "reads_sweep.csv"))
        assert header == READS_SWEEP_HEADER
        assert [int(r[3]) for r in rows] == [10, 50]


class TestCensusCommand:
    def test_full_solver(self, capsys):
        main(["census", "--customers", "6", "--vehicles", "2", "--capacity", "50"])
        out = capsys.readouterr().out
        assert "decision variables: 128" in out
        assert "capacity slack bits: 98" in out
        assert "subtour slack bits: 129" in out
        assert "total: 355" in out

    def test_clustering(self, capsys):
        main([
            "census", "--clustering", "--customers", "50", "--vehicles", "5",
            "--capacity", "160", "--min-demand", "3",
        ])
        assert "clustering variables: 515" in capsys.readouterr().out


class TestRender:
    def test_well_formed_and_one_line_per_arc(self, tmp_path):
        out = tmp_path / "run"
        main([
            "solve", "--instance", TOY, "--pipeline", "hybrid-kmedoids-gls",
            "--seed", "11", "--out", str(out),
        ])
        svg_path = out / "toy5.solution.svg"
        code = main([
            "render", "--solution", str(out / "toy5.solution.json"),
            "--instance", TOY, "--out", str(svg_path),
        ])
        assert code == 0
        root = ET.parse(svg_path).getroot()  # raises if not well-formed XML
        lines = [el for el in root.iter() if el.tag.endswith("line")]
        with open(out / "toy5.solution.json") as fh:
            arcs = sum(len(r) for r in json.load(fh)["routes"])
        assert len(lines) == arcs

    def test_empty_solution_depot_marker_only(self):
        inst = Instance("empty", (), 5, 1, (), (1.0, 2.0))
        svg = render_routes_svg([], inst)
        root = ET.fromstring(svg)
        tags = [el.tag.split("}")[-1] for el in root.iter()]
        assert tags.count("rect") == 1
        assert tags.count("line") == 0
        assert tags.count("circle") == 0


class TestBench:
    def test_bench_kernels_runs(self, capsys):
        code = main(["bench-kernels", "--vars", "16", "--reads", "20", "--sweeps", "50"])
        assert code == 0
        out = capsys.readouterr().out
        assert "annealing benchmark" in out
