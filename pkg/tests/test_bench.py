"""Benchmark matrix runner and report builder.

The report oracle is regret_aggregate applied to traces constructed directly
in the test; the report path has to reproduce it from CSV files and the
manifest alone.
"""
import csv
import json
from pathlib import Path

import numpy as np
import pytest

from cobopt import bench, objectives as ob, report

TINY_MATRIX = {
    "schema_version": 1,
    "function": "ackley",
    "dim": 1,
    "noise_pct": 0.0,
    "acquisition": "EI",
    "p": [1, 2],
    "policy": "trusting",
    "iterations": 3,
    "repeats": 2,
    "init_size": 4,
}


class TestParseMatrix:
    def test_product_expansion(self):
        doc = dict(TINY_MATRIX, p=[1, 2], policy=["trusting", "expert"])
        cells = bench.parse_matrix(doc)
        assert len(cells) == 4
        assert sorted({(c.p, c.policy) for c in cells}) == [
            (1, "expert"),
            (1, "trusting"),
            (2, "expert"),
            (2, "trusting"),
        ]

    def test_defaults_fill_missing_fields(self):
        cells = bench.parse_matrix({"schema_version": 1})
        assert len(cells) == 1
        c = cells[0]
        assert (c.function, c.dim, c.p, c.policy) == ("ackley", 2, 4, "trusting")
        assert c.iterations == 48 and c.repeats == 32

    def test_bad_schema_version(self):
        with pytest.raises(ValueError, match="schema_version"):
            bench.parse_matrix({"schema_version": 2})

    def test_unknown_function(self):
        with pytest.raises(ValueError, match="unknown benchmark"):
            bench.parse_matrix(dict(TINY_MATRIX, function="styblinski"))

    def test_bad_policy_string(self):
        with pytest.raises(ValueError):
            bench.parse_matrix(dict(TINY_MATRIX, policy="pbest:1.5"))

    def test_cell_id_strips_policy_colon(self):
        cell = bench.parse_matrix(dict(TINY_MATRIX, p=3, policy="pbest:0.25"))[0]
        assert cell.cell_id == "ackley-d1-n0-EI-p3-pbest0.25"

    def test_explicit_seeds_win(self):
        cell = bench.parse_matrix(dict(TINY_MATRIX, p=1, seeds=[11, 12, 13]))[0]
        assert cell.run_seeds(base_seed=0) == (11, 12)

    def test_default_seeds_offset_from_base(self):
        cell = bench.parse_matrix(dict(TINY_MATRIX, p=1))[0]
        assert cell.run_seeds(base_seed=5) == (5, 6)


@pytest.fixture(scope="module")
def matrix_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench") / "results"
    manifest = bench.run_matrix(TINY_MATRIX, out, base_seed=3)
    return out, manifest


class TestRunMatrix:
    def test_manifest_and_files(self, matrix_run):
        out, manifest = matrix_run
        assert manifest["schema_version"] == 1
        assert [c["cell_id"] for c in manifest["cells"]] == [
            "ackley-d1-n0-EI-p1-trusting",
            "ackley-d1-n0-EI-p2-trusting",
        ]
        assert len(manifest["runs"]) == 4
        for run in manifest["runs"]:
            assert (out / run["trace"]).exists()
            assert run["trace"] == f"{run['run_id']}.csv"
        on_disk = json.loads((out / "manifest.json").read_text())
        assert on_disk == manifest

    def test_trace_column_contract(self, matrix_run):
        out, manifest = matrix_run
        path = out / manifest["runs"][0]["trace"]
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0].keys()) == [
            "run_id",
            "iteration",
            "chosen_index",
            "x0",
            "y_observed",
            "y_true",
            "best_true",
            "simple_regret",
        ]
        assert len(rows) == 4 + 3
        assert [r["iteration"] for r in rows] == ["0", "0", "0", "0", "1", "2", "3"]
        assert [r["chosen_index"] for r in rows[:4]] == ["-1"] * 4
        assert all(int(r["chosen_index"]) >= 0 for r in rows[4:])

    def test_noiseless_rows_observe_truth(self, matrix_run):
        out, manifest = matrix_run
        for run in manifest["runs"]:
            with open(out / run["trace"], newline="") as fh:
                for row in csv.DictReader(fh):
                    assert float(row["y_observed"]) == float(row["y_true"])
                    recovered = float(row["best_true"]) + float(row["simple_regret"])
                    assert recovered == pytest.approx(0.0, abs=1e-12)

    def test_best_true_monotone(self, matrix_run):
        out, manifest = matrix_run
        for run in manifest["runs"]:
            with open(out / run["trace"], newline="") as fh:
                best = [float(r["best_true"]) for r in csv.DictReader(fh)]
            assert best == list(np.maximum.accumulate(best))

    def test_final_regret_matches_trace(self, matrix_run):
        out, manifest = matrix_run
        for run in manifest["runs"]:
            with open(out / run["trace"], newline="") as fh:
                last = list(csv.DictReader(fh))[-1]
            assert run["final_regret"] == float(last["simple_regret"])

    def test_load_trace_round_trip(self, matrix_run):
        out, manifest = matrix_run
        run = manifest["runs"][0]
        cell = bench.parse_matrix(TINY_MATRIX)[0]
        session, trace, _ = bench.run_single(cell, run["seed"])
        loaded = bench.load_trace(out / run["trace"])
        np.testing.assert_array_equal(loaded.true_values, trace.true_values)
        # known comes back through best + regret, so one addition of rounding
        assert loaded.known_value == pytest.approx(trace.known_value, abs=1e-12)
        np.testing.assert_allclose(loaded.simple_regret, trace.simple_regret, atol=1e-12)

    def test_rerun_is_byte_identical(self, matrix_run, tmp_path):
        out, manifest = matrix_run
        again = tmp_path / "again"
        manifest2 = bench.run_matrix(TINY_MATRIX, again, base_seed=3)
        assert manifest2 == manifest
        for run in manifest["runs"]:
            assert (again / run["trace"]).read_bytes() == (out / run["trace"]).read_bytes()

    def test_parallel_matches_serial(self, matrix_run, tmp_path):
        out, manifest = matrix_run
        par = tmp_path / "par"
        manifest2 = bench.run_matrix(TINY_MATRIX, par, base_seed=3, parallel=2)
        assert manifest2 == manifest
        for run in manifest["runs"]:
            assert (par / run["trace"]).read_bytes() == (out / run["trace"]).read_bytes()


def write_synthetic_results(out: Path, truths: dict, known: float) -> dict:
    """Hand-built manifest + trace CSVs holding prescribed y_true sequences."""
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for run_id, y_true in truths.items():
        best = np.maximum.accumulate(y_true)
        with open(out / f"{run_id}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(bench.trace_header(1))
            for i, y in enumerate(y_true):
                writer.writerow(
                    [run_id, i, -1, 0.5, y, y, best[i], known - best[i]]
                )
        runs.append(
            {
                "run_id": run_id,
                "cell_id": "toy-cell",
                "seed": 0,
                "trace": f"{run_id}.csv",
                "final_regret": float(known - best[-1]),
            }
        )
    manifest = {
        "schema_version": 1,
        "cells": [{"cell_id": "toy-cell", "function": "toy", "dim": 1}],
        "runs": runs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


class TestReport:
    def test_aggregate_matches_direct_oracle(self, tmp_path):
        truths = {
            "toy-a": [0.0, 1.0, 0.5, 1.5, 1.2],
            "toy-b": [1.0, 0.2, 1.8, 0.4, 0.9],
            "toy-c": [0.3, 0.3, 0.3, 1.9, 2.0],
        }
        known = 2.0
        results = tmp_path / "results"
        write_synthetic_results(results, truths, known)
        plotdata = report.build_report(results)

        oracle = ob.regret_aggregate(
            [ob.RegretTrace(np.array(v), known_value=known) for v in truths.values()]
        )
        cell = plotdata["cells"][0]
        assert cell["cell_id"] == "toy-cell"
        assert cell["n_runs"] == 3
        np.testing.assert_allclose(cell["simple_mean"], oracle.simple_mean, rtol=0, atol=0)
        np.testing.assert_allclose(cell["simple_sd"], oracle.simple_sd, rtol=0, atol=0)
        np.testing.assert_allclose(cell["reward_mean"], oracle.reward_mean, rtol=0, atol=0)
        np.testing.assert_allclose(cell["reward_sd"], oracle.reward_sd, rtol=0, atol=0)

        rep = results / "report"
        with open(rep / "aggregate.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 5
        for i, row in enumerate(rows):
            assert row["cell_id"] == "toy-cell"
            assert int(row["evaluation"]) == i + 1
            assert float(row["simple_mean"]) == pytest.approx(oracle.simple_mean[i], rel=1e-11)
            assert float(row["reward_sd"]) == pytest.approx(oracle.reward_sd[i], rel=1e-11)

        png = rep / "toy-cell.png"
        assert png.exists() and png.stat().st_size > 1000
        on_disk = json.loads((rep / "plotdata.json").read_text())
        assert on_disk == plotdata

    def test_report_on_real_run(self, matrix_run):
        out, manifest = matrix_run
        plotdata = report.build_report(out)
        assert len(plotdata["cells"]) == 2
        for cell in plotdata["cells"]:
            assert cell["n_runs"] == 2
            assert len(cell["simple_mean"]) == 4 + 3
            assert (out / "report" / f"{cell['cell_id']}.png").exists()
            # means of nonincreasing per-run regrets stay nonincreasing
            sm = cell["simple_mean"]
            assert all(b <= a + 1e-12 for a, b in zip(sm, sm[1:]))

    def test_report_dir_override(self, matrix_run, tmp_path):
        out, _ = matrix_run
        target = tmp_path / "elsewhere"
        report.build_report(out, target)
        assert (target / "aggregate.csv").exists()
        assert (target / "plotdata.json").exists()


class TestLoadTrace:
    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        with open(p, "w", newline="") as fh:
            csv.writer(fh).writerow(bench.trace_header(1))
        with pytest.raises(ValueError, match="empty trace"):
            bench.load_trace(p)
