"""Aggregate benchmark traces into curves, delimited output, and figures."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import bench, objectives as ob

SCHEMA_VERSION = 1


def aggregate_cell(run_paths) -> ob.AggregateCurves:
    traces = [bench.load_trace(p) for p in run_paths]
    return ob.regret_aggregate(traces)


def _cell_runs(manifest: dict, out_dir: Path) -> dict:
    groups = {}
    for run in manifest["runs"]:
        groups.setdefault(run["cell_id"], []).append(out_dir / run["trace"])
    return groups


def render_cell_figure(cell_id: str, curves: ob.AggregateCurves, path: Path):
    evals = np.arange(1, curves.simple_mean.size + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(evals, curves.simple_mean, color="tab:blue")
    ax1.fill_between(
        evals,
        curves.simple_mean - curves.simple_sd,
        curves.simple_mean + curves.simple_sd,
        alpha=0.25,
        color="tab:blue",
    )
    ax1.set_xlabel("evaluation")
    ax1.set_ylabel("simple regret")
    ax1.set_title(cell_id, fontsize=9)
    ax2.plot(evals, curves.reward_mean, color="tab:orange")
    ax2.fill_between(
        evals,
        curves.reward_mean - curves.reward_sd,
        curves.reward_mean + curves.reward_sd,
        alpha=0.25,
        color="tab:orange",
    )
    ax2.set_xlabel("evaluation")
    ax2.set_ylabel("average reward")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def build_report(results_dir, report_dir=None) -> dict:
    """Mean/sd curves per cell: aggregate.csv + plotdata.json + one PNG per cell."""
    results = Path(results_dir)
    report = Path(report_dir) if report_dir is not None else results / "report"
    report.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((results / "manifest.json").read_text())
    cell_meta = {c["cell_id"]: c for c in manifest["cells"]}

    plot_cells = []
    with open(report / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cell_id", "evaluation", "simple_mean", "simple_sd", "reward_mean", "reward_sd"]
        )
        for cell_id, paths in sorted(_cell_runs(manifest, results).items()):
            curves = aggregate_cell(paths)
            for i in range(curves.simple_mean.size):
                writer.writerow(
                    [
                        cell_id,
                        i + 1,
                        f"{curves.simple_mean[i]:.12g}",
                        f"{curves.simple_sd[i]:.12g}",
                        f"{curves.reward_mean[i]:.12g}",
                        f"{curves.reward_sd[i]:.12g}",
                    ]
                )
            render_cell_figure(cell_id, curves, report / f"{cell_id}.png")
            plot_cells.append(
                {
                    **cell_meta.get(cell_id, {"cell_id": cell_id}),
                    "n_runs": len(paths),
                    "simple_mean": curves.simple_mean.tolist(),
                    "simple_sd": curves.simple_sd.tolist(),
                    "reward_mean": curves.reward_mean.tolist(),
                    "reward_sd": curves.reward_sd.tolist(),
                }
            )
    plotdata = {"schema_version": SCHEMA_VERSION, "cells": plot_cells}
    (report / "plotdata.json").write_text(json.dumps(plotdata, indent=2, sort_keys=True) + "\n")
    return plotdata
