"""Benchmark matrix runner: cartesian cells, per-run trace CSVs, aggregation.

A matrix document lists cell fields (scalars or lists to sweep): function,
dim, noise_pct, acquisition, p, policy, iterations, repeats, init_size,
lengthscale (sampled functions), seeds. Every repeat writes one trace CSV;
a manifest ties run ids back to their cells for reporting.
"""
from __future__ import annotations

import csv
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import acquisition as acq, engine, moo, objectives as ob, policies

SCHEMA_VERSION = 1

_SWEEPABLE = ("function", "dim", "noise_pct", "acquisition", "p", "policy")
_ANALYTIC = ("rastrigin", "rosenbrock", "ackley", "schwefel")


@dataclass(frozen=True)
class BenchCell:
    function: str
    dim: int
    noise_pct: float
    acquisition: str
    p: int
    policy: str
    iterations: int = 48
    repeats: int = 32
    init_size: int = 8
    lengthscale: float = 0.05
    seeds: tuple = ()

    def __post_init__(self):
        if self.function not in _ANALYTIC + ("gp-sample",):
            raise ValueError(f"unknown benchmark function {self.function!r}")
        policies.ChoicePolicy.parse(self.policy)
        acq.AcquisitionSpec(kind=self.acquisition)
        if self.repeats < 1 or self.iterations < 0 or self.init_size < 1:
            raise ValueError("repeats >= 1, iterations >= 0, init_size >= 1 required")

    @property
    def cell_id(self) -> str:
        return (
            f"{self.function}-d{self.dim}-n{self.noise_pct:g}-{self.acquisition}"
            f"-p{self.p}-{self.policy.replace(':', '')}"
        )

    def run_seeds(self, base_seed: int) -> tuple:
        if self.seeds:
            return tuple(int(s) for s in self.seeds[: self.repeats])
        return tuple(int(base_seed) + k for k in range(self.repeats))


def parse_matrix(doc: dict) -> list:
    """Expand scalar-or-list cell fields into the cartesian product of cells."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported matrix schema_version {doc.get('schema_version')!r}")
    sweeps = []
    for key in _SWEEPABLE:
        val = doc.get(key, _CELL_DEFAULTS[key])
        sweeps.append(val if isinstance(val, list) else [val])
    fixed = {
        key: doc[key]
        for key in ("iterations", "repeats", "init_size", "lengthscale")
        if key in doc
    }
    if "seeds" in doc:
        fixed["seeds"] = tuple(doc["seeds"])
    cells = []
    for combo in itertools.product(*sweeps):
        kwargs = dict(zip(_SWEEPABLE, combo))
        kwargs["dim"] = int(kwargs["dim"])
        kwargs["noise_pct"] = float(kwargs["noise_pct"])
        kwargs["p"] = int(kwargs["p"])
        cells.append(BenchCell(**kwargs, **fixed))
    return cells


_CELL_DEFAULTS = {
    "function": "ackley",
    "dim": 2,
    "noise_pct": 0.0,
    "acquisition": "EI",
    "p": 4,
    "policy": "trusting",
}


def build_objective(cell: BenchCell, run_seed: int) -> ob.Objective:
    """Analytic cells share one objective; sampled cells draw a fresh
    function per repeat so the sweep covers distinct landscapes."""
    if cell.function == "gp-sample":
        return ob.sample_gp_objective(cell.dim, cell.lengthscale, seed=run_seed)
    return ob.benchmark_objective(cell.function, cell.dim)


def _session_config(cell: BenchCell, objective: ob.Objective, run_seed: int) -> engine.SessionConfig:
    init_ls = cell.lengthscale if cell.function == "gp-sample" else 0.2
    noise = "learned" if cell.noise_pct > 0 else 0.0
    return engine.SessionConfig(
        domain=objective.domain,
        acquisition=acq.AcquisitionSpec(kind=cell.acquisition),
        p=cell.p,
        init_design_size=cell.init_size,
        moo=moo.MooConfig(),
        noise=noise,
        max_iterations=cell.iterations,
        seed=run_seed,
    )


def run_single(cell: BenchCell, run_seed: int):
    """One repeat; returns (session, trace, objective)."""
    objective = build_objective(cell, run_seed)
    config = _session_config(cell, objective, run_seed)
    policy = policies.ChoicePolicy.parse(cell.policy)
    session, trace = engine.run_autonomous(
        config, objective, policy, noise_spec=ob.NoisySpec(cell.noise_pct)
    )
    return session, trace, objective


def trace_rows(cell: BenchCell, run_id: str, session, trace) -> list:
    """Per-evaluation rows; the initial design appears as iteration 0 with
    chosen_index -1, loop evaluations as iterations 1..N."""
    X = session.dataset.inputs
    y_obs = session.dataset.outputs
    best = trace.best_so_far
    regret = trace.simple_regret
    t0 = session.init_size
    rows = []
    for i in range(X.shape[0]):
        if i < t0:
            iteration, chosen = 0, -1
        else:
            rec = session.audit[i - t0]
            iteration, chosen = rec.iteration + 1, rec.chosen_index
        rows.append(
            [run_id, iteration, chosen]
            + [float(v) for v in X[i]]
            + [float(y_obs[i]), float(trace.true_values[i]), float(best[i]), float(regret[i])]
        )
    return rows


def trace_header(dim: int) -> list:
    return (
        ["run_id", "iteration", "chosen_index"]
        + [f"x{k}" for k in range(dim)]
        + ["y_observed", "y_true", "best_true", "simple_regret"]
    )


def _run_repeat(args):
    cell, run_seed, out_dir = args
    session, trace, _ = run_single(cell, run_seed)
    run_id = f"{cell.cell_id}-s{run_seed}"
    path = Path(out_dir) / f"{run_id}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_header(cell.dim))
        writer.writerows(trace_rows(cell, run_id, session, trace))
    return {
        "run_id": run_id,
        "cell_id": cell.cell_id,
        "seed": run_seed,
        "trace": path.name,
        "final_regret": float(trace.simple_regret[-1]),
    }


def run_matrix(doc: dict, out_dir, base_seed: int = 0, parallel: int = 1) -> dict:
    """Execute the whole matrix; returns the manifest (also written to disk)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = parse_matrix(doc)
    jobs = []
    for cell in cells:
        for run_seed in cell.run_seeds(base_seed):
            jobs.append((cell, run_seed, str(out)))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_run_repeat, jobs))
    else:
        results = [_run_repeat(job) for job in jobs]
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "cells": [
            {
                "cell_id": c.cell_id,
                "function": c.function,
                "dim": c.dim,
                "noise_pct": c.noise_pct,
                "acquisition": c.acquisition,
                "p": c.p,
                "policy": c.policy,
                "iterations": c.iterations,
                "repeats": c.repeats,
                "init_size": c.init_size,
            }
            for c in cells
        ],
        "runs": results,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_trace(path) -> ob.RegretTrace:
    """Rebuild a RegretTrace from a trace CSV (best_true - simple_regret
    recovers the optimum value)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"empty trace file {path}")
    true_vals = np.array([float(r["y_true"]) for r in rows])
    known = float(rows[-1]["best_true"]) + float(rows[-1]["simple_regret"])
    return ob.RegretTrace(true_vals, known_value=known)
