"""Command-line entry points.

File-backed sessions run the propose step implicitly after observations, so
an interactive session on disk always rests at a choice, an observation, or
done; the HTTP API keeps the explicit propose endpoint.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acquisition as acq, bench, doe, engine, objectives as ob, report, service
from .errors import CoboptError


class CliError(Exception):
    pass


def _load_json(path, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} file is not valid JSON: {exc}")


def _load_session(path) -> engine.Session:
    try:
        return engine.from_json(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"session file not found: {path}")
    except (KeyError, ValueError) as exc:
        raise CliError(f"cannot read session file: {exc}")


def _save_session(path, session: engine.Session):
    Path(path).write_text(engine.to_json(session))


def _print_view(path, session: engine.Session):
    print(json.dumps(service.session_view(Path(path).stem, session), indent=2, sort_keys=True))


def cmd_bench_run(args) -> int:
    doc = _load_json(args.matrix, "matrix")
    try:
        manifest = bench.run_matrix(doc, args.out, base_seed=args.seed, parallel=args.parallel)
    except ValueError as exc:
        raise CliError(f"bad matrix: {exc}")
    print(f"{len(manifest['runs'])} runs -> {args.out}")
    return 0


def cmd_bench_report(args) -> int:
    results = Path(args.results)
    if not (results / "manifest.json").exists():
        raise CliError(f"no manifest.json under {results}")
    plotdata = report.build_report(results, args.report_dir)
    target = Path(args.report_dir) if args.report_dir else results / "report"
    print(f"{len(plotdata['cells'])} cells -> {target}")
    return 0


def cmd_session_new(args) -> int:
    cfg_doc = _load_json(args.config, "config")
    try:
        config = engine.SessionConfig.from_dict(cfg_doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"bad config: {exc}")
    seeds = None
    if args.seeds:
        pts = np.asarray(_load_json(args.seeds, "seeds"), dtype=float)
        if pts.ndim != 2 or pts.shape[1] != config.domain.dim:
            raise CliError("seeds file must hold an m x d array")
        seeds = doe.ExpertSeedSet(pts)
    try:
        session = engine.init_session(config, seeds)
    except (ValueError, CoboptError) as exc:
        raise CliError(str(exc))
    _save_session(args.file, session)
    _print_view(args.file, session)
    return 0


def cmd_session_show(args) -> int:
    session = _load_session(args.file)
    _print_view(args.file, session)
    return 0


def _advance_through_propose(session: engine.Session):
    if session.phase == engine.PROPOSING:
        engine.step_propose(session)


def cmd_session_observe(args) -> int:
    session = _load_session(args.file)
    try:
        if session.phase == engine.AWAITING_INIT:
            engine.commit_initial_observations(session, args.y)
        elif session.phase == engine.AWAITING_OBSERVATION:
            if len(args.y) != 1:
                raise CliError("exactly one --y is expected for a pending evaluation")
            engine.commit_observation(session, args.y[0])
        else:
            raise CliError(f"session does not accept observations in phase {session.phase!r}")
        _advance_through_propose(session)
    except CoboptError as exc:
        raise CliError(str(exc))
    _save_session(args.file, session)
    _print_view(args.file, session)
    return 0


def cmd_session_choose(args) -> int:
    session = _load_session(args.file)
    try:
        engine.commit_choice(session, args.index, chooser_tag=args.chooser)
    except CoboptError as exc:
        raise CliError(str(exc))
    _save_session(args.file, session)
    _print_view(args.file, session)
    return 0


def cmd_serve(args) -> int:
    service.serve(bind=args.bind, state_dir=args.state_dir, frontend_dir=args.frontend)
    return 0


def cmd_demo_onedim(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    objective = ob.sample_gp_objective(1, 0.5, seed=args.seed)
    config = engine.SessionConfig(
        domain=objective.domain,
        acquisition=acq.AcquisitionSpec(kind="EI"),
        p=4,
        init_design_size=5,
        noise=0.0,
        max_iterations=1,
        seed=args.seed,
    )
    session = engine.init_session(config)
    engine.commit_initial_observations(session, objective.evaluate_batch(session.initial_design))
    aset = engine.step_propose(session)
    model = engine._fit_current(session)

    grid = np.linspace(0.0, 1.0, 401)[:, None]
    mu, var = model.predict_batch(grid)
    sd = np.sqrt(var)
    utility = acq.UtilityEvaluator(config.acquisition, model).values(grid)
    truth = objective.evaluate_batch(grid)

    (out / "session.json").write_text(engine.to_json(session))
    (out / "alternatives.json").write_text(
        json.dumps(aset.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    curve = {
        "schema_version": 1,
        "x": grid.ravel().tolist(),
        "truth": truth.tolist(),
        "mean": mu.tolist(),
        "sd": sd.tolist(),
        "utility": utility.tolist(),
        "candidates": [c.to_dict() for c in aset.candidates],
        "observations": {
            "x": session.dataset.inputs.ravel().tolist(),
            "y": session.dataset.outputs.tolist(),
        },
    }
    (out / "curve.json").write_text(json.dumps(curve, indent=2, sort_keys=True) + "\n")
    _render_demo_figure(out / "onedim.png", curve)
    print(json.dumps({"out": str(out), "files": sorted(p.name for p in out.iterdir())}, indent=2))
    return 0


def _render_demo_figure(path, curve: dict):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = np.asarray(curve["x"])
    mean = np.asarray(curve["mean"])
    sd = np.asarray(curve["sd"])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(x, curve["truth"], color="k", lw=1, label="objective")
    ax1.plot(x, mean, color="tab:blue", label="posterior mean")
    ax1.fill_between(x, mean - 2 * sd, mean + 2 * sd, color="tab:blue", alpha=0.2)
    ax1.plot(curve["observations"]["x"], curve["observations"]["y"], "ko", ms=5)
    for i, cand in enumerate(curve["candidates"]):
        color = "tab:red" if cand["is_utility_optimum"] else "tab:green"
        ax1.axvline(cand["point"][0], color=color, ls="--", lw=1)
        ax1.annotate(str(i + 1), (cand["point"][0], ax1.get_ylim()[1]), fontsize=8)
    ax1.legend(fontsize=8)
    ax2.plot(x, curve["utility"], color="tab:purple")
    ax2.set_xlabel("x")
    ax2.set_ylabel("utility")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cobopt", description="collaborative optimization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="benchmark matrix runner")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)
    p_run = bench_sub.add_parser("run", help="execute a matrix file")
    p_run.add_argument("matrix")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--parallel", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.set_defaults(func=cmd_bench_run)
    p_report = bench_sub.add_parser("report", help="aggregate traces into curves and figures")
    p_report.add_argument("results")
    p_report.add_argument("--report-dir", default=None)
    p_report.set_defaults(func=cmd_bench_report)

    p_session = sub.add_parser("session", help="file-backed interactive sessions")
    sess_sub = p_session.add_subparsers(dest="session_command", required=True)
    p_new = sess_sub.add_parser("new")
    p_new.add_argument("--config", required=True)
    p_new.add_argument("--file", required=True)
    p_new.add_argument("--seeds", default=None)
    p_new.set_defaults(func=cmd_session_new)
    p_show = sess_sub.add_parser("show")
    p_show.add_argument("--file", required=True)
    p_show.set_defaults(func=cmd_session_show)
    p_choose = sess_sub.add_parser("choose")
    p_choose.add_argument("--file", required=True)
    p_choose.add_argument("--index", type=int, required=True)
    p_choose.add_argument("--chooser", default="human")
    p_choose.set_defaults(func=cmd_session_choose)
    p_observe = sess_sub.add_parser("observe")
    p_observe.add_argument("--file", required=True)
    p_observe.add_argument("--y", type=float, action="append", required=True)
    p_observe.set_defaults(func=cmd_session_observe)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    p_serve.add_argument("--state-dir", default=None)
    p_serve.add_argument("--frontend", default=None)
    p_serve.set_defaults(func=cmd_serve)

    p_demo = sub.add_parser("demo", help="worked examples")
    demo_sub = p_demo.add_subparsers(dest="demo_command", required=True)
    p_onedim = demo_sub.add_parser("onedim")
    p_onedim.add_argument("--out", default="demo-onedim")
    p_onedim.add_argument("--seed", type=int, default=0)
    p_onedim.set_defaults(func=cmd_demo_onedim)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
