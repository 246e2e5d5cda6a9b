"""HTTP boundary: sessions as REST resources over the engine's state machine.

State lives as one JSON document per session in a directory; mutations are
serialized per session and always flow through engine operations.
"""
from __future__ import annotations

import io
import csv
import os
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel

from . import doe, engine
from .errors import (
    DegenerateKernel,
    IllegalPhase,
    IndexOutOfRange,
    LengthMismatch,
    NonFiniteObservation,
)

SCHEMA_VERSION = 1
STATE_DIR_ENV = "COBOPT_STATE_DIR"
DEFAULT_STATE_DIR = "cobopt-sessions"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


_ENGINE_ERRORS = (
    (IllegalPhase, 409, "illegal_phase"),
    (IndexOutOfRange, 422, "index_out_of_range"),
    (LengthMismatch, 422, "length_mismatch"),
    (NonFiniteObservation, 422, "non_finite_observation"),
    (ValueError, 422, "validation_error"),
)


def _translate(exc: Exception) -> ApiError:
    for etype, status, code in _ENGINE_ERRORS:
        if isinstance(exc, etype):
            return ApiError(status, code, str(exc))
    raise exc


class SessionStore:
    """One JSON file per session, cached in memory, locked per id."""

    def __init__(self, state_dir):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._cache: dict = {}
        self._locks: dict = {}
        self._registry = threading.Lock()

    def _path(self, sid: str) -> Path:
        return self.state_dir / f"{sid}.json"

    def lock(self, sid: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(sid, threading.Lock())

    def create(self, session: engine.Session) -> str:
        sid = uuid.uuid4().hex[:12]
        with self._registry:
            self._cache[sid] = session
            self._locks[sid] = threading.Lock()
        self.save(sid, session)
        return sid

    def get(self, sid: str) -> engine.Session:
        if sid in self._cache:
            return self._cache[sid]
        path = self._path(sid)
        if not path.exists():
            raise ApiError(404, "unknown_session", f"no session {sid!r}")
        session = engine.from_json(path.read_text())
        self._cache[sid] = session
        return session

    def save(self, sid: str, session: engine.Session):
        path = self._path(sid)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(engine.to_json(session))
        os.replace(tmp, path)

    def ids(self) -> list:
        return sorted(p.stem for p in self.state_dir.glob("*.json"))


class CreateSessionBody(BaseModel):
    config: dict
    expert_seeds: list[list[float]] | None = None


class InitObservationsBody(BaseModel):
    values: list[float]


class ChoiceBody(BaseModel):
    index: int
    chooser: str = "human"


class ObservationBody(BaseModel):
    y: float


def session_view(sid: str, s: engine.Session) -> dict:
    cfg = s.config
    t0 = s.init_size
    history = []
    for i, rec in enumerate(s.audit):
        observed = rec.observation
        best = None
        if observed is not None:
            best = float(np.max(s.dataset.outputs[: t0 + i + 1]))
        history.append(
            {
                "iteration": rec.iteration,
                "chosen_index": rec.chosen_index,
                "chooser": rec.chooser_tag,
                "point": [float(v) for v in rec.alternatives.candidates[rec.chosen_index].point],
                "observed": observed,
                "best_so_far": best,
            }
        )
    pending_candidates = None
    if s.phase == engine.AWAITING_CHOICE:
        pending_candidates = [c.to_dict() for c in s.pending_alternatives.candidates]
    initial = {
        "points": [[float(v) for v in row] for row in s.initial_design],
        "expert_mask": [bool(b) for b in s.expert_mask],
        "observed": None if s.dataset is None else [float(v) for v in s.dataset.outputs[:t0]],
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "id": sid,
        "phase": s.phase,
        "iteration": s.iteration,
        "max_iterations": cfg.max_iterations,
        "p": cfg.p,
        "domain": cfg.domain.to_dict(),
        "acquisition": cfg.acquisition.to_dict(),
        "initial_design": initial,
        "pending_candidates": pending_candidates,
        "pending_point": None
        if s.pending_point is None
        else [float(v) for v in s.pending_point],
        "history": history,
        "best_observed": s.best_observed(),
        "evaluations": 0 if s.dataset is None else int(s.dataset.n),
    }


def export_csv(s: engine.Session) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    dim = s.initial_design.shape[1]
    writer.writerow(
        ["index", "source", "iteration", "chosen_index", "chooser"]
        + [f"x{k}" for k in range(dim)]
        + ["y_observed", "best_so_far"]
    )
    if s.dataset is None:
        return buf.getvalue()
    t0 = s.init_size
    outputs = s.dataset.outputs
    for i in range(s.dataset.n):
        if i < t0:
            source, iteration, chosen, chooser = "init", "", "", ""
        else:
            rec = s.audit[i - t0]
            source, iteration, chosen, chooser = (
                "choice",
                rec.iteration,
                rec.chosen_index,
                rec.chooser_tag,
            )
        writer.writerow(
            [i, source, iteration, chosen, chooser]
            + [repr(float(v)) for v in s.dataset.inputs[i]]
            + [repr(float(outputs[i])), repr(float(np.max(outputs[: i + 1])))]
        )
    return buf.getvalue()


def create_app(state_dir=None, frontend_dir=None) -> FastAPI:
    app = FastAPI(title="collaborative optimization service", docs_url=None, redoc_url=None)
    store = SessionStore(state_dir or os.environ.get(STATE_DIR_ENV, DEFAULT_STATE_DIR))
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "validation_error", "message": str(exc.errors())}
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "schema_version": SCHEMA_VERSION}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            config = engine.SessionConfig.from_dict(body.config)
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "invalid_config", f"bad session config: {exc}")
        seeds = None
        if body.expert_seeds:
            pts = np.asarray(body.expert_seeds, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != config.domain.dim:
                raise ApiError(422, "invalid_seed_point", "expert seeds must be m x d")
            seeds = doe.ExpertSeedSet(pts)
        try:
            session = engine.init_session(config, seeds)
        except ValueError as exc:
            raise ApiError(422, "invalid_seed_point", str(exc))
        except DegenerateKernel as exc:
            raise ApiError(422, "degenerate_design", str(exc))
        sid = store.create(session)
        return {"id": sid, "session": session_view(sid, session)}

    @app.get("/sessions")
    def list_sessions():
        return {"ids": store.ids()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return session_view(sid, store.get(sid))

    @app.get("/sessions/{sid}/document")
    def get_document(sid: str):
        return Response(engine.to_json(store.get(sid)), media_type="application/json")

    @app.get("/sessions/{sid}/export.csv")
    def get_export(sid: str):
        return PlainTextResponse(export_csv(store.get(sid)), media_type="text/csv")

    def _mutate(sid: str, op):
        with store.lock(sid):
            session = store.get(sid)
            try:
                op(session)
            except Exception as exc:  # translated or re-raised
                raise _translate(exc)
            store.save(sid, session)
            return session_view(sid, session)

    @app.post("/sessions/{sid}/init-observations")
    def init_observations(sid: str, body: InitObservationsBody):
        return _mutate(sid, lambda s: engine.commit_initial_observations(s, body.values))

    @app.post("/sessions/{sid}/propose")
    def propose(sid: str):
        return _mutate(sid, engine.step_propose)

    @app.post("/sessions/{sid}/choice")
    def choice(sid: str, body: ChoiceBody):
        return _mutate(sid, lambda s: engine.commit_choice(s, body.index, body.chooser))

    @app.post("/sessions/{sid}/observation")
    def observation(sid: str, body: ObservationBody):
        return _mutate(sid, lambda s: engine.commit_observation(s, body.y))

    if frontend_dir and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app


def serve(bind: str = "127.0.0.1:8000", state_dir=None, frontend_dir=None):
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(state_dir=state_dir, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
