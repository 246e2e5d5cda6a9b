"""Optimization loop as an explicit state machine.

A session moves along awaiting_init -> (proposing -> awaiting_choice ->
awaiting_observation)* -> done, with every choice recorded in an append-only
audit log. All randomness is drawn from counter-based streams keyed by
(session seed, iteration, purpose tag), so the loop replays bit-identically
from its config and recorded decisions.
"""
from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import acquisition as acq, alternatives, doe, gp, moo, objectives, policies
from .errors import (
    IllegalPhase,
    IndexOutOfRange,
    LengthMismatch,
    NonFiniteObservation,
)

SCHEMA_VERSION = 1

AWAITING_INIT = "awaiting_init"
PROPOSING = "proposing"
AWAITING_CHOICE = "awaiting_choice"
AWAITING_OBSERVATION = "awaiting_observation"
DONE = "done"

# Stream tags; each (seed, iteration, tag) triple is an independent stream.
TAG_FIT = 0
TAG_FANTASY = 1
TAG_PROPOSE = 2
TAG_POLICY = 3
TAG_DESIGN = 4


def stream_seed(seed: int, iteration: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(iteration), int(tag)]).generate_state(1)[0])


@dataclass(frozen=True)
class SessionConfig:
    domain: gp.BoxDomain
    acquisition: acq.AcquisitionSpec = field(default_factory=acq.AcquisitionSpec)
    p: int = 4
    init_design_size: int = 8
    moo: moo.MooConfig = field(default_factory=moo.MooConfig)
    noise: str | float = "learned"
    max_iterations: int = 48
    seed: int = 0
    init_lengthscale: float = 0.2
    fit_restarts: int = 8

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.init_design_size < 1:
            raise ValueError("init_design_size must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if isinstance(self.noise, str):
            if self.noise != "learned":
                raise ValueError("noise must be 'learned' or a nonnegative variance")
        elif float(self.noise) < 0:
            raise ValueError("noise must be 'learned' or a nonnegative variance")

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "acquisition": self.acquisition.to_dict(),
            "p": self.p,
            "init_design_size": self.init_design_size,
            "moo": self.moo.to_dict(),
            "noise": self.noise if isinstance(self.noise, str) else float(self.noise),
            "max_iterations": self.max_iterations,
            "seed": self.seed,
            "init_lengthscale": self.init_lengthscale,
            "fit_restarts": self.fit_restarts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        # every field except the domain falls back to the dataclass default
        base = cls(domain=gp.BoxDomain.from_dict(d["domain"]))
        noise = d.get("noise", base.noise)
        return cls(
            domain=base.domain,
            acquisition=acq.AcquisitionSpec.from_dict(d["acquisition"])
            if "acquisition" in d
            else base.acquisition,
            p=int(d.get("p", base.p)),
            init_design_size=int(d.get("init_design_size", base.init_design_size)),
            moo=moo.MooConfig.from_dict(d["moo"]) if "moo" in d else base.moo,
            noise=noise if isinstance(noise, str) else float(noise),
            max_iterations=int(d.get("max_iterations", base.max_iterations)),
            seed=int(d.get("seed", base.seed)),
            init_lengthscale=float(d.get("init_lengthscale", base.init_lengthscale)),
            fit_restarts=int(d.get("fit_restarts", base.fit_restarts)),
        )


@dataclass
class AuditRecord:
    iteration: int
    alternatives: alternatives.AlternativeSet
    chosen_index: int
    chooser_tag: str
    observation: float | None
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "alternatives": self.alternatives.to_dict(),
            "chosen_index": self.chosen_index,
            "chooser_tag": self.chooser_tag,
            "observation": self.observation,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditRecord":
        obs = d["observation"]
        return cls(
            iteration=int(d["iteration"]),
            alternatives=alternatives.AlternativeSet.from_dict(d["alternatives"]),
            chosen_index=int(d["chosen_index"]),
            chooser_tag=str(d["chooser_tag"]),
            observation=None if obs is None else float(obs),
            timestamp=float(d["timestamp"]),
        )


@dataclass
class Session:
    config: SessionConfig
    initial_design: np.ndarray
    expert_mask: np.ndarray
    phase: str = AWAITING_INIT
    iteration: int = 0
    dataset: gp.Dataset | None = None
    pending_alternatives: alternatives.AlternativeSet | None = None
    pending_point: np.ndarray | None = None
    audit: list = field(default_factory=list)

    @property
    def init_size(self) -> int:
        return self.initial_design.shape[0]

    def best_observed(self) -> float | None:
        if self.dataset is None or self.dataset.n == 0:
            return None
        return float(np.max(self.dataset.outputs))


def init_session(config: SessionConfig, expert_seeds: doe.ExpertSeedSet | None = None) -> Session:
    """Build the initial design; the session then awaits its observations."""
    design_seed = stream_seed(config.seed, 0, TAG_DESIGN)
    if expert_seeds is None or expert_seeds.m == 0:
        points = doe.latin_hypercube(config.init_design_size, config.domain, design_seed)
        mask = np.zeros(config.init_design_size, dtype=bool)
    else:
        dom = config.domain
        if expert_seeds.points.shape[1] != dom.dim:
            raise ValueError(f"expert seeds must have {dom.dim} coordinates")
        if np.any(expert_seeds.points < dom.lower) or np.any(expert_seeds.points > dom.upper):
            raise ValueError("expert seed outside the domain box")
        kernel = gp.KernelParams.isotropic(config.domain.dim, doe.DESIGN_LENGTHSCALE)
        result = doe.augment_design(
            expert_seeds, config.init_design_size, kernel, config.domain, design_seed
        )
        points, mask = result.points, result.expert_mask
    return Session(config=config, initial_design=points, expert_mask=mask)


def commit_initial_observations(session: Session, ys) -> Session:
    if session.phase != AWAITING_INIT:
        raise IllegalPhase(f"cannot accept initial observations in phase {session.phase!r}")
    ys = np.asarray(ys, dtype=float).ravel()
    if ys.size != session.init_size:
        raise LengthMismatch(f"expected {session.init_size} observations, got {ys.size}")
    if not np.all(np.isfinite(ys)):
        raise NonFiniteObservation("initial observations must be finite")
    session.dataset = gp.Dataset(session.initial_design.copy(), ys)
    session.phase = DONE if session.config.max_iterations == 0 else PROPOSING
    return session


def _fit_current(session: Session) -> gp.GpModel:
    cfg = session.config
    return gp.fit(
        session.dataset,
        cfg.domain,
        noise=cfg.noise,
        seed=stream_seed(cfg.seed, session.iteration, TAG_FIT),
        restarts=cfg.fit_restarts,
        init_lengthscale=cfg.init_lengthscale,
    )


def step_propose(session: Session) -> alternatives.AlternativeSet:
    """Refit the surrogate and generate this iteration's alternatives."""
    if session.phase != PROPOSING:
        raise IllegalPhase(f"cannot propose in phase {session.phase!r}")
    cfg = session.config
    model = _fit_current(session)
    ensemble = None
    if cfg.acquisition.kind == "NoisyEI":
        ensemble = acq.build_fantasies(
            model, cfg.acquisition, stream_seed(cfg.seed, session.iteration, TAG_FANTASY)
        )
    aset = alternatives.propose(
        model,
        ensemble,
        cfg.acquisition,
        cfg.domain,
        cfg.p,
        cfg.moo,
        seed=stream_seed(cfg.seed, session.iteration, TAG_PROPOSE),
        iteration=session.iteration,
    )
    session.pending_alternatives = aset
    session.phase = AWAITING_CHOICE
    return aset


def commit_choice(session: Session, index: int, chooser_tag: str = "human") -> Session:
    if session.phase != AWAITING_CHOICE:
        raise IllegalPhase(f"cannot commit a choice in phase {session.phase!r}")
    aset = session.pending_alternatives
    if not 0 <= int(index) < aset.p:
        raise IndexOutOfRange(f"choice index {index} outside [0, {aset.p})")
    index = int(index)
    session.audit.append(
        AuditRecord(
            iteration=session.iteration,
            alternatives=aset,
            chosen_index=index,
            chooser_tag=str(chooser_tag),
            observation=None,
            timestamp=time.time(),
        )
    )
    session.pending_point = aset.candidates[index].point.copy()
    session.pending_alternatives = None
    session.phase = AWAITING_OBSERVATION
    return session


def commit_observation(session: Session, y: float) -> Session:
    if session.phase != AWAITING_OBSERVATION:
        raise IllegalPhase(f"cannot commit an observation in phase {session.phase!r}")
    y = float(y)
    if not np.isfinite(y):
        raise NonFiniteObservation(f"observation must be finite, got {y}")
    session.dataset = session.dataset.appended(session.pending_point, y)
    session.audit[-1].observation = y
    session.pending_point = None
    session.iteration += 1
    session.phase = DONE if session.iteration >= session.config.max_iterations else PROPOSING
    return session


def run_autonomous(
    config: SessionConfig,
    objective: objectives.Objective,
    policy: policies.ChoicePolicy,
    seed: int | None = None,
    expert_seeds: doe.ExpertSeedSet | None = None,
    noise_spec: objectives.NoisySpec | None = None,
):
    """Drive a full session with a simulated chooser.

    Returns (session, regret trace); the trace covers every evaluation
    including the initial design, in evaluation order.
    """
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    if objective.known_optimum is None:
        raise ValueError("autonomous runs need an objective with a known optimum")
    noise_spec = noise_spec if noise_spec is not None else objectives.NoisySpec(0.0)
    observe = objectives.make_noisy(objective, noise_spec, seed=config.seed)

    session = init_session(config, expert_seeds)
    init_ys = [observe(x, i) for i, x in enumerate(session.initial_design)]
    commit_initial_observations(session, init_ys)
    while session.phase == PROPOSING:
        aset = step_propose(session)
        truth = objective.evaluate_batch(aset.points()) if policy.needs_truth else None
        index = policies.select(
            policy, aset, truth, seed=stream_seed(config.seed, session.iteration, TAG_POLICY)
        )
        commit_choice(session, index, chooser_tag=policy.label)
        y = observe(session.pending_point, eval_index=session.dataset.n)
        commit_observation(session, y)

    trace = objectives.RegretTrace(
        objective.evaluate_batch(session.dataset.inputs),
        known_value=objective.known_optimum.value,
        approximate=objective.known_optimum.approximate,
    )
    return session, trace


def _session_document(session: Session, with_timestamps: bool) -> dict:
    audit = []
    for rec in session.audit:
        d = rec.to_dict()
        if not with_timestamps:
            del d["timestamp"]
        audit.append(d)
    dataset = None
    if session.dataset is not None:
        dataset = {
            "inputs": [[float(v) for v in row] for row in session.dataset.inputs],
            "outputs": [float(v) for v in session.dataset.outputs],
        }
    pending = session.pending_alternatives
    return {
        "schema_version": SCHEMA_VERSION,
        "config": session.config.to_dict(),
        "initial_design": [[float(v) for v in row] for row in session.initial_design],
        "expert_mask": [bool(b) for b in session.expert_mask],
        "phase": session.phase,
        "iteration": session.iteration,
        "dataset": dataset,
        "pending_alternatives": None if pending is None else pending.to_dict(),
        "pending_point": None
        if session.pending_point is None
        else [float(v) for v in session.pending_point],
        "audit": audit,
    }


def to_json(session: Session) -> str:
    """Full persisted form, one JSON document per session."""
    return json.dumps(_session_document(session, with_timestamps=True), sort_keys=True, indent=2) + "\n"


def canonical_state_json(session: Session) -> str:
    """Deterministic state digest: everything except wall-clock timestamps."""
    return json.dumps(
        _session_document(session, with_timestamps=False), sort_keys=True, separators=(",", ":")
    )


def from_json(text: str) -> Session:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    dataset = None
    if doc["dataset"] is not None:
        dataset = gp.Dataset(
            np.asarray(doc["dataset"]["inputs"], dtype=float),
            np.asarray(doc["dataset"]["outputs"], dtype=float),
        )
    pending = doc["pending_alternatives"]
    point = doc["pending_point"]
    session = Session(
        config=SessionConfig.from_dict(doc["config"]),
        initial_design=np.asarray(doc["initial_design"], dtype=float),
        expert_mask=np.asarray(doc["expert_mask"], dtype=bool),
        phase=str(doc["phase"]),
        iteration=int(doc["iteration"]),
        dataset=dataset,
        pending_alternatives=None if pending is None else alternatives.AlternativeSet.from_dict(pending),
        pending_point=None if point is None else np.asarray(point, dtype=float),
        audit=[AuditRecord.from_dict(r) for r in doc["audit"]],
    )
    return session


def replay(recorded: Session) -> Session:
    """Rebuild a session from its config plus recorded choices and observations.

    The result matches the original in canonical state (timestamps aside)
    whenever the recording came from this engine.
    """
    cfg = recorded.config
    if np.any(recorded.expert_mask):
        expert = doe.ExpertSeedSet(recorded.initial_design[recorded.expert_mask])
    else:
        expert = None
    session = init_session(cfg, expert)
    if recorded.dataset is None:
        return session
    t0 = recorded.init_size
    commit_initial_observations(session, recorded.dataset.outputs[:t0])
    for rec in recorded.audit:
        step_propose(session)
        commit_choice(session, rec.chosen_index, rec.chooser_tag)
        if rec.observation is not None:
            commit_observation(session, rec.observation)
    if recorded.phase == AWAITING_CHOICE:
        step_propose(session)
    return session
