"""Bi-objective maximization: NSGA-II, Pareto filtering, knee selection.

Domination is in the maximization sense throughout: a point is dominated iff
another is >= in both objectives and > in at least one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

_SBX_ETA = 15.0
_SBX_RATE = 0.9
_MUT_ETA = 20.0


@dataclass(frozen=True)
class MooConfig:
    """Population size and generation budget for the evolutionary search."""

    pop_size: int = 50
    generations: int = 100

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ValueError("pop_size must be even and >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")

    def to_dict(self) -> dict:
        return {"pop_size": self.pop_size, "generations": self.generations}

    @classmethod
    def from_dict(cls, d: dict) -> "MooConfig":
        return cls(pop_size=int(d.get("pop_size", 50)), generations=int(d.get("generations", 100)))


@dataclass(frozen=True)
class MooProblem:
    """Box-bounded decision space with a batched bi-objective evaluator.

    `objectives` maps an (m, decision_dim) matrix to an (m, 2) array; it must
    be total on the box.
    """

    decision_dim: int
    lower: np.ndarray
    upper: np.ndarray
    objectives: object

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if self.decision_dim < 1 or lo.size != self.decision_dim or hi.size != self.decision_dim:
            raise ValueError("bounds must match decision_dim >= 1")
        if not np.all(hi > lo):
            raise ValueError("upper must exceed lower")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


@dataclass(frozen=True)
class ArchiveEntry:
    decision: np.ndarray
    objectives: tuple

    def __post_init__(self):
        object.__setattr__(self, "decision", np.asarray(self.decision, dtype=float))
        f = self.objectives
        object.__setattr__(self, "objectives", (float(f[0]), float(f[1])))


@dataclass(frozen=True)
class ParetoArchive:
    """Mutually nondominated entries."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("archive must be nonempty")
        F = np.array([e.objectives for e in entries])
        if len(pareto_filter(F)) != len(entries):
            raise ValueError("archive entries must be mutually nondominated")
        object.__setattr__(self, "entries", entries)

    def objective_matrix(self) -> np.ndarray:
        return np.array([e.objectives for e in self.entries])

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"decision": e.decision.tolist(), "objectives": list(e.objectives)}
                for e in self.entries
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParetoArchive":
        return cls(tuple(
            ArchiveEntry(np.asarray(e["decision"], float), tuple(e["objectives"]))
            for e in d["entries"]
        ))


def _dominates_cross(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """D[i, j] = row i of A dominates row j of B (two objectives)."""
    a1, a2 = A[:, 0][:, None], A[:, 1][:, None]
    b1, b2 = B[:, 0][None, :], B[:, 1][None, :]
    return (a1 >= b1) & (a2 >= b2) & ((a1 > b1) | (a2 > b2))


def _domination_matrix(F: np.ndarray) -> np.ndarray:
    if F.shape[1] == 2:
        return _dominates_cross(F, F)
    ge = (F[:, None, :] >= F[None, :, :]).all(axis=2)
    gt = (F[:, None, :] > F[None, :, :]).any(axis=2)
    return ge & gt


def pareto_filter(points) -> np.ndarray:
    """Indices of the nondominated points, ascending."""
    F = np.atleast_2d(np.asarray(points, dtype=float))
    if F.shape[0] == 0:
        raise ValueError("need at least one point")
    dom = _domination_matrix(F)
    return np.where(~dom.any(axis=0))[0]


def _nondominated_fronts(F: np.ndarray):
    dom = _domination_matrix(F)
    counts = dom.sum(axis=0).astype(int)
    assigned = np.zeros(F.shape[0], dtype=bool)
    fronts = []
    while not assigned.all():
        cur = np.where(~assigned & (counts == 0))[0]
        fronts.append(cur)
        assigned[cur] = True
        counts = counts - dom[cur].sum(axis=0)
        counts[assigned] = -1
    return fronts


def _crowding(F: np.ndarray, front: np.ndarray) -> np.ndarray:
    k = front.size
    if k <= 2:
        return np.full(k, np.inf)
    dist = np.zeros(k)
    for j in range(F.shape[1]):
        order = np.argsort(F[front, j], kind="stable")
        vals = F[front[order], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def _rank_and_crowding(F: np.ndarray):
    n = F.shape[0]
    rank = np.empty(n, dtype=int)
    crowd = np.empty(n)
    for r, front in enumerate(_nondominated_fronts(F)):
        rank[front] = r
        crowd[front] = _crowding(F, front)
    return rank, crowd


def _sbx_and_mutate(parents: np.ndarray, lower, upper, rng) -> np.ndarray:
    npairs, dim = parents.shape[0] // 2, parents.shape[1]
    p1 = parents[0::2]
    p2 = parents[1::2]
    do_cx = rng.random(npairs) < _SBX_RATE
    gene = (rng.random((npairs, dim)) < 0.5) & do_cx[:, None]
    u = rng.random((npairs, dim))
    beta = np.where(u <= 0.5,
                    (2.0 * u) ** (1.0 / (_SBX_ETA + 1.0)),
                    (1.0 / np.maximum(2.0 * (1.0 - u), 1e-300)) ** (1.0 / (_SBX_ETA + 1.0)))
    c1 = np.where(gene, 0.5 * ((1 + beta) * p1 + (1 - beta) * p2), p1)
    c2 = np.where(gene, 0.5 * ((1 - beta) * p1 + (1 + beta) * p2), p2)
    children = np.empty_like(parents)
    children[0::2] = c1
    children[1::2] = c2

    span = upper - lower
    mut = rng.random(children.shape) < (1.0 / dim)
    u2 = rng.random(children.shape)
    delta = np.where(u2 < 0.5,
                     (2.0 * u2) ** (1.0 / (_MUT_ETA + 1.0)) - 1.0,
                     1.0 - (2.0 * (1.0 - u2)) ** (1.0 / (_MUT_ETA + 1.0)))
    children = children + mut * delta * span
    return np.clip(children, lower, upper)


def _merge_archive(aP, aF, cP, cF):
    """Fold new evaluations into the running nondominated set (insertion order)."""
    fresh = ~_dominates_cross(aF, cF).any(axis=0)
    if fresh.any():
        sP, sF = cP[fresh], cF[fresh]
        inner = pareto_filter(sF)
        sP, sF = sP[inner], sF[inner]
        alive = ~_dominates_cross(sF, aF).any(axis=0)
        return np.vstack([aP[alive], sP]), np.vstack([aF[alive], sF])
    return aP, aF


def nsga2(
    problem: MooProblem,
    pop_size: int = 50,
    generations: int = 100,
    seed: int = 0,
    seed_individuals: np.ndarray | None = None,
) -> ParetoArchive:
    """Standard NSGA-II (binary tournament, SBX, polynomial mutation).

    All random draws happen in a fixed vectorized order from one seeded
    generator, so results are reproducible independent of evaluation order.
    `seed_individuals` rows replace the first rows of the initial population.
    Returns the nondominated set over every individual evaluated during the
    run, which makes front quality nondecreasing in the generation budget.
    """
    MooConfig(pop_size, generations)
    dim = problem.decision_dim
    lo, hi = problem.lower, problem.upper
    ss = np.random.SeedSequence(seed)
    lhs_seed, loop_seed = ss.generate_state(2, dtype="uint64")
    unit = qmc.LatinHypercube(d=dim, scramble=False, seed=int(lhs_seed)).random(pop_size)
    pop = lo + unit * (hi - lo)
    if seed_individuals is not None:
        extra = np.atleast_2d(np.asarray(seed_individuals, dtype=float))
        k = min(extra.shape[0], pop_size)
        pop[:k] = np.clip(extra[:k], lo, hi)
    F = np.asarray(problem.objectives(pop), dtype=float)
    nd0 = pareto_filter(F)
    arch_P, arch_F = pop[nd0].copy(), F[nd0].copy()

    rng = np.random.default_rng(np.random.SeedSequence(int(loop_seed)))
    for _ in range(generations):
        rank, crowd = _rank_and_crowding(F)
        a = rng.integers(0, pop_size, size=pop_size)
        b = rng.integers(0, pop_size, size=pop_size)
        a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
        parents = pop[np.where(a_wins, a, b)]
        children = _sbx_and_mutate(parents, lo, hi, rng)
        Fc = np.asarray(problem.objectives(children), dtype=float)
        arch_P, arch_F = _merge_archive(arch_P, arch_F, children, Fc)

        combined = np.vstack([pop, children])
        F_all = np.vstack([F, Fc])
        keep = []
        for front in _nondominated_fronts(F_all):
            if len(keep) + front.size <= pop_size:
                keep.extend(front.tolist())
            else:
                cd = _crowding(F_all, front)
                order = np.lexsort((front, -cd))
                keep.extend(front[order][: pop_size - len(keep)].tolist())
                break
        keep = np.asarray(keep)
        pop = combined[keep]
        F = F_all[keep]

    seen = set()
    entries = []
    for i in range(arch_P.shape[0]):
        key = arch_P[i].tobytes()
        if key in seen:
            continue
        seen.add(key)
        entries.append(ArchiveEntry(arch_P[i].copy(), (arch_F[i, 0], arch_F[i, 1])))
    return ParetoArchive(tuple(entries))


def knee_point(archive: ParetoArchive) -> ArchiveEntry:
    """Entry farthest from the chord between the normalized front extremes.

    Objectives are first rescaled to [0, 1] over the archive, which makes the
    selection invariant to positive affine transforms of either objective.
    Ties (including fully degenerate fronts) go to the larger normalized f1.
    """
    F = archive.objective_matrix()
    k = F.shape[0]
    if k == 1:
        return archive.entries[0]
    mins = F.min(axis=0)
    spans = F.max(axis=0) - mins
    spans = np.where(spans > 0, spans, 1.0)
    Fn = (F - mins) / spans
    i1 = max(range(k), key=lambda i: (Fn[i, 0], Fn[i, 1]))
    i2 = max(range(k), key=lambda i: (Fn[i, 1], Fn[i, 0]))
    chord = Fn[i2] - Fn[i1]
    length = float(np.hypot(chord[0], chord[1]))
    if length == 0.0:
        dist = np.zeros(k)
    else:
        rel = Fn - Fn[i1]
        dist = np.abs(chord[0] * rel[:, 1] - chord[1] * rel[:, 0]) / length
    best = max(range(k), key=lambda i: (dist[i], Fn[i, 0]))
    return archive.entries[best]


def hypervolume_2d(points, ref) -> float:
    """Area jointly dominated by `points` above the reference (maximization)."""
    F = np.atleast_2d(np.asarray(points, dtype=float))
    r1, r2 = float(ref[0]), float(ref[1])
    order = np.lexsort((-F[:, 1], -F[:, 0]))
    hv = 0.0
    level = r2
    for i in order:
        f1, f2 = F[i]
        if f1 <= r1 or f2 <= level:
            continue
        hv += (f1 - r1) * (f2 - level)
        level = f2
    return hv
