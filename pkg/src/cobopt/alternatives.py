"""Batch construction of choice alternatives around the acquisition optimum.

A batch X of p-1 points is scored on two axes: summed utility and the
determinant of the kernel matrix over X plus the single-point optimum x*.
NSGA-II traces the trade-off and the knee of that front becomes the set of
alternatives shown to the chooser, with x* itself appended last.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import acquisition, gp, moo
from .errors import DegenerateKernel

# Log-det surrogate for rank-deficient batches inside the NSGA-II objective;
# such entries are dropped before knee selection.
_DEGENERATE_LOG_DET = -1e18
# slack on "x* has the best utility" for local-search noise
_STAR_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Candidate:
    point: np.ndarray
    utility: float
    predicted_mean: float
    predicted_sd: float
    is_utility_optimum: bool

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).ravel())
        if self.predicted_sd < 0:
            raise ValueError("predicted_sd must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "utility": self.utility,
            "predicted_mean": self.predicted_mean,
            "predicted_sd": self.predicted_sd,
            "is_utility_optimum": self.is_utility_optimum,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        return cls(
            point=np.asarray(d["point"], dtype=float),
            utility=float(d["utility"]),
            predicted_mean=float(d["predicted_mean"]),
            predicted_sd=float(d["predicted_sd"]),
            is_utility_optimum=bool(d["is_utility_optimum"]),
        )


@dataclass(frozen=True)
class AlternativeSet:
    """The p choices for one iteration; the acquisition optimum sits last.

    ``pareto_snapshot`` is None when p = 1 (no trade-off was explored).
    """

    candidates: tuple
    pareto_snapshot: moo.ParetoArchive | None
    iteration: int

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if len(self.candidates) < 1:
            raise ValueError("need at least one candidate")
        flags = [i for i, c in enumerate(self.candidates) if c.is_utility_optimum]
        if len(flags) != 1:
            raise ValueError("exactly one candidate must be the utility optimum")
        if flags[0] != len(self.candidates) - 1:
            raise ValueError("the utility optimum must be the last candidate")
        star = self.candidates[-1]
        for c in self.candidates[:-1]:
            if c.utility > star.utility + _STAR_TOLERANCE:
                raise ValueError("an alternative exceeds the optimum's utility")
        P = np.stack([c.point for c in self.candidates])
        for i in range(len(P)):
            for j in range(i + 1, len(P)):
                if not np.any(P[i] != P[j]):
                    raise ValueError("candidate points must be pairwise distinct")

    @property
    def p(self) -> int:
        return len(self.candidates)

    @property
    def utility_optimum_index(self) -> int:
        return len(self.candidates) - 1

    def points(self) -> np.ndarray:
        return np.stack([c.point for c in self.candidates])

    def to_dict(self) -> dict:
        snap = None if self.pareto_snapshot is None else self.pareto_snapshot.to_dict()
        return {
            "iteration": self.iteration,
            "candidates": [c.to_dict() for c in self.candidates],
            "pareto_snapshot": snap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlternativeSet":
        snap = d["pareto_snapshot"]
        return cls(
            candidates=tuple(Candidate.from_dict(c) for c in d["candidates"]),
            pareto_snapshot=None if snap is None else moo.ParetoArchive.from_dict(snap),
            iteration=int(d["iteration"]),
        )


def batch_utility(X: np.ndarray, spec, model, ensemble=None) -> float:
    """Sum of single-point utilities over the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    evaluator = acquisition.UtilityEvaluator(spec, model, ensemble)
    return float(evaluator.values(X).sum())


def batch_variability(X: np.ndarray, x_star: np.ndarray, kernel: gp.KernelParams):
    """Determinant of the kernel matrix over the rows of X plus x_star.

    Returns (det, log_det); a rank-deficient matrix yields (0.0, -inf).
    Coordinates are used as given, so pass points on the same scale as the
    kernel's lengthscales.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float)) if np.size(X) else np.empty((0, np.size(x_star)))
    P = np.vstack([X, np.asarray(x_star, dtype=float).reshape(1, -1)])
    K = gp.kernel_matrix(kernel, P)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return 0.0, -np.inf
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return float(np.exp(log_det)), log_det


def _batched_log_det(Pn: np.ndarray, kernel: gp.KernelParams) -> np.ndarray:
    """log det of the kernel matrix for each (p, d) member of a (m, p, d) stack."""
    scaled = Pn / kernel.lengthscales
    diff = scaled[:, :, None, :] - scaled[:, None, :, :]
    r = np.sqrt(np.einsum("mijk,mijk->mij", diff, diff))
    K = kernel.signal_variance * gp._matern52_of_r(r)
    sign, logabs = np.linalg.slogdet(K)
    return np.where(sign > 0, logabs, _DEGENERATE_LOG_DET)


def propose(
    model: gp.GpModel,
    ensemble,
    spec,
    domain: gp.BoxDomain,
    p: int,
    moo_config: moo.MooConfig,
    seed: int,
    iteration: int = 0,
) -> AlternativeSet:
    """One round of alternative generation.

    x* maximizes the utility; for p > 1 an NSGA-II run over flattened
    (p-1)-point batches trades summed utility against batch log-determinant,
    and the knee batch joins x* in the returned set.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    d = domain.dim
    x_star, u_star = acquisition.maximize(spec, model, ensemble, domain, seed=seed)
    mu_star, var_star = model.predict_batch(x_star[None, :])
    star = Candidate(
        point=x_star,
        utility=u_star,
        predicted_mean=float(mu_star[0]),
        predicted_sd=float(np.sqrt(var_star[0])),
        is_utility_optimum=True,
    )
    if p == 1:
        return AlternativeSet(candidates=(star,), pareto_snapshot=None, iteration=iteration)

    evaluator = acquisition.UtilityEvaluator(spec, model, ensemble)
    x_star_n = domain.normalize(x_star)
    n_alts = p - 1

    def objectives(Z: np.ndarray) -> np.ndarray:
        m = Z.shape[0]
        rows = Z.reshape(m * n_alts, d)
        util = evaluator.values(rows).reshape(m, n_alts).sum(axis=1)
        Pn = np.concatenate(
            [domain.normalize(rows).reshape(m, n_alts, d), np.broadcast_to(x_star_n, (m, 1, d))],
            axis=1,
        )
        return np.column_stack([util, _batched_log_det(Pn, model.kernel)])

    problem = moo.MooProblem(
        decision_dim=n_alts * d,
        lower=np.tile(domain.lower, n_alts),
        upper=np.tile(domain.upper, n_alts),
        objectives=objectives,
    )
    moo_seed = int(np.random.SeedSequence([int(seed), 1]).generate_state(1)[0])
    archive = moo.nsga2(
        problem,
        pop_size=moo_config.pop_size,
        generations=moo_config.generations,
        seed=moo_seed,
        seed_individuals=np.tile(x_star, n_alts)[None, :],
    )

    usable = [e for e in archive.entries if e.objectives[1] > _DEGENERATE_LOG_DET / 10]
    if not usable:
        raise DegenerateKernel("every candidate batch was rank deficient")
    knee = moo.knee_point(moo.ParetoArchive(tuple(usable)))

    rows = knee.decision.reshape(n_alts, d).copy()
    utils = evaluator.values(rows)
    if float(np.max(utils)) > u_star + _STAR_TOLERANCE:
        # The knee batch holds a row the multistart search missed.  x* is
        # pinned (a p=1 run must evaluate the same point), so repair the
        # batch instead: take the knee among the archive entries whose rows
        # all stay within tolerance of u*, and if none qualify contract the
        # offending rows toward x* until their utility drops below it.
        admissible = []
        for e in usable:
            r = e.decision.reshape(n_alts, d)
            if float(np.max(evaluator.values(r))) <= u_star + _STAR_TOLERANCE:
                admissible.append(e)
        if admissible:
            knee = moo.knee_point(moo.ParetoArchive(tuple(admissible)))
            rows = knee.decision.reshape(n_alts, d).copy()
            utils = evaluator.values(rows)
        else:
            for i in range(n_alts):
                steps = 0
                while utils[i] > u_star + _STAR_TOLERANCE and steps < 100:
                    rows[i] = x_star + 0.5 * (rows[i] - x_star)
                    utils[i] = float(evaluator.value(rows[i]))
                    steps += 1
                if not np.any(rows[i] != x_star):
                    # collapsed onto x* bit-for-bit; back off i+1 ulps in the
                    # first coordinate so the set stays pairwise distinct
                    target = domain.lower[0] if x_star[0] > domain.lower[0] else domain.upper[0]
                    val = x_star[0]
                    for _ in range(i + 1):
                        val = float(np.nextafter(val, target))
                    rows[i, 0] = val
                    utils[i] = float(evaluator.value(rows[i]))

    mu, var = model.predict_batch(rows)
    alts = [
        Candidate(
            point=rows[i],
            utility=float(utils[i]),
            predicted_mean=float(mu[i]),
            predicted_sd=float(np.sqrt(var[i])),
            is_utility_optimum=False,
        )
        for i in range(n_alts)
    ]
    return AlternativeSet(candidates=(*alts, star), pareto_snapshot=archive, iteration=iteration)
