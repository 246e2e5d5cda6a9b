"""Initial designs: static Latin hypercubes and expert-augmented layouts.

The augmented design keeps expert-proposed points fixed and places the
remaining points to maximize the determinant of the kernel matrix over the
whole set, i.e. the volume of information the initial experiments span.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import gp
from .errors import DegenerateKernel

# No data exists before the initial design, so the determinant objective uses
# a fixed isotropic kernel on the unit cube.
DESIGN_LENGTHSCALE = 0.2
_DUPLICATE_PENALTY = 1e9


@dataclass(frozen=True)
class ExpertSeedSet:
    """Expert-proposed starting points (original units), optionally labeled."""

    points: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim != 2:
            raise ValueError("expert points must form an (m, d) matrix")
        if self.labels is not None and len(self.labels) != P.shape[0]:
            raise ValueError("one label per point required")
        object.__setattr__(self, "points", P)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @classmethod
    def empty(cls, dim: int) -> "ExpertSeedSet":
        return cls(np.empty((0, dim)))

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class DesignResult:
    """Final initial design with provenance flags and its log-determinant."""

    points: np.ndarray
    expert_mask: np.ndarray
    log_det: float

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "expert_mask", np.asarray(self.expert_mask, dtype=bool))


def latin_hypercube(n: int, domain: gp.BoxDomain, seed: int) -> np.ndarray:
    """Centered Latin hypercube: one point per axis stratum, mid-stratum."""
    if n < 1:
        raise ValueError("need at least one design point")
    sampler = qmc.LatinHypercube(d=domain.dim, scramble=False, seed=int(seed))
    return domain.denormalize(sampler.random(n))


def design_log_det(points_normalized: np.ndarray, kernel: gp.KernelParams) -> float:
    """log |K| over the rows; -inf when the Gram is rank deficient."""
    K = gp.kernel_matrix(kernel, np.atleast_2d(points_normalized))
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return -np.inf
    return float(2.0 * np.sum(np.log(np.diag(L))))


def augment_design(
    expert: ExpertSeedSet,
    total: int,
    kernel: gp.KernelParams,
    domain: gp.BoxDomain,
    seed: int,
    restarts: int = 16,
) -> DesignResult:
    """Fill a design up to `total` points around fixed expert rows.

    Free rows maximize log |K| by multi-start L-BFGS-B over the unit cube,
    one Latin-hypercube initialization per restart.  With enough expert
    points the expert set itself is the design.
    """
    if total < 1:
        raise ValueError("total design size must be >= 1")
    for p in expert.points:
        if not domain.contains(p):
            raise ValueError("expert point outside the domain")
    m = expert.m
    if m >= total:
        mask = np.ones(m, dtype=bool)
        ld = design_log_det(domain.normalize(expert.points), kernel)
        return DesignResult(expert.points.copy(), mask, ld)

    d = domain.dim
    free = total - m
    expert_norm = domain.normalize(expert.points) if m else np.empty((0, d))

    def negated(z):
        pts = np.vstack([expert_norm, z.reshape(free, d)])
        ld = design_log_det(pts, kernel)
        if not np.isfinite(ld):
            return _DUPLICATE_PENALTY
        return -ld

    start_seeds = np.random.SeedSequence(seed).generate_state(restarts, dtype="uint64")
    bounds = [(0.0, 1.0)] * (free * d)
    best_val = np.inf
    best_z = None
    for s in start_seeds:
        # scrambled so restarts differ and never sit exactly on an expert
        # point (a centered hypercube would, e.g. {0.25, 0.75} in 1-D)
        z0 = qmc.LatinHypercube(d=d, scramble=True, seed=int(s)).random(free).ravel()
        res = minimize(negated, z0, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 300})
        for cand in (res.x, z0):
            val = negated(cand)
            if val < best_val:
                best_val = val
                best_z = np.clip(cand, 0.0, 1.0)
    if best_z is None or best_val >= _DUPLICATE_PENALTY:
        raise DegenerateKernel("no start produced a positive-definite design Gram")

    free_points = domain.denormalize(best_z.reshape(free, d))
    points = np.vstack([expert.points, free_points])
    mask = np.concatenate([np.ones(m, dtype=bool), np.zeros(free, dtype=bool)])
    return DesignResult(points, mask, -best_val)
