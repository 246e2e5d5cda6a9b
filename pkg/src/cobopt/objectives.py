"""Benchmark objectives, observation noise, and regret bookkeeping.

Analytic test functions are kept on their usual minimization scale; the
benchmark wrappers negate them because the engine maximizes. Regret is
identical on both scales.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from . import gp
from .errors import LengthMismatch

_RANGE_SCAN_SEED = 0
_ANCHORS_PER_DIM = 300


def rastrigin(x) -> np.ndarray | float:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    d = X.shape[1]
    vals = 10.0 * d + np.sum(X * X - 10.0 * np.cos(2.0 * np.pi * X), axis=1)
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def rosenbrock(x) -> np.ndarray | float:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    a, b = X[:, :-1], X[:, 1:]
    vals = np.sum(100.0 * (b - a * a) ** 2 + (a - 1.0) ** 2, axis=1)
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def ackley(x) -> np.ndarray | float:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    a, b, c = 20.0, 0.2, 2.0 * np.pi
    vals = (
        -a * np.exp(-b * np.sqrt(np.mean(X * X, axis=1)))
        - np.exp(np.mean(np.cos(c * X), axis=1))
        + a
        + np.e
    )
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def schwefel(x) -> np.ndarray | float:
    # |x| under the root keeps the formula total on [-500, 500]^d.
    X = np.atleast_2d(np.asarray(x, dtype=float))
    d = X.shape[1]
    vals = 418.9829 * d - np.sum(X * np.sin(np.sqrt(np.abs(X))), axis=1)
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


@dataclass(frozen=True)
class KnownOptimum:
    point: np.ndarray
    value: float
    approximate: bool = False

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "value": self.value,
            "approximate": self.approximate,
        }


@dataclass(frozen=True)
class Objective:
    """Noiseless truth on a box, framed for maximization."""

    name: str
    domain: gp.BoxDomain
    batch_evaluator: Callable[[np.ndarray], np.ndarray]
    known_optimum: Optional[KnownOptimum]
    range_estimate: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.range_estimate > 0:
            raise ValueError("range_estimate must be positive")

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(self.batch_evaluator(x[None, :])[0])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.batch_evaluator(np.atleast_2d(X)), dtype=float)


_BENCHMARKS = {
    "rastrigin": (rastrigin, -5.12, 5.12),
    "rosenbrock": (rosenbrock, -5.0, 10.0),
    "ackley": (ackley, -32.768, 32.768),
    "schwefel": (schwefel, -500.0, 500.0),
}


def _schwefel_minimizer_coord() -> float:
    # The function is separable; each coordinate minimizes -t sin(sqrt(t)),
    # whose global minimum on [-500, 500] sits near t = 421.
    res = minimize_scalar(
        lambda t: -t * np.sin(np.sqrt(t)),
        bounds=(400.0, 440.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


def _lhs_scan(domain: gp.BoxDomain, n: int, seed: int) -> np.ndarray:
    sampler = qmc.LatinHypercube(d=domain.dim, scramble=False, seed=seed)
    return domain.denormalize(sampler.random(n))


def benchmark_objective(name: str, dim: int) -> Objective:
    """Standard analytic benchmark on its canonical box, negated for maximization."""
    key = name.strip().lower()
    if key not in _BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(_BENCHMARKS)}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if key == "rosenbrock" and dim < 2:
        raise ValueError("rosenbrock needs dim >= 2")
    fn, lo, hi = _BENCHMARKS[key]
    domain = gp.BoxDomain(np.full(dim, lo), np.full(dim, hi))

    def batch(X: np.ndarray) -> np.ndarray:
        return -fn(np.atleast_2d(X))

    if key == "schwefel":
        point = np.full(dim, _schwefel_minimizer_coord())
        approximate = True
    elif key == "rosenbrock":
        point = np.ones(dim)
        approximate = False
    else:
        point = np.zeros(dim)
        approximate = False
    optimum = KnownOptimum(point=point, value=float(batch(point[None, :])[0]), approximate=approximate)

    scan = batch(_lhs_scan(domain, 10_000 * dim, _RANGE_SCAN_SEED))
    return Objective(
        name=f"{key}-d{dim}",
        domain=domain,
        batch_evaluator=batch,
        known_optimum=optimum,
        range_estimate=float(scan.max() - scan.min()),
    )


def sample_gp_objective(dim: int, lengthscale: float, seed: int) -> Objective:
    """Draw a random smooth objective: a stationary prior sample pinned at
    300*dim anchor locations and served through a noiseless interpolant."""
    if not 1 <= dim <= 5:
        raise ValueError("dim must lie in 1..5")
    if not lengthscale > 0:
        raise ValueError("lengthscale must be positive")
    anchor_seed, draw_seed, opt_seed = np.random.SeedSequence(int(seed)).spawn(3)
    domain = gp.BoxDomain(np.zeros(dim), np.ones(dim))
    kernel = gp.KernelParams.isotropic(dim, lengthscale)

    n = _ANCHORS_PER_DIM * dim
    sampler = qmc.LatinHypercube(d=dim, scramble=False, seed=np.random.default_rng(anchor_seed))
    anchors = sampler.random(n)
    K = gp.kernel_matrix(kernel, anchors)
    # Short lengthscales make K numerically singular; the clipped eigenroot
    # still yields an exact-in-distribution draw.
    evals, evecs = np.linalg.eigh(0.5 * (K + K.T))
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    values = root @ np.random.default_rng(draw_seed).standard_normal(n)

    model = gp.build(
        gp.Dataset(anchors, values),
        domain,
        kernel,
        mean_constant=0.0,
        noise_variance=0.0,
        y_scale=1.0,
    )

    def batch(X: np.ndarray) -> np.ndarray:
        mu, _ = model.predict_batch(np.atleast_2d(X))
        return mu

    optimum = _maximize_mean(model, domain, opt_seed)
    return Objective(
        name=f"gp-sample-d{dim}-l{lengthscale:g}-s{seed}",
        domain=domain,
        batch_evaluator=batch,
        known_optimum=optimum,
        range_estimate=float(values.max() - values.min()),
        metadata={"anchors": anchors, "anchor_values": values, "lengthscale": lengthscale},
    )


def _maximize_mean(model: gp.GpModel, domain: gp.BoxDomain, seed) -> KnownOptimum:
    # 1024 starts; the estimate stays approximate, so refinement effort is
    # spent uniformly rather than adaptively.
    starts = domain.denormalize(
        qmc.Sobol(d=domain.dim, scramble=True, seed=np.random.default_rng(seed)).random_base2(10)
    )

    def neg(x):
        mu, dmu = model.mean_with_gradient(x)
        return -mu, -dmu

    bounds = list(zip(domain.lower, domain.upper))
    mu0, _ = model.predict_batch(starts)
    best_x, best_val = starts[int(np.argmax(mu0))], float(mu0.max())
    for x0 in starts:
        res = minimize(neg, x0, jac=True, method="L-BFGS-B", bounds=bounds)
        if -res.fun > best_val:
            best_val, best_x = -float(res.fun), np.clip(res.x, domain.lower, domain.upper)
    return KnownOptimum(point=best_x, value=best_val, approximate=True)


@dataclass(frozen=True)
class NoisySpec:
    """Observation noise as a fraction of the objective's value range."""

    noise_pct: float = 0.0

    def __post_init__(self):
        if self.noise_pct < 0:
            raise ValueError("noise_pct must be nonnegative")

    def sd(self, range_estimate: float) -> float:
        return self.noise_pct * range_estimate


def make_noisy(obj: Objective, spec: NoisySpec, seed: int):
    """Observation function y(x, eval_index); the counter keys the noise
    stream so replays and restarts see identical corruption."""
    sd = spec.sd(obj.range_estimate)

    def observe(x, eval_index: int) -> float:
        y = obj.evaluate(x)
        if sd == 0.0:
            return y
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(eval_index)]))
        return y + sd * rng.standard_normal()

    return observe


@dataclass(frozen=True)
class RegretTrace:
    """Noiseless truth values in evaluation order plus the target optimum."""

    true_values: np.ndarray
    known_value: float
    approximate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "true_values", np.asarray(self.true_values, dtype=float).ravel())

    @property
    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(self.true_values)

    @property
    def simple_regret(self) -> np.ndarray:
        return self.known_value - self.best_so_far

    @property
    def average_reward(self) -> np.ndarray:
        return np.cumsum(self.true_values) / np.arange(1, self.true_values.size + 1)


@dataclass(frozen=True)
class AggregateCurves:
    simple_mean: np.ndarray
    simple_sd: np.ndarray
    reward_mean: np.ndarray
    reward_sd: np.ndarray


def regret_aggregate(traces) -> AggregateCurves:
    """Pointwise mean and population sd of simple-regret and average-reward curves."""
    traces = list(traces)
    if not traces:
        raise LengthMismatch("need at least one trace")
    length = traces[0].true_values.size
    if any(t.true_values.size != length for t in traces):
        raise LengthMismatch("traces must share a common length")
    S = np.stack([t.simple_regret for t in traces])
    R = np.stack([t.average_reward for t in traces])
    return AggregateCurves(
        simple_mean=S.mean(axis=0),
        simple_sd=S.std(axis=0),
        reward_mean=R.mean(axis=0),
        reward_sd=R.std(axis=0),
    )
