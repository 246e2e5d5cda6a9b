"""Acquisition utilities: EI, UCB, and their noise-aware ensemble variants.

Noisy expected improvement averages the base utility over an ensemble of
noiseless "fantasy" models, each fit to one posterior draw of the outputs at
the training inputs.  Members share the training inputs and hyperparameters,
hence a single Gram factorization; evaluation stacks their weight vectors so
the dominant cost (one kernel vector and one solve per query) is paid once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import fmin_l_bfgs_b
from scipy.special import ndtr
from scipy.stats import qmc

from . import gp
from .errors import MissingEnsemble

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT5 = math.sqrt(5.0)

KINDS = ("EI", "UCB", "NoisyEI")
_BASES = ("EI", "UCB")


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which utility to optimize and its knobs."""

    kind: str = "EI"
    beta: float = 2.0
    base: str = "EI"
    n_fantasies: int = 8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.base not in _BASES:
            raise ValueError(f"unknown base utility {self.base!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if int(self.n_fantasies) < 1:
            raise ValueError("n_fantasies must be >= 1")
        object.__setattr__(self, "n_fantasies", int(self.n_fantasies))

    @property
    def base_kind(self) -> str:
        """The utility actually averaged: the base under NoisyEI, else kind."""
        return self.base if self.kind == "NoisyEI" else self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "beta": self.beta,
            "base": self.base,
            "n_fantasies": self.n_fantasies,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcquisitionSpec":
        return cls(
            kind=d["kind"],
            beta=float(d.get("beta", 2.0)),
            base=d.get("base", "EI"),
            n_fantasies=int(d.get("n_fantasies", 8)),
        )


@dataclass(frozen=True)
class FantasyEnsemble:
    """Noiseless models fit to posterior output draws, plus their incumbents."""

    members: tuple
    incumbents: np.ndarray

    def __post_init__(self):
        members = tuple(self.members)
        inc = np.asarray(self.incumbents, dtype=float).ravel()
        if len(members) == 0 or inc.size != len(members):
            raise ValueError("one incumbent per member required")
        X0 = members[0].data.inputs
        for m in members:
            if m.noise_variance != 0.0:
                raise ValueError("fantasy members must be noiseless")
            if m.data.inputs.shape != X0.shape or not np.array_equal(m.data.inputs, X0):
                raise ValueError("fantasy members must share training inputs")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "incumbents", inc)


def ei(pred: gp.Prediction, incumbent: float) -> float:
    """Expected improvement of a Gaussian belief over the incumbent."""
    gap = pred.mean - incumbent
    sd = pred.sd
    if sd == 0.0:
        return max(gap, 0.0)
    z = gap / sd
    value = gap * ndtr(z) + sd * _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    return max(float(value), 0.0)


def ucb(pred: gp.Prediction, beta: float = 2.0) -> float:
    """Optimistic upper bound mean + beta * sd."""
    return float(pred.mean + beta * pred.sd)


def incumbent_value(model: gp.GpModel) -> float:
    """Best observed output, or best posterior mean at the data when noisy."""
    if model.noise_variance == 0.0:
        return float(np.max(model.data.outputs))
    return float(np.max(model.train_means))


def build_fantasies(model: gp.GpModel, spec: AcquisitionSpec, seed: int) -> FantasyEnsemble:
    """Draw synthetic output vectors at the training inputs and refit noiselessly.

    Hyperparameters (kernel, mean constant, output scale) are copied from the
    parent; with a noiseless parent the ensemble collapses to the parent
    itself, so noisy utilities degrade gracefully to their plain versions.
    """
    if model.noise_variance == 0.0:
        return FantasyEnsemble((model,), np.array([float(np.max(model.data.outputs))]))
    X = model.data.inputs
    member_seeds = np.random.SeedSequence(seed).generate_state(spec.n_fantasies, dtype="uint64")
    members = []
    for s in member_seeds:
        phi = model.sample_at(X, int(s))
        members.append(
            gp.build(
                gp.Dataset(X, phi),
                model.domain,
                model.kernel,
                mean_constant=model.mean_constant,
                noise_variance=0.0,
                y_scale=model.y_scale,
            )
        )
    incumbents = np.array([float(np.max(m.data.outputs)) for m in members])
    return FantasyEnsemble(tuple(members), incumbents)


class UtilityEvaluator:
    """Evaluates one acquisition spec against a model (and optional ensemble).

    Precomputes the shared Gram inverse and the stacked member weights so that
    batched evaluation inside search loops costs one kernel block and a pair
    of matrix products per call.
    """

    def __init__(self, spec: AcquisitionSpec, model: gp.GpModel, ensemble: FantasyEnsemble | None = None):
        if spec.kind == "NoisyEI":
            if ensemble is None:
                raise MissingEnsemble("NoisyEI requires a fantasy ensemble")
            members = ensemble.members
            incumbents = ensemble.incumbents
        else:
            members = (model,)
            incumbents = np.array([incumbent_value(model)])
        self.spec = spec
        self.base = spec.base_kind
        ref = members[0]
        self.domain = ref.domain
        self.kernel = ref.kernel
        self.mean_constant = ref.mean_constant
        self.y_scale = ref.y_scale
        self.Xn = ref.inputs_normalized
        self.A = np.column_stack([m.alpha for m in members])
        self.gram_factor = ref.gram_factor
        self.incumbents = incumbents
        # below this the Gaussian is treated as a point mass
        self.sd_floor = 1e-12 * self.y_scale * math.sqrt(self.kernel.signal_variance)
        self._lo = self.domain.lower
        self._inv_span = 1.0 / self.domain.span
        # the local-search path runs tens of thousands of single-point
        # evaluations per session; keep its per-call constants precomputed
        ls = self.kernel.lengthscales
        self._ls = ls
        self._ls2 = ls * ls
        self._Xs = self.Xn / ls
        self._Xd = self.Xn / self._ls2
        self._a = self.A[:, 0] if self.A.shape[1] == 1 else None
        self._inc0 = float(incumbents[0]) if incumbents.size == 1 else None

    def _posterior(self, Xn: np.ndarray):
        """Means per member (m, J) and shared sds (m,) at normalized rows."""
        Kxp = gp.kernel_matrix(self.kernel, self.Xn, Xn)
        means = self.mean_constant + self.y_scale * (Kxp.T @ self.A)
        V = solve_triangular(self.gram_factor, Kxp, lower=True, check_finite=False)
        var = self.kernel.signal_variance - np.einsum("ij,ij->j", V, V)
        sd = self.y_scale * np.sqrt(np.maximum(var, 0.0))
        return means, sd

    def values(self, X: np.ndarray) -> np.ndarray:
        """Batched utility at the rows of X (original units)."""
        Xn = self.domain.normalize(np.atleast_2d(X))
        means, sd = self._posterior(Xn)
        if self.base == "UCB":
            return means.mean(axis=1) + self.spec.beta * sd
        gap = means - self.incumbents[None, :]
        out = np.where(sd[:, None] > self.sd_floor,
                       _ei_kernel(gap, np.maximum(sd, self.sd_floor)[:, None]),
                       np.maximum(gap, 0.0))
        return out.mean(axis=1)

    def value(self, x: np.ndarray) -> float:
        return float(self.values(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def value_and_grad(self, x: np.ndarray):
        """Utility and its gradient wrt x in original units (for local search)."""
        xn = (np.asarray(x, dtype=float) - self._lo) * self._inv_span
        # fused Matern 5/2 vector + Jacobian against precomputed scaled data;
        # the 1/r of the chain rule cancels, so everything is smooth at r = 0
        scaled = xn / self._ls - self._Xs
        r = np.sqrt(np.einsum("ij,ij->i", scaled, scaled))
        e = np.exp(-_SQRT5 * r)
        sv = self.kernel.signal_variance
        k = sv * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * e
        radial = -(5.0 / 3.0) * sv * (1.0 + _SQRT5 * r) * e
        diff = xn / self._ls2 - self._Xd
        w = cho_solve((self.gram_factor, True), k, check_finite=False)
        var = sv - float(k @ w)
        if self._a is not None:
            mu = self.mean_constant + self.y_scale * float(k @ self._a)
            dmu = self.y_scale * (diff.T @ (radial * self._a))
            if var > 0.0:
                sd = self.y_scale * math.sqrt(var)
                dsd = -(self.y_scale / math.sqrt(var)) * (diff.T @ (radial * w))
            else:
                sd, dsd = 0.0, np.zeros_like(xn)
            if self.base == "UCB":
                return mu + self.spec.beta * sd, (dmu + self.spec.beta * dsd) * self._inv_span
            gap = mu - self._inc0
            if sd > self.sd_floor:
                z = gap / sd
                cdf = float(ndtr(z))
                pdf = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
                return max(gap * cdf + sd * pdf, 0.0), (cdf * dmu + pdf * dsd) * self._inv_span
            if gap > 0.0:
                return gap, dmu * self._inv_span
            return 0.0, np.zeros_like(xn)
        J = radial[:, None] * diff
        means = self.mean_constant + self.y_scale * (k @ self.A)
        dmeans = self.y_scale * (J.T @ self.A)
        nmembers = self.A.shape[1]
        if var > 0.0:
            sd = self.y_scale * math.sqrt(var)
            dsd = -(self.y_scale / math.sqrt(var)) * (J.T @ w)
        else:
            sd = 0.0
            dsd = np.zeros_like(xn)
        if self.base == "UCB":
            value = means.mean() + self.spec.beta * sd
            grad = dmeans.mean(axis=1) + self.spec.beta * dsd
            return float(value), grad * self._inv_span
        gap = means - self.incumbents
        if sd > self.sd_floor:
            z = gap / sd
            cdf = ndtr(z)
            pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
            value = float(np.mean(gap * cdf + sd * pdf))
            grad = (dmeans @ cdf + float(pdf.sum()) * dsd) / nmembers
        else:
            improving = gap > 0.0
            value = float(np.mean(np.maximum(gap, 0.0)))
            grad = (dmeans @ improving.astype(float)) / nmembers
        return max(value, 0.0), grad * self._inv_span


def _ei_kernel(gap, sd):
    z = gap / sd
    return np.maximum(gap * ndtr(z) + sd * _INV_SQRT_2PI * np.exp(-0.5 * z * z), 0.0)


def evaluate(spec: AcquisitionSpec, model: gp.GpModel, ensemble: FantasyEnsemble | None, x) -> float:
    """Utility value at a single point."""
    return UtilityEvaluator(spec, model, ensemble).value(np.asarray(x, dtype=float))


_LBFGS_FACTR = 1e-10 / np.finfo(float).eps  # ftol 1e-10 in fmin_l_bfgs_b units


def polish(evaluator: UtilityEvaluator, domain: gp.BoxDomain, x0, start_value=None):
    """One L-BFGS-B ascent from x0; never returns less than the start's value."""
    x0 = np.asarray(x0, dtype=float)
    if start_value is None:
        start_value = evaluator.value(x0)

    def negated(x):
        value, grad = evaluator.value_and_grad(x)
        return -value, -grad

    x, fun, _ = fmin_l_bfgs_b(
        negated,
        x0,
        bounds=list(zip(domain.lower, domain.upper)),
        factr=_LBFGS_FACTR,
        pgtol=1e-10,
        maxiter=200,
    )
    if -fun >= start_value:
        return np.clip(x, domain.lower, domain.upper), float(-fun)
    return x0.copy(), float(start_value)


def maximize(
    spec: AcquisitionSpec,
    model: gp.GpModel,
    ensemble: FantasyEnsemble | None,
    domain: gp.BoxDomain,
    seed: int,
    n_starts: int = 256,
):
    """Global maximization: scrambled-Sobol starts, each polished by L-BFGS-B.

    Returns (argmax, value); ties among polished candidates go to the lowest
    start index.
    """
    evaluator = UtilityEvaluator(spec, model, ensemble)
    sob = qmc.Sobol(d=domain.dim, scramble=True, seed=int(seed))
    m = max(1, int(math.ceil(math.log2(n_starts))))
    starts = domain.denormalize(sob.random_base2(m)[:n_starts])
    start_vals = evaluator.values(starts)
    best_xs = np.empty_like(starts)
    best_vals = np.empty(starts.shape[0])
    for i, x0 in enumerate(starts):
        best_xs[i], best_vals[i] = polish(evaluator, domain, x0, start_value=start_vals[i])
    winner = int(np.argmax(best_vals))
    return best_xs[winner].copy(), float(best_vals[winner])
