"""Gaussian process regression with a Matern 5/2 kernel.

All internal math runs on inputs normalized to the unit cube and outputs
standardized by their sample mean/spread, so lengthscales and signal
variances are comparable across problems.  Public quantities (predictions,
samples, noise variance) are always in original units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import fmin_l_bfgs_b
from scipy.spatial.distance import cdist

from .errors import EmptyDataset, SingularGram

_SQRT5 = math.sqrt(5.0)

LENGTHSCALE_BOUNDS = (1e-3, 10.0)
SIGNAL_VARIANCE_BOUNDS = (1e-4, 1e3)
NOISE_VARIANCE_BOUNDS = (1e-8, 1.0)

_JITTER_START = 1e-10  # times signal variance
_JITTER_CEIL = 1e-4    # times signal variance


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of valid inputs."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lower/upper must be 1-D vectors of equal length >= 1")
        if not np.all(hi > lo):
            raise ValueError("upper must exceed lower in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def denormalize(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.span

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "BoxDomain":
        return cls(np.asarray(d["lower"], float), np.asarray(d["upper"], float))


@dataclass(frozen=True)
class Dataset:
    """Paired observations: an (n, d) input matrix and an n-vector of outputs."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.outputs, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise ValueError("inputs and outputs disagree on row count")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)

    @property
    def n(self) -> int:
        return self.outputs.size

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def appended(self, x, y: float) -> "Dataset":
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.inputs, x]), np.append(self.outputs, y))


@dataclass(frozen=True)
class KernelParams:
    """Matern 5/2 hyperparameters: per-dimension lengthscales on the unit cube."""

    lengthscales: np.ndarray
    signal_variance: float
    family: str = field(default="matern52")

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float).ravel()
        if np.any(ls <= 0) or self.signal_variance <= 0:
            raise ValueError("lengthscales and signal variance must be positive")
        object.__setattr__(self, "lengthscales", ls)

    @classmethod
    def isotropic(cls, dim: int, lengthscale: float, signal_variance: float = 1.0) -> "KernelParams":
        return cls(np.full(dim, float(lengthscale)), float(signal_variance))


@dataclass(frozen=True)
class Prediction:
    """Posterior mean and (nonnegative) variance at one input."""

    mean: float
    variance: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def _matern52_of_r(r):
    """Unit-variance Matern 5/2 profile as a function of scaled distance."""
    return (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-_SQRT5 * r)


def matern52(a, b, params: KernelParams) -> float:
    """Kernel value between two points (coordinates already on the model scale)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    r = math.sqrt(float(np.sum(((a - b) / params.lengthscales) ** 2)))
    return params.signal_variance * float(_matern52_of_r(r))


def kernel_matrix(params: KernelParams, A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Cross-covariance matrix K(A, B); K(A, A) when B is omitted."""
    As = np.atleast_2d(A) / params.lengthscales
    Bs = As if B is None else np.atleast_2d(B) / params.lengthscales
    return params.signal_variance * _matern52_of_r(cdist(As, Bs))


def kernel_vector_and_grad(params: KernelParams, x: np.ndarray, X: np.ndarray):
    """k(x, X) together with its Jacobian d k_i / d x_j, shape (n, d).

    The radial derivative is -(5/3) sv r (1 + sqrt5 r) exp(-sqrt5 r); the
    1/r from the chain rule cancels, so the result is smooth at r = 0.
    """
    ls = params.lengthscales
    scaled = (x[None, :] - X) / ls
    diff = scaled / ls
    r = np.sqrt(np.einsum("ij,ij->i", scaled, scaled))
    e = np.exp(-_SQRT5 * r)
    k = params.signal_variance * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * e
    radial = -(5.0 / 3.0) * params.signal_variance * (1.0 + _SQRT5 * r) * e
    return k, radial[:, None] * diff


def _chol_with_jitter(M: np.ndarray, signal_variance: float):
    """Lower Cholesky factor; tries the matrix as-is, then escalating jitter."""
    ceil = _JITTER_CEIL * signal_variance
    eye = np.eye(M.shape[0])
    jitter = 0.0
    while True:
        try:
            return cholesky(M + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            pass
        jitter = _JITTER_START * signal_variance if jitter == 0.0 else jitter * 10.0
        if jitter > ceil * (1.0 + 1e-12):
            raise SingularGram(f"Cholesky failed up to jitter {ceil:g}")


@dataclass(frozen=True, eq=False)
class GpModel:
    """Fitted Gaussian process; immutable, safe to share across workers.

    ``gram_factor`` and ``alpha`` live on the internal (normalized-input,
    standardized-output) scale; ``mean_constant`` and ``noise_variance``
    are in original units.
    """

    kernel: KernelParams
    mean_constant: float
    noise_variance: float
    data: Dataset
    domain: BoxDomain
    gram_factor: np.ndarray
    alpha: np.ndarray
    inputs_normalized: np.ndarray
    y_scale: float
    jitter: float
    train_means: np.ndarray

    def predict_batch(self, X: np.ndarray, clip_variance: bool = True):
        """Posterior means and variances at the rows of X (original units)."""
        Xn = self.domain.normalize(np.atleast_2d(X))
        Kxp = kernel_matrix(self.kernel, self.inputs_normalized, Xn)
        mu = self.mean_constant + self.y_scale * (Kxp.T @ self.alpha)
        V = solve_triangular(self.gram_factor, Kxp, lower=True)
        var = self.kernel.signal_variance - np.einsum("ij,ij->j", V, V)
        var = var * (self.y_scale * self.y_scale)
        if clip_variance:
            var = np.maximum(var, 0.0)
        return mu, var

    def predict(self, x) -> Prediction:
        mu, var = self.predict_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return Prediction(float(mu[0]), float(var[0]))

    def mean_with_gradient(self, x: np.ndarray):
        """Posterior mean and its gradient wrt x in original units."""
        xn = self.domain.normalize(np.asarray(x, dtype=float))
        k, J = kernel_vector_and_grad(self.kernel, xn, self.inputs_normalized)
        mu = self.mean_constant + self.y_scale * float(k @ self.alpha)
        dmu = self.y_scale * (J.T @ self.alpha) / self.domain.span
        return mu, dmu

    def sample_at(self, points: np.ndarray, seed: int) -> np.ndarray:
        """Exact joint posterior draw at the given points, deterministic per seed."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        Pn = self.domain.normalize(P)
        Kxp = kernel_matrix(self.kernel, self.inputs_normalized, Pn)
        mu = Kxp.T @ self.alpha
        V = solve_triangular(self.gram_factor, Kxp, lower=True)
        cov = kernel_matrix(self.kernel, Pn) - V.T @ V
        # Degenerate directions (points coinciding with noiseless training
        # inputs) must stay degenerate, so take a symmetric eigendecomposition
        # root with negative round-off clipped instead of a jittered Cholesky.
        evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
        root = evecs * np.sqrt(np.clip(evals, 0.0, None))
        z = np.random.default_rng(np.random.SeedSequence(seed)).standard_normal(P.shape[0])
        return self.mean_constant + self.y_scale * (mu + root @ z)


def build(
    data: Dataset,
    domain: BoxDomain,
    kernel: KernelParams,
    mean_constant: float | None = None,
    noise_variance: float = 0.0,
    y_scale: float = 1.0,
) -> GpModel:
    """Assemble a model around fixed hyperparameters (no optimization)."""
    if data.n == 0:
        raise EmptyDataset("cannot build a model on an empty dataset")
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    if mean_constant is None:
        mean_constant = float(np.mean(data.outputs))
    Xn = domain.normalize(data.inputs)
    K = kernel_matrix(kernel, Xn)
    nv_internal = noise_variance / (y_scale * y_scale)
    L, jitter = _chol_with_jitter(K + nv_internal * np.eye(data.n), kernel.signal_variance)
    z = (data.outputs - mean_constant) / y_scale
    alpha = solve_triangular(L.T, solve_triangular(L, z, lower=True), lower=False)
    train_means = mean_constant + y_scale * (K @ alpha)
    return GpModel(
        kernel=kernel,
        mean_constant=mean_constant,
        noise_variance=noise_variance,
        data=data,
        domain=domain,
        gram_factor=L,
        alpha=alpha,
        inputs_normalized=Xn,
        y_scale=y_scale,
        jitter=jitter,
        train_means=train_means,
    )


def _neg_mll_and_grad(theta, Xn, z, sqdists, fixed_noise: float | None):
    """Negative log marginal likelihood and gradient wrt log-parameters.

    theta = [log lengthscales (d), log signal variance, (log noise variance)].
    sqdists is the (d, n, n) stack of per-dimension squared coordinate gaps.
    """
    d = Xn.shape[1]
    n = Xn.shape[0]
    ls = np.exp(theta[:d])
    sv = np.exp(theta[d])
    nv = np.exp(theta[d + 1]) if fixed_noise is None else fixed_noise

    r2 = np.tensordot(1.0 / (ls * ls), sqdists, axes=1)
    r = np.sqrt(np.maximum(r2, 0.0))
    e = np.exp(-_SQRT5 * r)
    K = sv * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * e
    G = K + (nv + _JITTER_START * sv) * np.eye(n)
    try:
        L = cholesky(G, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)

    alpha = solve_triangular(L.T, solve_triangular(L, z, lower=True), lower=False)
    nll = 0.5 * float(z @ alpha) + float(np.sum(np.log(np.diag(L)))) + 0.5 * n * math.log(2 * math.pi)

    Linv = solve_triangular(L, np.eye(n), lower=True)
    Ginv = Linv.T @ Linv
    W = np.outer(alpha, alpha) - Ginv  # dMLL/dG = W/2

    grad = np.zeros_like(theta)
    base = sv * (5.0 / 3.0) * (1.0 + _SQRT5 * r) * e
    for j in range(d):
        dK = base * (sqdists[j] / (ls[j] * ls[j]))
        grad[j] = -0.5 * float(np.sum(W * dK))
    grad[d] = -0.5 * float(np.sum(W * K))
    if fixed_noise is None:
        grad[d + 1] = -0.5 * nv * float(np.trace(W))
    return nll, grad


def fit(
    data: Dataset,
    domain: BoxDomain,
    noise: float | str = "learned",
    seed: int = 0,
    restarts: int = 8,
    init_lengthscale: float = 0.2,
) -> GpModel:
    """Fit hyperparameters by multi-start maximization of log marginal likelihood.

    ``noise`` is either the literal string "learned" or a fixed observation
    variance in original output units.  Deterministic for a given seed: the
    first start is the isotropic default, the rest are seeded log-uniform
    draws within the bounds.
    """
    if data.n == 0:
        raise EmptyDataset("cannot fit a model on an empty dataset")
    d = data.dim
    ybar = float(np.mean(data.outputs))
    spread = float(np.std(data.outputs))
    y_scale = spread if spread > 1e-12 else 1.0

    Xn = domain.normalize(data.inputs)
    z = (data.outputs - ybar) / y_scale
    diffs = Xn[:, None, :] - Xn[None, :, :]
    sqdists = np.transpose(diffs * diffs, (2, 0, 1)).copy()

    learned = noise == "learned"
    fixed_noise = None if learned else float(noise) / (y_scale * y_scale)
    if fixed_noise is not None and fixed_noise < 0:
        raise ValueError("fixed noise variance must be nonnegative")

    log_bounds = [(math.log(LENGTHSCALE_BOUNDS[0]), math.log(LENGTHSCALE_BOUNDS[1]))] * d
    log_bounds += [(math.log(SIGNAL_VARIANCE_BOUNDS[0]), math.log(SIGNAL_VARIANCE_BOUNDS[1]))]
    if learned:
        log_bounds += [(math.log(NOISE_VARIANCE_BOUNDS[0]), math.log(NOISE_VARIANCE_BOUNDS[1]))]
    lo = np.array([b[0] for b in log_bounds])
    hi = np.array([b[1] for b in log_bounds])

    init0 = np.concatenate([
        np.full(d, math.log(min(max(init_lengthscale, LENGTHSCALE_BOUNDS[0]), LENGTHSCALE_BOUNDS[1]))),
        [0.0],
        [math.log(1e-2)] if learned else [],
    ])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    starts = [init0] + [rng.uniform(lo, hi) for _ in range(max(restarts, 1) - 1)]

    best_theta, best_fun = None, np.inf
    factr = 1e-9 / np.finfo(float).eps
    for theta0 in starts:
        x, fun, _ = fmin_l_bfgs_b(
            _neg_mll_and_grad,
            theta0,
            args=(Xn, z, sqdists, fixed_noise),
            bounds=log_bounds,
            factr=factr,
            pgtol=1e-6,
            maxiter=200,
        )
        if fun < best_fun:
            best_theta, best_fun = x, fun

    theta = best_theta
    kernel = KernelParams(np.exp(theta[:d]), float(np.exp(theta[d])))
    nv_internal = float(np.exp(theta[d + 1])) if learned else fixed_noise
    return build(
        data,
        domain,
        kernel,
        mean_constant=ybar,
        noise_variance=nv_internal * y_scale * y_scale,
        y_scale=y_scale,
    )
