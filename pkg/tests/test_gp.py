"""Gaussian process core: kernel, fit, prediction, posterior sampling."""
import math

import numpy as np
import pytest

from cobopt import gp
from cobopt.errors import EmptyDataset, SingularGram

SQRT5 = math.sqrt(5.0)


def unit_domain(d=1):
    return gp.BoxDomain(np.zeros(d), np.ones(d))


def oracle_predict(model, x):
    """Dense explicit-inverse posterior, pure-python kernel evaluation.

    Independent of the production path (which uses cdist + Cholesky solves)
    but shares the model's Gram matrix including its jitter.
    """
    dom = model.domain
    ls = model.kernel.lengthscales
    sv = model.kernel.signal_variance

    def k(a, b):
        r = math.sqrt(sum(((ai - bi) / li) ** 2 for ai, bi, li in zip(a, b, ls)))
        return sv * (1 + SQRT5 * r + 5 * r * r / 3) * math.exp(-SQRT5 * r)

    Xn = dom.normalize(model.data.inputs)
    xn = dom.normalize(np.asarray(x, dtype=float))
    n = model.data.n
    K = np.array([[k(Xn[i], Xn[j]) for j in range(n)] for i in range(n)])
    nv_int = model.noise_variance / model.y_scale**2
    G = K + (nv_int + model.jitter) * np.eye(n)
    Ginv = np.linalg.inv(G)
    kv = np.array([k(xn, Xn[i]) for i in range(n)])
    z = (model.data.outputs - model.mean_constant) / model.y_scale
    mu = model.mean_constant + model.y_scale * float(kv @ Ginv @ z)
    var = (sv - float(kv @ Ginv @ kv)) * model.y_scale**2
    return mu, var


class TestMatern52:
    def test_same_point_returns_signal_variance(self):
        params = gp.KernelParams.isotropic(3, 0.7, signal_variance=2.5)
        a = np.array([0.1, 0.2, 0.3])
        assert gp.matern52(a, a, params) == pytest.approx(2.5, abs=1e-15)

    def test_monotone_decay_in_distance(self):
        params = gp.KernelParams.isotropic(1, 1.0)
        vals = [gp.matern52([0.0], [b], params) for b in np.linspace(0, 50, 200)]
        assert all(v1 >= v2 for v1, v2 in zip(vals, vals[1:]))
        assert vals[-1] < 1e-12

    def test_unit_distance_reference_value(self):
        # frozen from a 30-digit mpmath evaluation of the closed form
        params = gp.KernelParams.isotropic(1, 1.0)
        assert gp.matern52([0.0], [1.0], params) == pytest.approx(0.52399410883182031, abs=1e-12)

    def test_symmetry(self):
        params = gp.KernelParams(np.array([0.3, 1.1]), 1.7)
        a, b = np.array([0.1, 0.9]), np.array([0.7, 0.2])
        assert gp.matern52(a, b, params) == pytest.approx(gp.matern52(b, a, params), abs=0)

    def test_kernel_matrix_matches_scalar(self):
        params = gp.KernelParams(np.array([0.4, 2.0]), 0.9)
        rng = np.random.default_rng(1)
        A = rng.uniform(size=(4, 2))
        B = rng.uniform(size=(3, 2))
        K = gp.kernel_matrix(params, A, B)
        for i in range(4):
            for j in range(3):
                assert K[i, j] == pytest.approx(gp.matern52(A[i], B[j], params), rel=1e-12)


class TestFit:
    def test_single_noiseless_point_interpolates_exactly(self):
        data = gp.Dataset(np.array([[0.5]]), np.array([2.0]))
        model = gp.fit(data, unit_domain(), noise=0.0, seed=0)
        assert model.predict([0.5]).mean == 2.0

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            gp.fit(gp.Dataset(np.zeros((0, 1)), np.zeros(0)), unit_domain())

    def test_duplicate_row_jitter_rescued_or_singular(self):
        X = np.array([[0.2], [0.2], [0.8]])
        y = np.array([1.0, 1.0, -1.0])
        data = gp.Dataset(X, y)
        try:
            model = gp.fit(data, unit_domain(), noise=0.0, seed=0)
        except SingularGram:
            return
        assert model.predict([0.2]).mean == pytest.approx(1.0, abs=1e-4)

    def test_fixed_hyperparameters_match_dense_oracle(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(size=(5, 1))
        y = rng.normal(size=5)
        kernel = gp.KernelParams.isotropic(1, 0.3, 1.4)
        model = gp.build(gp.Dataset(X, y), unit_domain(), kernel, noise_variance=0.01)
        for x in np.linspace(0, 1, 20):
            mu, var = oracle_predict(model, [x])
            pred = model.predict([x])
            assert pred.mean == pytest.approx(mu, abs=1e-8)
            assert pred.variance == pytest.approx(max(var, 0.0), abs=1e-8)

    def test_fit_is_deterministic(self):
        rng = np.random.default_rng(3)
        data = gp.Dataset(rng.uniform(size=(6, 2)), rng.normal(size=6))
        dom = unit_domain(2)
        m1 = gp.fit(data, dom, seed=11)
        m2 = gp.fit(data, dom, seed=11)
        assert np.array_equal(m1.kernel.lengthscales, m2.kernel.lengthscales)
        assert m1.kernel.signal_variance == m2.kernel.signal_variance
        assert m1.noise_variance == m2.noise_variance

    def test_hyperparameters_respect_bounds(self):
        rng = np.random.default_rng(4)
        data = gp.Dataset(rng.uniform(size=(10, 2)), rng.normal(size=10))
        model = gp.fit(data, unit_domain(2), seed=0)
        lo, hi = gp.LENGTHSCALE_BOUNDS
        assert np.all(model.kernel.lengthscales >= lo) and np.all(model.kernel.lengthscales <= hi)
        svlo, svhi = gp.SIGNAL_VARIANCE_BOUNDS
        assert svlo <= model.kernel.signal_variance <= svhi


class TestPredict:
    def test_noiseless_training_point_has_tiny_variance(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(6, 1))
        y = np.sin(3 * X).ravel()
        model = gp.build(gp.Dataset(X, y), unit_domain(), gp.KernelParams.isotropic(1, 0.3))
        for i in range(6):
            assert model.predict(X[i]).variance <= 1e-10

    def test_far_from_data_reverts_to_prior(self):
        dom = gp.BoxDomain(np.array([0.0]), np.array([100.0]))
        data = gp.Dataset(np.array([[0.5]]), np.array([3.0]))
        kernel = gp.KernelParams.isotropic(1, 0.01, 2.0)  # 0.01 on the unit cube = 1.0 in domain units
        model = gp.build(data, dom, kernel, mean_constant=1.5)
        pred = model.predict([95.0])  # ~94 lengthscales away
        assert pred.mean == pytest.approx(1.5, abs=1e-6)
        assert pred.variance == pytest.approx(2.0, abs=1e-6)

    def test_symmetric_dataset_symmetric_predictions(self):
        data = gp.Dataset(np.array([[0.2], [0.8]]), np.array([1.0, 1.0]))
        model = gp.build(data, unit_domain(), gp.KernelParams.isotropic(1, 0.25))
        for delta in [0.01, 0.05, 0.013, 0.2]:
            a = model.predict([0.2 + delta])
            b = model.predict([0.8 - delta])
            assert a.mean == pytest.approx(b.mean, abs=1e-10)
            assert a.variance == pytest.approx(b.variance, abs=1e-10)

    def test_interpolation_is_idempotent(self):
        rng = np.random.default_rng(5)
        data = gp.Dataset(rng.uniform(size=(4, 1)), rng.normal(size=4))
        kernel = gp.KernelParams.isotropic(1, 0.4)
        grown = data.appended([0.33], 0.77)
        model = gp.build(grown, unit_domain(), kernel)
        assert model.predict([0.33]).mean == pytest.approx(0.77, abs=1e-6)

    def test_variance_never_negative_and_preclip_bounded(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(40, 2))
        y = rng.normal(size=40)
        model = gp.build(gp.Dataset(X, y), unit_domain(2), gp.KernelParams.isotropic(2, 0.5))
        probes = rng.uniform(size=(200, 2))
        _, var = model.predict_batch(probes)
        assert np.all(var >= 0.0)
        _, raw = model.predict_batch(probes, clip_variance=False)
        assert np.all(raw >= -1e-8 * model.kernel.signal_variance)

    def test_dense_oracle_equivalence_random_datasets(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            n = int(rng.integers(2, 51))
            d = int(rng.integers(1, 6))
            X = rng.uniform(size=(n, d))
            y = rng.normal(size=n)
            kernel = gp.KernelParams(rng.uniform(0.2, 2.0, size=d), float(rng.uniform(0.5, 2.0)))
            model = gp.build(gp.Dataset(X, y), unit_domain(d), kernel, noise_variance=float(rng.uniform(1e-4, 0.1)))
            for x in rng.uniform(size=(5, d)):
                mu, var = oracle_predict(model, x)
                pred = model.predict(x)
                assert pred.mean == pytest.approx(mu, abs=1e-8)
                assert pred.variance == pytest.approx(max(var, 0.0), abs=1e-8)


class TestSampleAt:
    def make_model(self):
        X = np.array([[0.1], [0.5], [0.9]])
        y = np.array([0.0, 1.0, -0.5])
        return gp.build(gp.Dataset(X, y), unit_domain(), gp.KernelParams.isotropic(1, 0.3))

    def test_training_point_returns_observation(self):
        model = self.make_model()
        val = model.sample_at(np.array([[0.5]]), seed=123)
        assert val[0] == pytest.approx(1.0, abs=1e-5)

    def test_deterministic_given_seed(self):
        model = self.make_model()
        pts = np.linspace(0, 1, 7).reshape(-1, 1)
        assert np.array_equal(model.sample_at(pts, seed=5), model.sample_at(pts, seed=5))
        assert not np.array_equal(model.sample_at(pts, seed=5), model.sample_at(pts, seed=6))

    def test_moments_match_predict(self):
        model = gp.build(
            gp.Dataset(np.array([[0.2], [0.7]]), np.array([1.0, 2.0])),
            unit_domain(),
            gp.KernelParams.isotropic(1, 0.3),
            noise_variance=0.05,
        )
        x = np.array([[0.45]])
        pred = model.predict([0.45])
        draws = np.array([model.sample_at(x, seed=s)[0] for s in range(10_000)])
        se_mean = pred.sd / math.sqrt(draws.size)
        assert abs(draws.mean() - pred.mean) < 3 * se_mean
        se_var = pred.variance * math.sqrt(2.0 / (draws.size - 1))
        assert abs(draws.var() - pred.variance) < 3 * se_var
