import json
import math

import numpy as np
import pytest

from cobopt import acquisition as acq, alternatives as alt, gp, moo, objectives as ob


def matern_entry(a, b, ls, sv):
    # Independent scalar kernel for the determinant oracle.
    r = math.sqrt(sum(((ai - bi) / ls) ** 2 for ai, bi in zip(a, b)))
    return sv * (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r)


def det3_cofactor(K):
    a, b, c = K[0]
    d, e, f = K[1]
    g, h, i = K[2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@pytest.fixture(scope="module")
def demo():
    # 1D smooth objective, lengthscale 0.5, five observations.
    obj = ob.sample_gp_objective(1, 0.5, seed=2)
    rng = np.random.default_rng(0)
    X = np.sort(rng.uniform(0.0, 1.0, size=(5, 1)), axis=0)
    model = gp.fit(gp.Dataset(X, obj.evaluate_batch(X)), obj.domain, noise=0.0, seed=0)
    return obj, model


@pytest.fixture(scope="module")
def demo_set(demo):
    obj, model = demo
    spec = acq.AcquisitionSpec(kind="EI")
    return alt.propose(model, None, spec, obj.domain, p=4, moo_config=moo.MooConfig(), seed=5)


class TestBatchUtility:
    def test_identical_rows_scale_linearly(self, demo):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        row = np.array([0.37])
        single = acq.evaluate(spec, model, None, row)
        total = alt.batch_utility(np.tile(row, (3, 1)), spec, model)
        assert total == pytest.approx(3 * single, abs=1e-15)

    def test_single_row_equals_pointwise(self, demo):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        row = np.array([[0.81]])
        assert alt.batch_utility(row, spec, model) == pytest.approx(
            acq.evaluate(spec, model, None, row[0]), abs=1e-15
        )

    def test_sum_matches_independent_evaluations(self, demo):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        X = np.array([[0.12], [0.55], [0.93]])
        total = alt.batch_utility(X, spec, model)
        parts = sum(acq.evaluate(spec, model, None, x) for x in X)
        assert abs(total - parts) <= 1e-12

    def test_noisy_base_uses_ensemble(self, demo):
        obj, model = demo
        noisy = gp.fit(model.data, obj.domain, noise=1e-4 * obj.range_estimate**2, seed=0)
        spec = acq.AcquisitionSpec(kind="NoisyEI", n_fantasies=4)
        ens = acq.build_fantasies(noisy, spec, seed=3)
        X = np.array([[0.2], [0.7]])
        total = alt.batch_utility(X, spec, noisy, ens)
        parts = sum(acq.evaluate(spec, noisy, ens, x) for x in X)
        assert abs(total - parts) <= 1e-12


class TestBatchVariability:
    def test_duplicate_of_star_gives_zero(self):
        kern = gp.KernelParams.isotropic(2, 0.3)
        x = np.array([0.4, 0.6])
        det, log_det = alt.batch_variability(x[None, :], x, kern)
        assert det == 0.0 and log_det == -np.inf

    def test_distant_pair_det_approaches_one(self):
        kern = gp.KernelParams.isotropic(2, 0.3)
        det, _ = alt.batch_variability(np.array([[50.0, 50.0]]), np.zeros(2), kern)
        assert abs(det - 1.0) < 1e-8

    def test_three_point_cofactor_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            pts = rng.uniform(0.0, 1.0, size=(3, 2))
            ls, sv = 0.25, 1.7
            kern = gp.KernelParams.isotropic(2, ls, sv)
            K = [[matern_entry(pts[i], pts[j], ls, sv) for j in range(3)] for i in range(3)]
            expected = det3_cofactor(K)
            det, log_det = alt.batch_variability(pts[:2], pts[2], kern)
            assert abs(det - expected) <= 1e-10
            assert log_det == pytest.approx(math.log(expected), abs=1e-8)

    def test_empty_alternatives_reduce_to_signal_variance(self):
        kern = gp.KernelParams.isotropic(2, 0.3, 2.5)
        det, _ = alt.batch_variability(np.empty((0, 2)), np.zeros(2), kern)
        assert det == pytest.approx(2.5, abs=1e-12)

    def test_batched_log_det_matches_pairwise_route(self):
        rng = np.random.default_rng(4)
        kern = gp.KernelParams.isotropic(2, 0.3, 1.3)
        stack = rng.uniform(0.0, 1.0, size=(6, 3, 2))
        got = alt._batched_log_det(stack, kern)
        for m in range(6):
            _, expected = alt.batch_variability(stack[m, :2], stack[m, 2], kern)
            assert abs(got[m] - expected) <= 1e-10

    def test_batched_log_det_flags_duplicates(self):
        kern = gp.KernelParams.isotropic(1, 0.3)
        stack = np.array([[[0.2], [0.2], [0.8]]])
        got = alt._batched_log_det(stack, kern)
        assert got[0] <= -1e17


class TestProposeSinglePoint:
    def test_reduces_to_plain_maximization(self, demo):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        aset = alt.propose(model, None, spec, obj.domain, p=1, moo_config=moo.MooConfig(), seed=5)
        x_star, u_star = acq.maximize(spec, model, None, obj.domain, seed=5)
        assert aset.p == 1
        assert aset.pareto_snapshot is None
        only = aset.candidates[0]
        assert only.is_utility_optimum
        np.testing.assert_array_equal(only.point, x_star)
        assert only.utility == u_star


class TestProposeDemo:
    def test_four_candidates_star_last(self, demo_set):
        assert demo_set.p == 4
        assert demo_set.candidates[-1].is_utility_optimum
        assert sum(c.is_utility_optimum for c in demo_set.candidates) == 1

    def test_star_has_max_utility(self, demo_set):
        star = demo_set.candidates[-1]
        for c in demo_set.candidates[:-1]:
            assert star.utility >= c.utility - 1e-9

    def test_pairwise_distance_exceeds_resolution(self, demo_set):
        P = demo_set.points()
        dists = [
            np.linalg.norm(P[i] - P[j])
            for i in range(len(P))
            for j in range(i + 1, len(P))
        ]
        assert min(dists) > 1e-3  # domain width is 1

    def test_knee_batch_is_archive_member(self, demo_set):
        flat = np.concatenate([c.point for c in demo_set.candidates[:-1]])
        hits = [e for e in demo_set.pareto_snapshot.entries if np.array_equal(e.decision, flat)]
        assert len(hits) == 1
        assert np.isfinite(hits[0].objectives[1])

    def test_front_trades_monotonically(self, demo_set):
        F = demo_set.pareto_snapshot.objective_matrix()
        order = np.argsort(F[:, 0], kind="stable")
        assert np.all(np.diff(F[order, 1]) <= 0)

    def test_knee_bounded_by_extremes(self, demo_set):
        star = demo_set.candidates[-1]
        flat = np.concatenate([c.point for c in demo_set.candidates[:-1]])
        knee = next(e for e in demo_set.pareto_snapshot.entries if np.array_equal(e.decision, flat))
        assert knee.objectives[0] <= 3 * star.utility + 1e-9
        finite = [e.objectives[1] for e in demo_set.pareto_snapshot.entries if np.isfinite(e.objectives[1])]
        assert knee.objectives[1] <= max(finite) + 1e-12

    def test_tiled_star_seed_survives_in_archive(self, demo_set):
        star = demo_set.candidates[-1].point
        tiled = np.tile(star, 3)
        hits = [e for e in demo_set.pareto_snapshot.entries if np.array_equal(e.decision, tiled)]
        assert len(hits) == 1
        assert hits[0].objectives[1] <= -1e17

    def test_predicted_stats_come_from_model(self, demo, demo_set):
        obj, model = demo
        for c in demo_set.candidates:
            pred = model.predict(c.point)
            assert c.predicted_mean == pytest.approx(pred.mean, abs=1e-12)
            assert c.predicted_sd == pytest.approx(pred.sd, abs=1e-12)

    def test_deterministic_per_seed(self, demo, demo_set):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        again = alt.propose(model, None, spec, obj.domain, p=4, moo_config=moo.MooConfig(), seed=5)
        for a, b in zip(demo_set.candidates, again.candidates):
            np.testing.assert_array_equal(a.point, b.point)
            assert a.utility == b.utility
        assert len(again.pareto_snapshot.entries) == len(demo_set.pareto_snapshot.entries)

    def test_seed_changes_alternatives(self, demo, demo_set):
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        other = alt.propose(model, None, spec, obj.domain, p=4, moo_config=moo.MooConfig(), seed=6)
        assert not np.array_equal(other.points()[:-1], demo_set.points()[:-1])

    def test_round_trips_through_json(self, demo_set):
        payload = json.dumps(demo_set.to_dict(), sort_keys=True)
        back = alt.AlternativeSet.from_dict(json.loads(payload))
        assert json.dumps(back.to_dict(), sort_keys=True) == payload
        for a, b in zip(demo_set.candidates, back.candidates):
            np.testing.assert_array_equal(a.point, b.point)

    def test_rows_repaired_when_search_returns_suboptimal_star(self, demo, monkeypatch):
        # Force the star onto a mediocre point.  The evolutionary search will
        # find rows with better utility; those rows must be repaired while the
        # star itself stays exactly where the single-objective search put it.
        obj, model = demo
        spec = acq.AcquisitionSpec(kind="EI")
        ev = acq.UtilityEvaluator(spec, model)
        x_weak = np.array([0.31])
        u_weak = float(ev.value(x_weak))
        true_star = acq.maximize(spec, model, None, obj.domain, seed=5)
        assert true_star[1] > u_weak + 1e-6

        monkeypatch.setattr(alt.acquisition, "maximize", lambda *a, **k: (x_weak, u_weak))
        aset = alt.propose(model, None, spec, obj.domain, p=4, moo_config=moo.MooConfig(), seed=5)
        star = aset.candidates[-1]
        np.testing.assert_array_equal(star.point, x_weak)
        assert star.utility == u_weak
        for c in aset.candidates[:-1]:
            assert c.utility <= u_weak + 1e-9


class TestAlternativeSetValidation:
    def cand(self, x, util, star=False):
        return alt.Candidate(np.atleast_1d(x), util, 0.0, 1.0, star)

    def test_requires_exactly_one_flag(self):
        with pytest.raises(ValueError):
            alt.AlternativeSet((self.cand(0.1, 1.0), self.cand(0.2, 0.5)), None, 0)
        with pytest.raises(ValueError):
            alt.AlternativeSet(
                (self.cand(0.1, 1.0, star=True), self.cand(0.2, 0.5, star=True)), None, 0
            )

    def test_star_must_be_last(self):
        with pytest.raises(ValueError):
            alt.AlternativeSet((self.cand(0.1, 1.0, star=True), self.cand(0.2, 0.5)), None, 0)

    def test_star_must_have_max_utility(self):
        with pytest.raises(ValueError):
            alt.AlternativeSet((self.cand(0.1, 2.0), self.cand(0.2, 0.5, star=True)), None, 0)

    def test_rejects_duplicate_points(self):
        with pytest.raises(ValueError):
            alt.AlternativeSet((self.cand(0.2, 0.5), self.cand(0.2, 1.0, star=True)), None, 0)

    def test_rejects_negative_sd(self):
        with pytest.raises(ValueError):
            alt.Candidate(np.array([0.1]), 1.0, 0.0, -0.5, True)
