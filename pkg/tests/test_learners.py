"""Update rules: frozen hand-worked cases per algorithm plus shared invariants."""

import json
import math

import numpy as np
import pytest

from olbench import ALGORITHMS, LearnerConfig, from_json, from_snapshot, make_learner
from olbench.learners import SECOND_ORDER_ALGORITHMS


def learner(name, dim, **kw):
    return make_learner(LearnerConfig(algorithm=name, **kw), dim)


def random_stream(rng, dim, n):
    """Augmented-style inputs (trailing 1) with random labels."""
    xs = rng.normal(0.0, 1.0, (n, dim))
    xs[:, -1] = 1.0
    ys = rng.choice([-1, 1], size=n)
    return xs, ys


class TestConfig:
    def test_unknown_algorithm_lists_names(self):
        with pytest.raises(ValueError, match="perceptron"):
            LearnerConfig(algorithm="nope")

    @pytest.mark.parametrize("field,value", [
        ("C", 0.0), ("r", -1.0), ("eta", 0.5), ("eta", 1.0), ("alpha", 0.0),
        ("a", 0.0), ("b_bound", 0.0), ("ellip_b", 1.5), ("eta0", 0.0),
    ])
    def test_range_validation(self, field, value):
        with pytest.raises(ValueError):
            LearnerConfig(algorithm="arow", **{field: value})

    def test_case_insensitive(self):
        assert LearnerConfig(algorithm="AROW").algorithm == "arow"


class TestPredict:
    def test_zero_weights_tie_break(self):
        lr = learner("perceptron", 3)
        out = lr.predict(np.array([4.0, -2.0, 1.0]))
        assert out.predicted == 1
        assert out.margin == 0.0
        assert out.updated is False

    def test_dot_product_margin(self):
        lr = learner("perceptron", 3)
        lr.model.w = np.array([1.0, 0.0, -1.0])
        out = lr.predict(np.array([2.0, 0.0, 1.0]))
        assert out.margin == pytest.approx(1.0)
        assert out.predicted == 1

    def test_second_order_margin(self):
        lr = learner("arow", 3)
        lr.model.mu = np.array([0.5, 0.0, 0.5])
        out = lr.predict(np.array([1.0, 0.0, 1.0]))
        assert out.margin == pytest.approx(1.0)

    def test_loss_only_with_label(self):
        lr = learner("pa", 2)
        assert lr.predict(np.array([1.0, 1.0])).loss is None
        assert lr.predict(np.array([1.0, 1.0]), y=1).loss == pytest.approx(1.0)

    def test_non_finite_input_rejected(self):
        lr = learner("pa", 2)
        with pytest.raises(ValueError, match="finite"):
            lr.predict(np.array([np.nan, 1.0]))


class TestPerceptron:
    def test_mistake_update(self):
        lr = learner("perceptron", 3)
        out = lr.update(np.array([1.0, 1.0, 1.0]), -1)
        assert out.updated
        np.testing.assert_array_equal(lr.model.w, [-1.0, -1.0, -1.0])

    def test_correct_sample_untouched(self):
        lr = learner("perceptron", 3)
        lr.model.w = np.array([-1.0, -1.0, -1.0])
        out = lr.update(np.array([1.0, 1.0, 1.0]), -1)
        assert out.margin == pytest.approx(-3.0)
        assert not out.updated
        np.testing.assert_array_equal(lr.model.w, [-1.0, -1.0, -1.0])


class TestSecondOrderPerceptron:
    def test_first_mistake_whitened_weights(self):
        lr = learner("sop", 2, a=1.0)
        lr.update(np.array([1.0, 0.0]), 1)  # zero margin counts as a mistake
        np.testing.assert_allclose(lr.model.sigma, [[0.5, 0.0], [0.0, 1.0]], atol=1e-12)
        np.testing.assert_allclose(lr.model.mu, [1.0, 0.0], atol=1e-12)
        # effective weights sigma @ mu = (0.5, 0)
        assert lr.margin_of(np.array([1.0, 0.0])) == pytest.approx(0.5)

    def test_no_mistakes_predicts_positive(self):
        lr = learner("sop", 3)
        for x in np.random.default_rng(0).normal(size=(10, 3)):
            assert lr.predict(x).predicted == 1

    @pytest.mark.parametrize("ridge", [1.0, 2.0])
    def test_sigma_matches_direct_inverse(self, ridge):
        # Incremental rank-one maintenance equals direct inversion of the
        # ridge Gram built from mistake inputs.
        rng = np.random.default_rng(3)
        lr = learner("sop", 4, a=ridge)
        xs, ys = random_stream(rng, 4, 200)
        mistakes = []
        for x, y in zip(xs, ys):
            if lr.update(x, int(y)).updated:
                mistakes.append(x)
                if len(mistakes) == 10:
                    break
        gram = ridge * np.eye(4) + sum(np.outer(m, m) for m in mistakes)
        np.testing.assert_allclose(lr.model.sigma, np.linalg.inv(gram), atol=1e-9)


class TestPassiveAggressive:
    X = np.array([1.0, 0.0, 1.0])

    def test_pa_closed_form_and_zero_post_loss(self):
        lr = learner("pa", 3)
        out = lr.update(self.X, 1)
        assert out.loss == pytest.approx(1.0)
        np.testing.assert_allclose(lr.model.w, [0.5, 0.0, 0.5], atol=1e-15)
        assert lr.predict(self.X, y=1).loss == pytest.approx(0.0, abs=1e-12)

    def test_pa1_clips_at_c(self):
        lr = learner("pa1", 3, C=0.1)
        lr.update(self.X, 1)
        np.testing.assert_allclose(lr.model.w, [0.1, 0.0, 0.1], atol=1e-15)

    def test_pa2_soft_denominator(self):
        lr = learner("pa2", 3, C=1.0)
        lr.update(self.X, 1)
        np.testing.assert_allclose(lr.model.w, [0.4, 0.0, 0.4], atol=1e-15)

    def test_post_update_loss_never_grows(self):
        rng = np.random.default_rng(8)
        for variant in ("pa1", "pa2"):
            lr = learner(variant, 4, C=0.5)
            xs, ys = random_stream(rng, 4, 300)
            for x, y in zip(xs, ys):
                before = lr.predict(x, y=int(y)).loss
                out = lr.update(x, int(y))
                if out.updated:
                    after = lr.predict(x, y=int(y)).loss
                    assert after <= before + 1e-12


class TestOgd:
    def test_first_step(self):
        lr = learner("ogd", 3, eta0=1.0)
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        np.testing.assert_allclose(lr.model.w, [1.0, 0.0, 1.0], atol=1e-15)

    def test_step_decay_via_snapshot(self):
        lr = learner("ogd", 3, eta0=1.0)
        snap = lr.snapshot()
        snap["step"] = 4
        lr = from_snapshot(snap)
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        np.testing.assert_allclose(lr.model.w, [0.5, 0.0, 0.5], atol=1e-15)

    def test_satisfied_margin_skips(self):
        lr = learner("ogd", 3)
        lr.model.w = np.array([2.0, 0.0, 0.0])
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert not out.updated


class TestAlma:
    def test_first_update_lands_on_unit_sphere(self):
        lr = learner("alma", 3, alpha=0.9)
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert out.updated
        expected = np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0)
        np.testing.assert_allclose(lr.model.w, expected, atol=1e-15)
        assert lr.k == 2.0

    def test_margin_above_threshold_skips(self):
        lr = learner("alma", 3, alpha=0.9)
        x = np.array([1.0, 0.0, 1.0])
        xhat = x / np.linalg.norm(x)
        lr.model.w = 0.5 * xhat  # normalized margin 0.5 > 0.1 * sqrt(2)
        out = lr.update(x, 1)
        assert not out.updated

    def test_weight_norm_stays_bounded(self):
        rng = np.random.default_rng(4)
        lr = learner("alma", 5, alpha=0.7)
        xs, ys = random_stream(rng, 5, 500)
        for x, y in zip(xs, ys):
            lr.update(x, int(y))
            assert np.linalg.norm(lr.model.w) <= 1.0 + 1e-12


class TestRomma:
    def test_closed_form_case(self):
        lr = learner("romma", 2)
        lr.model.w = np.array([1.0, 0.0])
        out = lr.update(np.array([0.0, 1.0]), -1)
        assert out.updated
        np.testing.assert_allclose(lr.model.w, [1.0, -1.0], atol=1e-12)
        assert -1 * float(lr.model.w @ np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_zero_weights_fall_back_to_perceptron(self):
        lr = learner("romma", 3)
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        np.testing.assert_allclose(lr.model.w, [1.0, 0.0, 1.0], atol=1e-15)

    def test_closed_form_makes_constraint_tight(self):
        # One closed-form step from fresh moderate states; long adversarial
        # streams blow up ||w|| and drown the identity in float noise.
        rng = np.random.default_rng(6)
        tight_checked = 0
        for _ in range(400):
            w0 = rng.normal(0.0, 2.0, 4)
            x = rng.normal(0.0, 1.0, 4)
            x[-1] = 1.0
            y = int(rng.choice([-1, 1]))
            ww, xx, wx = float(w0 @ w0), float(x @ x), float(w0 @ x)
            if xx * ww - wx * wx < 1e-3 * xx * ww:
                continue
            lr = learner("romma", 4)
            lr.model.w = w0.copy()
            out = lr.update(x, y)
            if out.updated:
                assert y * float(lr.model.w @ x) == pytest.approx(1.0, abs=1e-9)
                tight_checked += 1
        assert tight_checked > 50

    def test_aromma_fires_on_hinge(self):
        lr = learner("aromma", 2)
        lr.model.w = np.array([0.4, 0.0])
        out = lr.update(np.array([1.0, 0.0]), 1)  # correct but margin < 1
        assert out.updated
        lr2 = learner("romma", 2)
        lr2.model.w = np.array([0.4, 0.0])
        assert not lr2.update(np.array([1.0, 0.0]), 1).updated


class TestArow:
    X = np.array([1.0, 0.0, 1.0])

    def test_hand_worked_update(self):
        lr = learner("arow", 3, r=1.0)
        out = lr.update(self.X, 1)
        assert out.updated
        np.testing.assert_allclose(lr.model.mu, [1 / 3, 0.0, 1 / 3], atol=1e-15)
        expected_sigma = np.array([
            [2 / 3, 0.0, -1 / 3],
            [0.0, 1.0, 0.0],
            [-1 / 3, 0.0, 2 / 3],
        ])
        np.testing.assert_allclose(lr.model.sigma, expected_sigma, atol=1e-15)

    def test_satisfied_margin_keeps_sigma(self):
        lr = learner("arow", 3)
        lr.model.mu = np.array([2.0, 0.0, 0.0])
        before = lr.model.sigma.copy()
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert not out.updated
        np.testing.assert_array_equal(lr.model.sigma, before)

    def test_confidence_shrinks_along_x(self):
        rng = np.random.default_rng(9)
        lr = learner("arow", 4, r=0.7)
        xs, ys = random_stream(rng, 4, 500)
        for x, y in zip(xs, ys):
            v = float(x @ lr.model.sigma @ x)
            out = lr.update(x, int(y))
            if out.updated:
                v_new = float(x @ lr.model.sigma @ x)
                assert v_new == pytest.approx(v * 0.7 / (v + 0.7), abs=1e-9)
                assert v_new < v


class TestNarow:
    def test_bounded_branch(self):
        lr = learner("narow", 3, b_bound=1.0)
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        # v=2 >= 1/b so gamma=2, beta=1/4
        np.testing.assert_allclose(lr.model.mu, [0.25, 0.0, 0.25], atol=1e-15)
        expected_sigma = np.array([
            [0.75, 0.0, -0.25],
            [0.0, 1.0, 0.0],
            [-0.25, 0.0, 0.75],
        ])
        np.testing.assert_allclose(lr.model.sigma, expected_sigma, atol=1e-15)

    def test_unbounded_branch_keeps_sigma(self):
        lr = learner("narow", 3, b_bound=1.0)
        snap = lr.snapshot()
        snap["model"]["sigma"] = (0.25 * np.eye(3)).tolist()
        lr = from_snapshot(snap)
        out = lr.update(np.array([1.0, 0.0, 0.0]), 1)  # v = 0.25 < 1/b
        assert out.updated
        np.testing.assert_array_equal(lr.model.sigma, 0.25 * np.eye(3))
        # bounded fallback mean step: loss/(2v) * sigma x = 1/0.5 * 0.25 e0
        np.testing.assert_allclose(lr.model.mu, [0.5, 0.0, 0.0], atol=1e-15)

    def test_eigenvalues_stay_in_unit_interval(self):
        rng = np.random.default_rng(12)
        lr = learner("narow", 4, b_bound=1.0)
        xs, ys = random_stream(rng, 4, 400)
        for x, y in zip(xs, ys):
            lr.update(x, int(y))
            eig = np.linalg.eigvalsh(lr.model.sigma)
            assert eig.min() > 0.0
            assert eig.max() <= 1.0 + 1e-12


class TestConfidenceWeighted:
    def test_satisfied_constraint_skips(self):
        lr = learner("cw", 3, eta=0.9)
        lr.model.mu = np.array([5.0, 0.0, 5.0])
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert not out.updated

    def test_known_alpha(self):
        # mu=0, sigma=I, eta=0.9, x=(1,0,1): alpha = (-1+sqrt(1+16 phi^2))/(8 phi)
        lr = learner("cw", 3, eta=0.9)
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert out.updated
        alpha = lr.model.mu[0]  # mu = alpha * y * sigma x = alpha * (1,0,1)
        assert alpha == pytest.approx(0.4119, abs=1e-4)

    def test_post_update_variance_constraint_tight(self):
        rng = np.random.default_rng(5)
        phi = 0.6744897501960817  # inverse normal CDF of 0.75
        lr = learner("cw", 4, eta=0.75)
        xs, ys = random_stream(rng, 4, 300)
        for x, y in zip(xs, ys):
            out = lr.update(x, int(y))
            if out.updated:
                m = int(y) * float(lr.model.mu @ x)
                v = float(x @ lr.model.sigma @ x)
                assert m == pytest.approx(phi * v, abs=1e-6)


class TestSoftConfidenceWeighted:
    def test_satisfied_margin_skips(self):
        for variant in ("scw1", "scw2"):
            lr = learner(variant, 3, eta=0.9)
            lr.model.mu = np.array([5.0, 0.0, 5.0])
            assert not lr.update(np.array([1.0, 0.0, 1.0]), 1).updated

    def test_scw1_large_c_limit_is_tight_stdev_constraint(self):
        rng = np.random.default_rng(7)
        phi = 0.6744897501960817
        lr = learner("scw1", 4, eta=0.75, C=1e8)
        xs, ys = random_stream(rng, 4, 300)
        hits = 0
        for x, y in zip(xs, ys):
            out = lr.update(x, int(y))
            if out.updated:
                m = int(y) * float(lr.model.mu @ x)
                v = float(x @ lr.model.sigma @ x)
                assert m == pytest.approx(phi * math.sqrt(v), abs=1e-6)
                hits += 1
        assert hits > 20

    def test_scw1_small_c_clips_alpha(self):
        C = 0.01
        lr = learner("scw1", 3, eta=0.75, C=C)
        lr.model.mu = np.array([-10.0, 0.0, 0.0])  # large confidence hinge
        before = lr.model.mu.copy()
        sx = lr.model.sigma @ np.array([1.0, 0.0, 1.0])
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        alpha = (lr.model.mu - before)[0] / sx[0]
        assert alpha == pytest.approx(C, abs=1e-12)


class TestNherd:
    def test_hand_worked_update(self):
        lr = learner("nherd", 3, C=1.0)
        lr.update(np.array([1.0, 0.0, 1.0]), 1)
        np.testing.assert_allclose(lr.model.mu, [1 / 3, 0.0, 1 / 3], atol=1e-15)
        expected_sigma = np.array([
            [5 / 9, 0.0, -4 / 9],
            [0.0, 1.0, 0.0],
            [-4 / 9, 0.0, 5 / 9],
        ])
        np.testing.assert_allclose(lr.model.sigma, expected_sigma, atol=1e-15)

    def test_zero_loss_no_change(self):
        lr = learner("nherd", 3)
        lr.model.mu = np.array([2.0, 0.0, 0.0])
        snap = json.dumps(lr.snapshot()["model"])
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert not out.updated
        assert json.dumps(lr.snapshot()["model"]) == snap

    @pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
    def test_sigma_stays_positive_definite(self, C):
        rng = np.random.default_rng(13)
        lr = learner("nherd", 4, C=C)
        xs, ys = random_stream(rng, 4, 500)
        for x, y in zip(xs, ys):
            lr.update(x, int(y))
            np.linalg.cholesky(lr.model.sigma)


class TestIellip:
    def test_correct_with_margin_skips(self):
        lr = learner("iellip", 3)
        lr.model.mu = np.array([1.0, 0.0, 0.0])
        assert not lr.update(np.array([1.0, 0.0, 1.0]), 1).updated

    def test_first_update_frozen_values(self):
        lr = learner("iellip", 3, ellip_b=0.3, ellip_c=0.5)
        out = lr.update(np.array([1.0, 0.0, 1.0]), 1)
        assert out.updated
        # alpha = 0.5, Sg = (1,0,1)/sqrt(2), c_1 = 0.15
        np.testing.assert_allclose(
            lr.model.mu, [0.5 / math.sqrt(2), 0.0, 0.5 / math.sqrt(2)], atol=1e-15
        )
        e = np.array([
            [0.925 / 0.85, 0.0, -0.075 / 0.85],
            [0.0, 1.0 / 0.85, 0.0],
            [-0.075 / 0.85, 0.0, 0.925 / 0.85],
        ])
        np.testing.assert_allclose(lr.model.sigma, e, atol=1e-12)
        np.linalg.cholesky(lr.model.sigma)

    def test_shrink_decays_geometrically(self):
        lr = learner("iellip", 3)
        x = np.array([1.0, 0.0, 1.0])
        last_delta = None
        for t in range(1, 1001):
            y = -lr.predict(x).predicted  # force a mistake every step
            before = lr.model.sigma.copy()
            lr.update(x, y)
            last_delta = float(np.max(np.abs(lr.model.sigma - before)))
        assert last_delta <= 1e-12


class TestSharedInvariants:
    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_predict_never_mutates(self, name):
        rng = np.random.default_rng(21)
        lr = learner(name, 4)
        xs, ys = random_stream(rng, 4, 50)
        for x, y in zip(xs[:25], ys[:25]):
            lr.update(x, int(y))
        snap = lr.to_json()
        for x in xs[25:]:
            lr.predict(x)
            lr.predict(x, y=1)
        assert lr.to_json() == snap

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_confident_sample_is_a_noop(self, name):
        # A strongly correct sample must not move the model, just the step.
        x = np.array([1.0, -0.5, 2.0, 1.0])
        y = 1
        lr = learner(name, 4)
        if lr.second_order:
            lr.model.mu = 10.0 * y * x
        else:
            lr.model.w = 10.0 * y * x
        before = lr.snapshot()
        out = lr.update(x, y)
        after = lr.snapshot()
        assert not out.updated
        assert after["step"] == before["step"] + 1
        before.pop("step")
        after.pop("step")
        assert json.dumps(before) == json.dumps(after)

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_determinism(self, name):
        def run():
            rng = np.random.default_rng(31)
            lr = learner(name, 5)
            xs, ys = random_stream(rng, 5, 200)
            for x, y in zip(xs, ys):
                lr.update(x, int(y))
            assert lr.n_updates <= lr.step - 1
            return lr.to_json()

        assert run() == run()

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_snapshot_replay_equivalence(self, name):
        rng = np.random.default_rng(41)
        xs, ys = random_stream(rng, 4, 120)

        straight = learner(name, 4)
        for x, y in zip(xs, ys):
            straight.update(x, int(y))

        first = learner(name, 4)
        for x, y in zip(xs[:60], ys[:60]):
            first.update(x, int(y))
        resumed = from_json(first.to_json())
        for x, y in zip(xs[60:], ys[60:]):
            resumed.update(x, int(y))

        assert resumed.to_json() == straight.to_json()

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_serialization_round_trip_exact(self, name):
        rng = np.random.default_rng(51)
        lr = learner(name, 4)
        xs, ys = random_stream(rng, 4, 64)
        for x, y in zip(xs, ys):
            lr.update(x, int(y))
        clone = from_json(lr.to_json())
        assert clone.to_json() == lr.to_json()
        assert clone.step == lr.step
        assert clone.n_updates == lr.n_updates

    @pytest.mark.parametrize("name", SECOND_ORDER_ALGORITHMS)
    def test_covariance_health_quick(self, name):
        rng = np.random.default_rng(61)
        lr = learner(name, 5)
        xs, ys = random_stream(rng, 5, 2000)
        for x, y in zip(xs, ys):
            lr.update(x, int(y))
            sigma = lr.model.sigma
            assert float(np.max(np.abs(sigma - sigma.T))) <= 1e-10
            np.linalg.cholesky(sigma)

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_bad_label_rejected(self, name):
        lr = learner(name, 3)
        with pytest.raises(ValueError):
            lr.update(np.ones(3), 0)
