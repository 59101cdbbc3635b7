import warnings

import numpy as np
import pytest

from embedprobe.errors import (
    DegenerateInput,
    NonConvergence,
    SingleClass,
    SingularSystem,
    TooFewSamples,
    ZeroNorm,
    ZeroVariance,
)
from embedprobe.numerics import (
    auc_roc,
    components_for_variance,
    cosine_similarity,
    kfold_indices,
    logistic_fit,
    logistic_grad,
    logistic_loss,
    pca,
    pearson,
    predict_score,
    r2,
    ridge_fit,
    ridge_predict,
    stratified_split,
)


def brute_force_auc(scores, labels):
    """O(n^2) pairwise oracle: P(score_pos > score_neg), ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (pos.size * neg.size)


class TestPearson:
    def test_hand_values(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)
        # cov = 1, sigma_x * sigma_y = 5/4 * ... -> 4/5 by direct evaluation
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_symmetry_and_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=50)
        y = rng.normal(size=50)
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-15)
        assert pearson(3.0 * x + 7.0, y) == pytest.approx(pearson(x, y), abs=1e-12)

    def test_bounded_on_random_inputs(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            r = pearson(rng.normal(size=n), rng.normal(size=n))
            assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestCosine:
    def test_hand_values(self):
        assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0, abs=1e-12)
        assert cosine_similarity([1, 1], [2, 2]) == pytest.approx(1.0, abs=1e-12)
        assert cosine_similarity([1, 2], [2, 1]) == pytest.approx(0.8, abs=1e-12)

    def test_positive_scale_invariance_and_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            u = rng.normal(size=n) + 1e-3
            v = rng.normal(size=n) + 1e-3
            s = cosine_similarity(u, v)
            assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
            assert cosine_similarity(5.0 * u, v) == pytest.approx(s, abs=1e-12)

    def test_zero_norm(self):
        with pytest.raises(ZeroNorm):
            cosine_similarity([0.0, 0.0], [1.0, 2.0])


class TestPca:
    def test_rank_one_data(self):
        direction = np.array([1.0, 2.0, 2.0])
        X = np.outer(np.array([-2.0, 0.5, 1.0, 3.0]), direction) + 5.0
        result = pca(X)
        assert result.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(result.explained_variance_ratio[1:] < 1e-12)

    def test_two_equal_variance_directions(self):
        # Rows hit +/-1 along each axis: covariance is diag(1/2, 1/2) by hand,
        # so the two eigenvalues are equal and each ratio is exactly 0.5.
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        ratios = pca(X).explained_variance_ratio
        assert ratios == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_ratios_sum_to_one_and_orthonormal(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            X = rng.normal(size=(int(rng.integers(4, 30)), int(rng.integers(2, 8))))
            result = pca(X)
            assert abs(result.explained_variance_ratio.sum() - 1.0) < 1e-9
            assert np.all(np.diff(result.explained_variance_ratio) <= 1e-12)
            gram = result.components @ result.components.T
            assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-9

    def test_reconstruction(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            X = rng.normal(size=(25, 6)) * rng.uniform(0.1, 4.0, size=6)
            result = pca(X)
            back = result.inverse(result.transform(X))
            rel = np.linalg.norm(back - X) / np.linalg.norm(X)
            assert rel < 1e-9

    def test_sign_convention(self):
        rng = np.random.default_rng(5)
        result = pca(rng.normal(size=(30, 5)))
        for row in result.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_degenerate_input(self):
        with pytest.raises(DegenerateInput):
            pca(np.ones((5, 3)))


class TestComponentsForVariance:
    def test_spec_cases(self):
        assert components_for_variance([0.5, 0.3, 0.15, 0.05], 0.9) == 3
        assert components_for_variance([1.0], 0.5) == 1
        assert components_for_variance([1.0], 1.0) == 1
        assert components_for_variance([0.91, 0.09], 0.9) == 1

    def test_threshold_exactly_met(self):
        assert components_for_variance([0.6, 0.3, 0.1], 0.9) == 2


class TestRidge:
    def test_normal_equations_by_hand(self):
        x = np.array([[0.0], [1.0], [2.0]])
        y = 2.0 * x[:, 0] + 1.0
        model = ridge_fit(x, y, lam=0.0)
        assert model.weights[0] == pytest.approx(2.0, abs=1e-12)
        assert model.intercept == pytest.approx(1.0, abs=1e-12)

    def test_affine_target_near_perfect(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(200, 4))
        w = rng.normal(size=4)
        y = X @ w + 0.3
        model = ridge_fit(X[:150], y[:150])
        assert r2(y[150:], ridge_predict(model, X[150:])) >= 1.0 - 1e-9

    def test_constant_predictor_gives_zero_r2(self):
        X = np.ones((20, 1))
        y = np.arange(20.0)
        model = ridge_fit(X, y)
        assert r2(y, ridge_predict(model, X)) == pytest.approx(0.0, abs=1e-12)

    def test_singular_at_lambda_zero(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(SingularSystem):
            ridge_fit(X, np.array([1.0, 2.0, 3.5]), lam=0.0)
        ridge_fit(X, np.array([1.0, 2.0, 3.5]))  # floor keeps it solvable


class TestLogistic:
    def test_separated_classes_reach_training_auc_one(self):
        x = np.concatenate([np.linspace(-3, -1, 20), np.linspace(1, 3, 20)])[:, None]
        y = np.array([0] * 20 + [1] * 20)
        model = logistic_fit(x, y)
        assert auc_roc(predict_score(model, x), y) == 1.0

    def test_identical_distributions_score_half(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(30, 3))
        X = np.vstack([base, base])
        y = np.array([0] * 30 + [1] * 30)
        scores = predict_score(logistic_fit(X, y), X)
        assert np.max(np.abs(scores - 0.5)) < 1e-6

    def test_weight_sign_matches_grid_search_oracle(self):
        rng = np.random.default_rng(8)
        x = np.concatenate([rng.normal(-1.0, 0.5, 40), rng.normal(1.0, 0.5, 40)])[:, None]
        y = np.array([0] * 40 + [1] * 40)
        model = logistic_fit(x, y, l2=1e-4)
        grid = np.linspace(-6.0, 6.0, 241)
        losses = [logistic_loss(np.array([w]), 0.0, x, y, 1e-4) for w in grid]
        assert np.sign(model.weights[0]) == np.sign(grid[int(np.argmin(losses))])

    def test_gradient_norm_small_at_optimum(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            X = rng.normal(size=(50, 3))
            y = (rng.random(50) < 0.5).astype(float)
            if len(np.unique(y)) < 2:
                continue
            model = logistic_fit(X, y)
            assert model.grad_norm < 1e-6

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            n, p = int(rng.integers(5, 20)), int(rng.integers(1, 4))
            X = rng.normal(size=(n, p))
            y = (rng.random(n) < 0.5).astype(float)
            w = rng.normal(size=p)
            b = float(rng.normal())
            analytic = logistic_grad(w, b, X, y, 1e-4)
            eps = 1e-6
            numeric = np.empty(p + 1)
            for k in range(p):
                dw = np.zeros(p)
                dw[k] = eps
                numeric[k] = (
                    logistic_loss(w + dw, b, X, y, 1e-4) - logistic_loss(w - dw, b, X, y, 1e-4)
                ) / (2 * eps)
            numeric[p] = (
                logistic_loss(w, b + eps, X, y, 1e-4) - logistic_loss(w, b - eps, X, y, 1e-4)
            ) / (2 * eps)
            rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
            assert rel < 1e-5

    def test_single_class_raises(self):
        with pytest.raises(SingleClass):
            logistic_fit(np.ones((4, 1)), np.zeros(4))

    def test_non_convergence_warns_not_raises(self):
        x = np.concatenate([np.linspace(-3, -1, 20), np.linspace(1, 3, 20)])[:, None]
        y = np.array([0] * 20 + [1] * 20)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            model = logistic_fit(x, y, l2=1e-12, max_iter=2)
        assert not model.converged
        assert any(issubclass(w.category, NonConvergence) for w in caught)


class TestAuc:
    def test_hand_values(self):
        assert auc_roc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auc_roc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
        # 3 of 4 positive/negative pairs rank correctly
        assert auc_roc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(5, 200))
            # Coarse grid scores force plenty of ties.
            scores = np.round(rng.uniform(0.0, 1.0, n), 1)
            labels = (rng.random(n) < 0.5).astype(int)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auc_roc(scores, labels) == brute_force_auc(scores, labels)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(12)
        scores = rng.normal(size=80)
        labels = (rng.random(80) < 0.4).astype(int)
        labels[0], labels[1] = 0, 1
        base = auc_roc(scores, labels)
        assert auc_roc(np.exp(scores), labels) == base
        assert auc_roc(3.0 * scores + 10.0, labels) == base

    def test_single_class(self):
        with pytest.raises(SingleClass):
            auc_roc([0.1, 0.2], [1, 1])


class TestSplits:
    def test_balanced_two_class_example(self):
        classes = np.array(["a"] * 5 + ["b"] * 5)
        plan = stratified_split(classes, 0.8, seed=0)
        for cls in ("a", "b"):
            idx = np.flatnonzero(classes == cls)
            assert np.isin(idx, plan.train).sum() == 4
            assert np.isin(idx, plan.test).sum() == 1

    def test_same_seed_same_plan(self):
        classes = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 2])
        a = stratified_split(classes, 0.8, seed=5)
        b = stratified_split(classes, 0.8, seed=5)
        assert np.array_equal(a.train, b.train)
        assert np.array_equal(a.test, b.test)

    def test_disjoint_union(self):
        rng = np.random.default_rng(13)
        for trial in range(20):
            classes = rng.integers(0, 3, int(rng.integers(10, 60)))
            plan = stratified_split(classes, 0.8, seed=trial)
            union = np.sort(np.concatenate([plan.train, plan.test]))
            assert np.array_equal(union, np.arange(classes.size))

    def test_per_class_fraction_within_one_sample(self):
        rng = np.random.default_rng(14)
        for trial in range(20):
            classes = rng.integers(0, 4, int(rng.integers(20, 80)))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)  # rare singleton classes
                plan = stratified_split(classes, 0.8, seed=trial)
            for cls, frac in plan.class_train_fraction.items():
                n = int((classes == cls).sum())
                if n < 2:
                    continue
                assert abs(frac * n - 0.8 * n) <= 1.0

    def test_global_ratio_within_one_item(self):
        classes = np.array([0] * 7 + [1] * 6 + [2] * 9)
        plan = stratified_split(classes, 0.8, seed=3)
        assert abs(plan.train.size - 0.8 * classes.size) <= 1.0

    def test_singleton_class_goes_to_train_with_warning(self):
        classes = np.array(["solo"] + ["bulk"] * 9)
        with pytest.warns(UserWarning, match="solo"):
            plan = stratified_split(classes, 0.8, seed=0)
        assert 0 in plan.train


class TestKfold:
    def test_even_split(self):
        folds = kfold_indices(10, 5, seed=0)
        assert sorted(len(f) for f in folds) == [2, 2, 2, 2, 2]

    def test_partition(self):
        folds = kfold_indices(23, 5, seed=1)
        union = np.sort(np.concatenate(folds))
        assert np.array_equal(union, np.arange(23))

    def test_uneven_sizes(self):
        folds = kfold_indices(11, 5, seed=2)
        assert sorted((len(f) for f in folds), reverse=True) == [3, 2, 2, 2, 2]

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            kfold_indices(4, 5, seed=0)
