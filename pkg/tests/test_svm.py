import itertools

import numpy as np
import pytest

from occupilot.errors import DimensionMismatch, SingleClass
from occupilot.svm import (
    KernelSpec,
    SvmModel,
    epsilon_insensitive_loss,
    kernel_matrix,
    kkt_residual,
    predict,
    svr_dual_objective,
    train_svc,
    train_svr,
)


def blobs(rng, n=40, margin=2.0):
    """Linearly separable 2-D blobs with the given margin along x0."""
    X = rng.normal(0, 0.5, size=(n, 2))
    y = (np.arange(n) % 2).astype(int)
    X[:, 0] += np.where(y == 1, margin / 2 + 1, -margin / 2 - 1)
    return X, y


class TestKernels:
    def test_symmetry(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(15, 4))
        for spec in (KernelSpec("linear"), KernelSpec("rbf", gamma=0.7)):
            K = kernel_matrix(spec, A, A, spec.gamma or 0.7)
            assert np.allclose(K, K.T, atol=1e-12)

    def test_psd_stochastic(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            A = rng.normal(size=(12, 3))
            K = kernel_matrix(KernelSpec("rbf", gamma=1.0), A, A, 1.0)
            eigvals = np.linalg.eigvalsh(K)
            assert eigvals.min() > -1e-9

    def test_bad_kernel_rejected(self):
        with pytest.raises(ValueError):
            KernelSpec("poly")
        with pytest.raises(ValueError):
            KernelSpec("rbf", gamma=-1)


class TestTrainSvc:
    def test_separable_blobs(self):
        rng = np.random.default_rng(2)
        X, y = blobs(rng)
        model = train_svc(X, y, C=1.0, kernel=KernelSpec("linear"))
        assert np.array_equal(predict(model, X), y)
        assert len(model.support_vectors) >= 2

    def test_xor_rbf_vs_bruteforce_dual(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([0, 0, 1, 1])
        model = train_svc(X, y, C=10.0, kernel=KernelSpec("rbf", gamma=1.0))
        assert np.array_equal(predict(model, X), y)

        # brute-force grid search over the 4-point dual (sum alpha_i y_i = 0)
        K = kernel_matrix(KernelSpec("rbf", gamma=1.0), X, X, 1.0)
        ys = np.where(y == 1, 1.0, -1.0)
        best_obj = -np.inf
        grid = np.linspace(0, 10.0, 51)
        for a in itertools.product(grid, repeat=3):
            a = np.array(a)
            # solve the 4th from the equality constraint
            a3 = -(a @ ys[:3]) * ys[3]
            if not 0 <= a3 <= 10.0:
                continue
            alpha = np.append(a, a3)
            obj = alpha.sum() - 0.5 * (alpha * ys) @ K @ (alpha * ys)
            best_obj = max(best_obj, obj)
        alpha_model = np.zeros(4)
        for s, sv in enumerate(model.support_vectors):
            for r in range(4):
                if np.allclose(sv, X[r]):
                    alpha_model[r] = abs(model.dual_coeffs[s])
        model_obj = alpha_model.sum() - 0.5 * (alpha_model * ys) @ K @ (alpha_model * ys)
        assert model_obj >= best_obj - 1e-2  # grid resolution bound

    def test_single_class(self):
        with pytest.raises(SingleClass):
            train_svc(np.eye(3), [1, 1, 1])

    def test_dual_feasibility(self):
        rng = np.random.default_rng(3)
        X, y = blobs(rng, n=30, margin=0.5)
        model = train_svc(X, y, C=2.0, kernel=KernelSpec("rbf", gamma=0.5))
        alpha = np.abs(model.dual_coeffs)
        assert np.all(alpha >= -1e-12)
        assert np.all(alpha <= 2.0 + 1e-9)
        assert abs(model.dual_coeffs.sum()) < 1e-6  # sum alpha_i y_i = 0

    def test_kkt_residual_random_instances(self):
        rng = np.random.default_rng(4)
        tol = 1e-3
        for trial in range(20):
            n = int(rng.integers(10, 25))
            X = rng.normal(size=(n, 2))
            y = (X[:, 0] + 0.4 * rng.normal(size=n) > 0).astype(int)
            if len(np.unique(y)) < 2:
                continue
            model = train_svc(X, y, C=1.0, kernel=KernelSpec("rbf", gamma=1.0),
                              tol=tol, max_passes=500, seed=trial)
            assert model.converged
            assert kkt_residual(model, X, y) <= tol + 1e-9

    def test_margin_violations_monotone_in_C(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 2))
        y = (X[:, 0] + 0.8 * rng.normal(size=30) > 0).astype(int)
        ys = np.where(y == 1, 1.0, -1.0)
        violations = []
        for C in (0.1, 1.0, 10.0, 100.0):
            model = train_svc(X, y, C=C, kernel=KernelSpec("linear"),
                              max_passes=800, seed=0)
            m = ys * model.decision_function(X)
            violations.append(int(np.sum(m < 1 - 1e-6)))
        assert all(a >= b for a, b in zip(violations, violations[1:]))


class TestPredict:
    def test_support_vector_own_label(self):
        rng = np.random.default_rng(6)
        X, y = blobs(rng)
        model = train_svc(X, y, C=1.0, kernel=KernelSpec("linear"))
        sv_pred = predict(model, model.support_vectors)
        for s, sv in enumerate(model.support_vectors):
            row = next(r for r in range(len(X)) if np.allclose(X[r], sv))
            assert sv_pred[s] == y[row]

    def test_empty_features(self):
        rng = np.random.default_rng(7)
        X, y = blobs(rng)
        model = train_svc(X, y, C=1.0, kernel=KernelSpec("linear"))
        assert len(predict(model, np.empty((0, 2)))) == 0

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(8)
        X, y = blobs(rng)
        model = train_svc(X, y, C=1.0, kernel=KernelSpec("linear"))
        with pytest.raises(DimensionMismatch):
            predict(model, np.zeros((3, 5)))

    def test_training_order_invariance(self):
        rng = np.random.default_rng(9)
        X, y = blobs(rng, n=24, margin=0.8)
        model_a = train_svc(X, y, C=1.0, kernel=KernelSpec("rbf", gamma=0.5),
                            tol=1e-5, max_passes=2000, seed=0)
        perm = rng.permutation(len(y))
        model_b = train_svc(X[perm], y[perm], C=1.0, kernel=KernelSpec("rbf", gamma=0.5),
                            tol=1e-5, max_passes=2000, seed=0)
        probe = rng.normal(size=(20, 2))
        fa = model_a.decision_function(probe)
        fb = model_b.decision_function(probe)
        assert np.allclose(fa, fb, atol=1e-3)

    def test_json_roundtrip(self):
        rng = np.random.default_rng(10)
        X, y = blobs(rng)
        model = train_svc(X, y, C=1.0, kernel=KernelSpec("rbf", gamma=0.3))
        back = SvmModel.from_json(model.to_json())
        probe = rng.normal(size=(10, 2))
        assert np.allclose(model.decision_function(probe), back.decision_function(probe))


def project_box_sum_zero(v, C):
    """Exact projection onto {t in [-C, C]^n : sum t = 0} via bisection."""
    lo = v.min() - C - 1.0
    hi = v.max() + C + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = np.clip(v - mid, -C, C).sum()
        if s > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi), -C, C)


def projected_gradient_svr(K, y, C, eps, iters=200000, step=None):
    """Independent oracle: projected subgradient descent on the SVR dual."""
    n = len(y)
    beta = np.zeros(n)
    if step is None:
        step = 1.0 / (np.linalg.eigvalsh(K).max() + 1.0)
    best = beta.copy()
    best_obj = svr_dual_objective(K, y, beta, eps)
    for _ in range(iters):
        grad = K @ beta - y + eps * np.sign(beta)
        beta = project_box_sum_zero(beta - step * grad, C)
        obj = svr_dual_objective(K, y, beta, eps)
        if obj < best_obj:
            best_obj, best = obj, beta.copy()
    return best, best_obj


class TestTrainSvr:
    def test_line_inside_tube_zero_loss(self):
        X = np.linspace(0, 4, 9).reshape(-1, 1)
        y = 2 * X.ravel() + 1
        model = train_svr(X, y, C=100.0, epsilon=0.5, kernel=KernelSpec("linear"))
        residuals = model.predict(X) - y
        assert epsilon_insensitive_loss(residuals, 0.5).sum() == pytest.approx(0.0, abs=1e-6)

    def test_loss_boundary_case(self):
        # exactly at the tube edge the loss is |r| - eps = 0 on either branch
        assert epsilon_insensitive_loss([0.5, -0.5], 0.5).tolist() == [0.0, 0.0]
        assert epsilon_insensitive_loss([0.7], 0.5)[0] == pytest.approx(0.2)
        assert epsilon_insensitive_loss([0.3], 0.5)[0] == 0.0

    def test_dual_matches_projected_gradient_oracle(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            X = np.sort(rng.uniform(-2, 2, 5)).reshape(-1, 1)
            y = np.sin(X.ravel()) + 0.1 * rng.normal(size=5)
            C, eps = 2.0, 0.1
            K = kernel_matrix(KernelSpec("linear"), X, X, 0.0)
            model = train_svr(X, y, C=C, epsilon=eps, kernel=KernelSpec("linear"))
            obj_model = svr_dual_objective(K, y, model.train_beta, eps)
            _, obj_oracle = projected_gradient_svr(K, y, C, eps, iters=40000)
            assert obj_model <= obj_oracle + 1e-6

    def test_dual_pairs_never_both_positive(self):
        # beta = alpha - alpha* representation makes this structural; check
        # box feasibility and the zero-sum constraint instead
        rng = np.random.default_rng(12)
        X = rng.uniform(-1, 1, size=(8, 1))
        y = X.ravel() ** 2
        model = train_svr(X, y, C=1.5, epsilon=0.05)
        assert np.all(np.abs(model.train_beta) <= 1.5 + 1e-9)
        assert abs(model.train_beta.sum()) < 1e-9

    def test_objective_nonincreasing(self):
        # every accepted pair move is an exact 1-D minimization, so running
        # the solver longer can only improve the dual objective
        rng = np.random.default_rng(13)
        X = rng.uniform(-1, 1, size=(6, 1))
        y = 3 * X.ravel()
        K = kernel_matrix(KernelSpec("linear"), X, X, 0.0)
        short = train_svr(X, y, C=1.0, epsilon=0.1, max_sweeps=1)
        long = train_svr(X, y, C=1.0, epsilon=0.1, max_sweeps=50)
        assert svr_dual_objective(K, y, long.train_beta, 0.1) <= svr_dual_objective(
            K, y, short.train_beta, 0.1
        ) + 1e-12
