"""SMO-based epsilon-SVR tests, including a QP oracle for the dual."""

import numpy as np
import pytest

from gridcast.models import SvrConfig, SvrModel
from gridcast.models.svr import dual_objective, kernel_matrix


def qp_oracle_objective(K, y, C, epsilon):
    """Solve the doubled-variable epsilon-SVR dual with cvxopt and return
    the optimal dual objective value (maximization form)."""
    import cvxopt
    cvxopt.solvers.options["show_progress"] = False
    n = len(y)
    # variables z = [a; a*]; beta = a - a*
    S = np.hstack([np.eye(n), -np.eye(n)])  # beta = S z
    P = S.T @ K @ S
    P = P + 1e-10 * np.eye(2 * n)  # PSD jitter for the solver
    q = epsilon * np.ones(2 * n) - S.T @ y
    G = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.hstack([np.zeros(2 * n), C * np.ones(2 * n)])
    A = np.hstack([np.ones(n), -np.ones(n)]).reshape(1, -1)
    b = np.zeros(1)
    sol = cvxopt.solvers.qp(cvxopt.matrix(P), cvxopt.matrix(q),
                            cvxopt.matrix(G), cvxopt.matrix(h),
                            cvxopt.matrix(A), cvxopt.matrix(b))
    z = np.array(sol["x"]).ravel()
    beta = z[:n] - z[n:]
    return dual_objective(beta, K, y, epsilon)


def random_problem(rng, n):
    X = rng.normal(0, 1, (n, 2))
    y = np.sin(X[:, 0]) + 0.3 * rng.normal(0, 1, n)
    return X, y


class TestSvrBasics:
    def test_two_point_interpolation(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 1.0])
        model = SvrModel(SvrConfig(kernel="linear", c=100.0, epsilon=0.0))
        model.fit(X, y, ["x"])
        np.testing.assert_allclose(model.predict(X), y, atol=1e-3)

    def test_large_epsilon_flat_solution(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, (20, 2))
        y = rng.uniform(0, 1, 20)
        eps = float(np.abs(y - y.mean()).max()) + 0.1
        model = SvrModel(SvrConfig(kernel="rbf", c=10.0, epsilon=eps))
        model.fit(X, y, ["a", "b"])
        np.testing.assert_allclose(model.beta, 0.0)
        np.testing.assert_allclose(model.predict(X), y.mean())

    def test_support_vector_within_tube(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 1, (15, 2))
        X[7] = X[3]  # duplicated training point
        y = np.sin(3 * X[:, 0])
        y[7] = y[3]
        cfg = SvrConfig(kernel="rbf", c=100.0, epsilon=0.05, tol=1e-8)
        model = SvrModel(cfg)
        model.fit(X, y, ["a", "b"])
        pred = model.predict(X[3:4])
        assert abs(pred[0] - y[3]) <= cfg.epsilon + 1e-6 + cfg.tol

    def test_zero_multipliers_predict_bias(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([5.0, 5.0, 5.0])
        model = SvrModel(SvrConfig(kernel="rbf", c=10.0, epsilon=0.1))
        model.fit(X, y, ["x"])
        np.testing.assert_allclose(model.predict(X), 5.0)

    def test_determinism(self):
        rng = np.random.default_rng(2)
        X, y = random_problem(rng, 30)
        a = SvrModel(SvrConfig(max_passes=20000))
        b = SvrModel(SvrConfig(max_passes=20000))
        a.fit(X, y, ["a", "b"])
        b.fit(X, y, ["a", "b"])
        np.testing.assert_array_equal(a.predict(X), b.predict(X))

    def test_kernel_matrix_shapes(self):
        A = np.random.default_rng(3).normal(0, 1, (4, 2))
        B = np.random.default_rng(4).normal(0, 1, (6, 2))
        K = kernel_matrix(A, B, "rbf", 0.5)
        assert K.shape == (4, 6)
        Klin = kernel_matrix(A, A, "linear", 0.5)
        np.testing.assert_allclose(Klin, A @ A.T)
        np.testing.assert_allclose(np.diag(kernel_matrix(A, A, "rbf", 0.5)), 1.0)


class TestKkt:
    def _fit(self, seed, n=8):
        rng = np.random.default_rng(seed)
        X, y = random_problem(rng, n)
        model = SvrModel(SvrConfig(kernel="rbf", c=5.0, epsilon=0.05,
                                   tol=1e-8, max_passes=100_000))
        model.fit(X, y, ["a", "b"])
        return model, X, y

    def test_kkt_conditions_at_convergence(self):
        for seed in range(10):
            model, X, y = self._fit(seed)
            assert model.converged
            z = model.raw_multipliers
            n = len(z) // 2
            a, astar = z[:n], z[n:]
            C = model.config.c
            assert (a >= -1e-8).all() and (a <= C + 1e-8).all()
            assert (astar >= -1e-8).all() and (astar <= C + 1e-8).all()
            assert np.abs(a * astar).max() < 1e-8 * C * C
            assert abs((a - astar).sum()) < 1e-8

    def test_dual_objective_matches_qp_oracle(self):
        pytest.importorskip("cvxopt")
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(4, 9))
            X, y = random_problem(rng, n)
            cfg = SvrConfig(kernel="rbf", c=5.0, epsilon=0.05, tol=1e-10,
                            max_passes=200_000)
            model = SvrModel(cfg)
            model.fit(X, y, ["a", "b"])
            K = kernel_matrix(X, X, "rbf", cfg.gamma or 1.0 / X.shape[1])
            ours = dual_objective(model.beta, K, y, cfg.epsilon)
            oracle = qp_oracle_objective(K, y, cfg.c, cfg.epsilon)
            scale = max(abs(oracle), 1e-9)
            assert ours >= oracle - 1e-4 * scale  # we maximize; match within tol
            assert abs(ours - oracle) <= 1e-4 * scale

    def test_non_convergence_flag(self):
        rng = np.random.default_rng(8)
        X, y = random_problem(rng, 40)
        model = SvrModel(SvrConfig(kernel="rbf", c=100.0, epsilon=0.0,
                                   tol=1e-12, max_passes=5))
        model.fit(X, y, ["a", "b"])
        assert model.converged is False
        assert np.isfinite(model.predict(X)).all()
