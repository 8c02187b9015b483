import numpy as np
import pytest

from hatopt.bregman import (
    euclidean_scaling,
    make_entropic_simplex_scaling,
    make_quadratic_scaling,
    random_spd_scaling,
)
from hatopt.subproblem import (
    TrustRegionModel,
    check_kkt,
    solve_general_bregman,
    solve_quadratic_bregman,
)


def brute_force_model_value(model):
    """Independent n=2 oracle: best model value over the interior candidate
    (when the model matrix is PD) and a 2001-point boundary angular grid."""
    m0 = model.h + model.a * model.scaling.quadratic_matrix

    def value(d):
        return float(model.g @ d + 0.5 * d @ (m0 @ d))

    best = 0.0  # d = 0 is always feasible
    eigs = np.linalg.eigvalsh(m0)
    if eigs[0] > 1e-12:
        interior = np.linalg.solve(m0, -model.g)
        if np.linalg.norm(interior) <= model.radius:
            best = min(best, value(interior))
    angles = np.linspace(0.0, 2.0 * np.pi, 2001, endpoint=False)
    boundary = model.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    best = min(best, min(value(d) for d in boundary))
    return best


def random_model(seed, n=2, indefinite=True, scaling=None):
    gen = np.random.default_rng(seed)
    h = gen.standard_normal((n, n))
    h = 0.5 * (h + h.T)
    if not indefinite:
        h = h @ h.T + 0.1 * np.eye(n)
    g = gen.standard_normal(n)
    if scaling is None:
        scaling = euclidean_scaling(n)
    return TrustRegionModel(g=g, h=h, a=float(gen.uniform(0.0, 2.0)),
                            scaling=scaling, center=np.zeros(n),
                            radius=float(gen.uniform(0.1, 2.0)))


class TestQuadraticSolverWorkedExamples:
    def test_interior_1d(self):
        model = TrustRegionModel(g=np.array([1.0]), h=np.array([[2.0]]), a=1.0,
                                 scaling=euclidean_scaling(1),
                                 center=np.zeros(1), radius=1.0)
        sol = solve_quadratic_bregman(model)
        np.testing.assert_allclose(sol.d, [-1.0 / 3.0], atol=1e-12)
        assert sol.lam == 0.0
        assert not sol.on_boundary

    def test_boundary_1d(self):
        model = TrustRegionModel(g=np.array([1.0]), h=np.array([[2.0]]), a=1.0,
                                 scaling=euclidean_scaling(1),
                                 center=np.zeros(1), radius=0.1)
        sol = solve_quadratic_bregman(model)
        np.testing.assert_allclose(sol.d, [-0.1], atol=1e-10)
        assert sol.lam == pytest.approx(7.0, abs=1e-6)
        assert sol.on_boundary

    def test_zero_gradient(self):
        model = TrustRegionModel(g=np.zeros(2), h=np.eye(2), a=1.0,
                                 scaling=euclidean_scaling(2),
                                 center=np.zeros(2), radius=0.0)
        sol = solve_quadratic_bregman(model)
        np.testing.assert_array_equal(sol.d, np.zeros(2))
        assert sol.lam == 0.0

    def test_hard_case(self):
        # Gradient orthogonal to the lowest eigenspace; the regularized
        # pseudo-step is interior, so the boundary is reached along e1.
        model = TrustRegionModel(g=np.array([0.0, 1.0]),
                                 h=np.diag([-1.0, 1.0]), a=0.0,
                                 scaling=euclidean_scaling(2),
                                 center=np.zeros(2), radius=1.0)
        sol = solve_quadratic_bregman(model)
        assert sol.lam == pytest.approx(1.0)
        assert sol.on_boundary
        assert abs(sol.d[1] + 0.5) <= 1e-10
        assert abs(abs(sol.d[0]) - np.sqrt(0.75)) <= 1e-10
        assert sol.model_value <= brute_force_model_value(model) + 1e-7


class TestKkt:
    def test_certified_worked_solutions(self):
        for radius in (1.0, 0.1):
            model = TrustRegionModel(g=np.array([1.0]), h=np.array([[2.0]]), a=1.0,
                                     scaling=euclidean_scaling(1),
                                     center=np.zeros(1), radius=radius)
            sol = solve_quadratic_bregman(model)
            report = check_kkt(model, sol)
            assert report.within(1e-8)
            assert report.second_order_psd_min_eig >= 0.0

    def test_zero_point_with_zero_gradient(self):
        model = TrustRegionModel(g=np.zeros(2), h=np.eye(2), a=0.5,
                                 scaling=euclidean_scaling(2),
                                 center=np.zeros(2), radius=1.0)
        sol = solve_quadratic_bregman(model)
        assert check_kkt(model, sol).stationarity == 0.0

    def test_corrupted_step_fails_stationarity(self):
        model = TrustRegionModel(g=np.array([1.0, -0.5]), h=np.eye(2), a=1.0,
                                 scaling=euclidean_scaling(2),
                                 center=np.zeros(2), radius=1.0)
        sol = solve_quadratic_bregman(model)
        sol.d = sol.d + np.array([0.1, 0.0])
        assert check_kkt(model, sol).stationarity > 1e-3

    def test_all_conditions_on_random_instances(self):
        for seed in range(50):
            model = random_model(seed)
            sol = solve_quadratic_bregman(model)
            report = check_kkt(model, sol)
            assert report.within(1e-6)
            scale = max(np.linalg.norm(model.h, 2), 1.0)
            assert report.second_order_psd_min_eig >= -1e-8 * scale


class TestQuadraticSolverOracle:
    def test_grid_oracle_on_100_instances(self):
        for seed in range(100):
            scaling = (euclidean_scaling(2) if seed % 2 == 0
                       else random_spd_scaling(2, 7.0 / 12.0, 1.0, seed=seed))
            model = random_model(seed, scaling=scaling)
            sol = solve_quadratic_bregman(model)
            assert sol.model_value <= brute_force_model_value(model) + 1e-7

    def test_model_decrease(self):
        for seed in range(100, 150):
            sol = solve_quadratic_bregman(random_model(seed))
            assert sol.model_value <= 0.0

    def test_step_inside_ball(self):
        for seed in range(150, 200):
            model = random_model(seed)
            sol = solve_quadratic_bregman(model)
            assert np.linalg.norm(sol.d) <= model.radius * (1.0 + 1e-9)
            assert abs(sol.lam * (np.linalg.norm(sol.d) - model.radius)) <= 1e-7 * (1.0 + sol.lam)


class TestGeneralSolver:
    def test_agrees_with_quadratic_solver(self):
        for seed in range(200):
            n = 2 + seed % 9
            scaling = random_spd_scaling(n, 0.7, 1.2, seed=seed)
            model = random_model(seed, n=n, scaling=scaling)
            exact = solve_quadratic_bregman(model)
            general = solve_general_bregman(model, tol=1e-8)
            assert general.model_value <= exact.model_value + 1e-6 * (1.0 + abs(exact.model_value))

    def test_interior_newton_like_limit(self):
        # Huge regularization and radius: step approaches the solution of the
        # linearized system (H + A hess_rho(center)) d = -g.
        n = 3
        scaling = make_entropic_simplex_scaling(np.eye(n), 1.0, n)
        gen = np.random.default_rng(5)
        h = gen.standard_normal((n, n))
        h = h @ h.T
        g = gen.standard_normal(n)
        center = np.full(n, 1.0 / n)
        a = 1e6
        model = TrustRegionModel(g=g, h=h, a=a, scaling=scaling,
                                 center=center, radius=10.0)
        sol = solve_general_bregman(model, tol=1e-12)
        linearized = np.linalg.solve(h + a * scaling.hess_rho(center), -g)
        assert np.linalg.norm(sol.d - linearized) <= 1e-8

    def test_tiny_radius(self):
        model = random_model(7)
        model.radius = 1e-12
        sol = solve_general_bregman(model, tol=1e-9)
        assert np.linalg.norm(sol.d) <= 1e-12

    def test_entropic_domain_respected(self):
        n = 3
        scaling = make_entropic_simplex_scaling(np.eye(n), 0.5, n)
        center = np.array([-0.45, 0.2, 0.2])  # close to the -theta wall
        gen = np.random.default_rng(8)
        model = TrustRegionModel(g=gen.standard_normal(n), h=np.eye(n), a=1.0,
                                 scaling=scaling, center=center, radius=0.5)
        sol = solve_general_bregman(model, tol=1e-8)
        assert scaling.contains(center + sol.d)

    def test_kkt_on_general_solutions(self):
        for seed in range(20):
            n = 3
            scaling = make_entropic_simplex_scaling(np.eye(n), 1.0, n)
            gen = np.random.default_rng(300 + seed)
            h = gen.standard_normal((n, n))
            h = h @ h.T + 0.1 * np.eye(n)
            model = TrustRegionModel(g=gen.standard_normal(n), h=h,
                                     a=float(gen.uniform(0.1, 2.0)),
                                     scaling=scaling,
                                     center=np.full(n, 1.0 / n),
                                     radius=float(gen.uniform(0.05, 0.3)))
            sol = solve_general_bregman(model, tol=1e-10)
            report = check_kkt(model, sol)
            assert report.within(1e-6)
