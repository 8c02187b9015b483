import numpy as np
import pytest

from hatopt.errors import InvalidInputError, UnsupportedProblemError
from hatopt.estimators import (
    BFGS,
    Compressed,
    DFP,
    ExactHessian,
    GaussNewton,
    HutchinsonDiagonal,
    InexactnessBound,
    LazyUpdates,
    SR1,
    deviation,
)
from hatopt.numerics import operator_norm
from hatopt.objectives import (
    LabeledDataset,
    make_linear_lsq,
    make_nlls,
    make_quadratic,
    make_rosenbrock,
    make_softmax_classifier,
    make_tanh_nlls,
    synthetic_classification,
)


def quadratic_problem(seed=0, n=4):
    gen = np.random.default_rng(seed)
    a = gen.standard_normal((n, n))
    return make_quadratic(a @ a.T + np.eye(n))


class TestExact:
    def test_returns_problem_hessian(self):
        problem = quadratic_problem()
        est = ExactHessian()
        x = np.ones(4)
        np.testing.assert_array_equal(est.produce(0, x, problem.gradient(x), problem),
                                      problem.hessian(x))

    def test_zero_deviation(self):
        problem = quadratic_problem(1)
        est = ExactHessian()
        x = np.ones(4)
        h = est.produce(0, x, problem.gradient(x), problem)
        assert deviation(h, problem.hessian(x)) == 0.0

    def test_rosenbrock_hessian_at_minimum(self):
        problem = make_rosenbrock(l2=1.0)
        h = ExactHessian().produce(0, np.array([1.0, 1.0]), np.zeros(2), problem)
        np.testing.assert_allclose(h, [[802.0, -400.0], [-400.0, 200.0]])


class TestQuasiNewtonWorkedExamples:
    def test_bfgs_2x2(self):
        est = BFGS(init=np.eye(2))
        est.produce(0, np.zeros(2), np.ones(2), None)
        est.observe_step(np.array([1.0, 0.0]), np.array([2.0, 0.0]))
        np.testing.assert_allclose(est.produce(1, np.zeros(2), np.ones(2), None),
                                   np.diag([2.0, 1.0]), atol=1e-14)

    def test_dfp_matches_bfgs_on_colinear_pair(self):
        bfgs = BFGS(init=np.eye(2))
        dfp = DFP(init=np.eye(2))
        for est in (bfgs, dfp):
            est.produce(0, np.zeros(2), np.ones(2), None)
            est.observe_step(np.array([1.0, 0.0]), np.array([2.0, 0.0]))
        np.testing.assert_allclose(
            bfgs.produce(1, np.zeros(2), np.ones(2), None),
            dfp.produce(1, np.zeros(2), np.ones(2), None), atol=1e-14)

    def test_sr1_2x2(self):
        est = SR1(init=np.eye(2))
        est.produce(0, np.zeros(2), np.ones(2), None)
        # v = y - B s = (2, 0), <v, s> = 2: B + v v^T / 2 = diag(3, 1).
        est.observe_step(np.array([1.0, 0.0]), np.array([3.0, 0.0]))
        np.testing.assert_allclose(est.produce(1, np.zeros(2), np.ones(2), None),
                                   np.diag([3.0, 1.0]), atol=1e-14)


class TestQuasiNewtonContracts:
    @pytest.mark.parametrize("cls", [BFGS, DFP], ids=["bfgs", "dfp"])
    def test_skip_on_degenerate_curvature(self, cls):
        est = cls(init=np.diag([2.0, 5.0]))
        before = est.produce(0, np.zeros(2), np.ones(2), None)
        est.observe_step(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        np.testing.assert_array_equal(est.produce(1, np.zeros(2), np.ones(2), None), before)

    def test_sr1_skip_when_secant_already_holds(self):
        est = SR1(init=np.diag([2.0, 5.0]))
        before = est.produce(0, np.zeros(2), np.ones(2), None)
        s = np.array([1.0, 0.0])
        est.observe_step(s, before @ s)  # v = 0
        np.testing.assert_array_equal(est.produce(1, np.zeros(2), np.ones(2), None), before)

    @pytest.mark.parametrize("cls", [BFGS, DFP, SR1], ids=["bfgs", "dfp", "sr1"])
    def test_secant_exact_on_quadratic(self, cls):
        problem = quadratic_problem(2)
        q = problem.hessian(np.zeros(4))
        est = cls(init=np.eye(4))
        est.produce(0, np.zeros(4), np.ones(4), problem)
        gen = np.random.default_rng(3)
        s = gen.standard_normal(4)
        est.observe_step(s, q @ s)
        b = est.produce(1, np.zeros(4), np.ones(4), problem)
        assert np.linalg.norm(b @ s - q @ s) <= 1e-9 * (1.0 + np.linalg.norm(q @ s))

    @pytest.mark.parametrize("cls", [BFGS, DFP], ids=["bfgs", "dfp"])
    def test_secant_residual_over_random_sequence(self, cls):
        # Pairs with honest curvature (y from a PD map plus noise); adversarial
        # near-orthogonal pairs inflate ||B|| and with it the attainable
        # floating-point residual.
        gen = np.random.default_rng(4)
        a = gen.standard_normal((5, 5))
        q = a @ a.T + np.eye(5)
        est = cls(init=np.eye(5))
        est.produce(0, np.zeros(5), np.ones(5), None)
        for k in range(50):
            s = gen.standard_normal(5)
            y = q @ s + 0.1 * gen.standard_normal(5)
            if s @ y <= 1e-8 * np.linalg.norm(s) * np.linalg.norm(y):
                continue
            est.observe_step(s, y)
            b = est.produce(k + 1, np.zeros(5), np.ones(5), None)
            assert np.linalg.norm(b @ s - y) <= 1e-9 * (1.0 + np.linalg.norm(y))

    def test_sr1_can_go_indefinite(self):
        est = SR1(init=np.eye(2))
        est.produce(0, np.zeros(2), np.ones(2), None)
        # Negative curvature pair from an indefinite quadratic.
        q = np.diag([-3.0, 1.0])
        s = np.array([1.0, 0.2])
        est.observe_step(s, q @ s)
        b = est.produce(1, np.zeros(2), np.ones(2), None)
        assert np.linalg.eigvalsh(b)[0] < 0

    def test_default_init_scale(self):
        est = BFGS()
        x = np.array([3.0, 4.0])  # norm 5
        g = np.array([10.0, 0.0])
        b = est.produce(0, x, g, None)
        np.testing.assert_allclose(b, 2.0 * np.eye(2))


class TestHutchinson:
    def test_basis_mode_exact_diagonal(self):
        problem = quadratic_problem(5)
        est = HutchinsonDiagonal(probes=4, seed=0, mode="basis")
        h = est.produce(0, np.zeros(4), np.ones(4), problem)
        np.testing.assert_array_equal(np.diag(h), np.diag(problem.hessian(np.zeros(4))))

    def test_exact_on_diagonal_hessian(self):
        problem = make_quadratic(np.diag([1.0, -2.0, 5.0]))
        est = HutchinsonDiagonal(probes=1, seed=7)
        h = est.produce(0, np.zeros(3), np.ones(3), problem)
        np.testing.assert_allclose(h, np.diag([1.0, -2.0, 5.0]), atol=1e-12)

    def test_monte_carlo_error_within_five_sigma(self):
        problem = quadratic_problem(6, n=5)
        q = problem.hessian(np.zeros(5))
        m = 10000
        est = HutchinsonDiagonal(probes=m, seed=1)
        h = np.diag(est.produce(0, np.zeros(5), np.ones(5), problem))
        for i in range(5):
            variance = np.sum(q[i] ** 2) - q[i, i] ** 2
            stderr = np.sqrt(variance / m)
            assert abs(h[i] - q[i, i]) <= 5.0 * stderr

    def test_deterministic_given_seed(self):
        problem = quadratic_problem(7)
        a = HutchinsonDiagonal(probes=16, seed=3).produce(2, np.zeros(4), np.ones(4), problem)
        b = HutchinsonDiagonal(probes=16, seed=3).produce(2, np.zeros(4), np.ones(4), problem)
        np.testing.assert_array_equal(a, b)

    def test_rejects_bad_probe_count(self):
        with pytest.raises(InvalidInputError):
            HutchinsonDiagonal(probes=0, seed=0)


class TestGaussNewton:
    def test_linear_model_is_exact(self):
        data = synthetic_classification(25, 6, seed=8)
        problem = make_linear_lsq(data)
        est = GaussNewton("l2")
        x = np.random.default_rng(9).standard_normal(6)
        h = est.produce(0, x, problem.gradient(x), problem)
        assert operator_norm(h - problem.hessian(x)) == 0.0

    def test_zero_residual_point(self):
        gen = np.random.default_rng(10)
        a = gen.standard_normal((12, 3))
        data = LabeledDataset(features=a, labels=np.zeros(12))
        problem = make_tanh_nlls(data, hidden_units=2, seed=2, l2=1.0)
        # Labels set to the model output at x_hat: residuals vanish there.
        x_hat = gen.standard_normal(problem.dim) * 0.3
        phis = []
        for i in range(12):
            w = x_hat[:6].reshape(2, 3)
            v = x_hat[6:]
            phis.append(v @ np.tanh(w @ a[i]))
        data = LabeledDataset(features=a, labels=np.array(phis))
        problem = make_tanh_nlls(data, hidden_units=2, seed=2, l2=1.0)
        assert problem.value(x_hat) <= 1e-18
        assert operator_norm(problem.hessian(x_hat) - problem.ggn(x_hat)) <= 1e-9

    def test_l2_bound_on_sigmoid_nlls(self):
        data = synthetic_classification(30, 6, seed=11)
        problem = make_nlls(data, l2=1.0)
        big_l = problem.constants.component_grad_lipschitz
        n = problem.sample_count
        gen = np.random.default_rng(12)
        for x in gen.uniform(-2, 2, (100, 6)):
            left = operator_norm(problem.hessian(x) - problem.ggn(x))
            right = big_l * np.sqrt(2.0 * n * problem.value(x))
            assert left <= right + 1e-9

    def test_softmax_bound_affine_and_tanh(self):
        classes = synthetic_classification(20, 5, seed=13, classes=3)
        affine = make_softmax_classifier(classes, l2=1.0)
        gen = np.random.default_rng(14)
        for x in gen.uniform(-1, 1, (100, affine.dim)):
            assert operator_norm(affine.hessian(x) - affine.ggn(x)) <= 1e-9
        tanh = make_softmax_classifier(classes, hidden_units=3, seed=3, l2=1.0)
        big_l = tanh.constants.component_grad_lipschitz
        for x in gen.uniform(-1, 1, (100, tanh.dim)):
            left = operator_norm(tanh.hessian(x) - tanh.ggn(x))
            assert left <= 2.0 * big_l * tanh.value(x) + 1e-9

    def test_unsupported_problem(self):
        problem = make_rosenbrock(l2=1.0)
        with pytest.raises(UnsupportedProblemError):
            GaussNewton("l2").produce(0, problem.x0, np.ones(2), problem)

    def test_kind_mismatch(self):
        data = synthetic_classification(10, 3, seed=15)
        problem = make_nlls(data, l2=1.0)
        with pytest.raises(UnsupportedProblemError):
            GaussNewton("softmax").produce(0, np.zeros(3), np.ones(3), problem)


class CountingEstimator(ExactHessian):
    def __init__(self):
        self.calls = []

    def produce(self, k, x, g, problem):
        self.calls.append(k)
        return super().produce(k, x, g, problem)


class TestLazyUpdates:
    def test_period_one_matches_inner(self):
        problem = make_rosenbrock(l2=1.0)
        lazy = LazyUpdates(ExactHessian(), period=1)
        gen = np.random.default_rng(16)
        for k in range(5):
            x = gen.standard_normal(2)
            np.testing.assert_array_equal(
                lazy.produce(k, x, np.ones(2), problem), problem.hessian(x))

    def test_refresh_schedule(self):
        problem = quadratic_problem(17)
        counter = CountingEstimator()
        lazy = LazyUpdates(counter, period=3)
        for k in range(6):
            lazy.produce(k, np.ones(4), np.ones(4), problem)
        assert counter.calls == [0, 3]

    def test_lazy_exact_equals_exact_on_quadratic(self):
        problem = quadratic_problem(18)
        lazy = LazyUpdates(ExactHessian(), period=4)
        exact = ExactHessian()
        gen = np.random.default_rng(19)
        for k in range(8):
            x = gen.standard_normal(4)
            np.testing.assert_array_equal(lazy.produce(k, x, np.ones(4), problem),
                                          exact.produce(k, x, np.ones(4), problem))


class TestCompressed:
    def test_fraction_one_is_identity(self):
        problem = quadratic_problem(20)
        inner = ExactHessian()
        for scheme in ("top-k", "random-sparsify"):
            wrapped = Compressed(ExactHessian(), scheme=scheme, fraction=1.0, seed=0)
            np.testing.assert_array_equal(
                wrapped.produce(0, np.ones(4), np.ones(4), problem),
                inner.produce(0, np.ones(4), np.ones(4), problem))

    def test_top_k_keeps_largest(self):
        problem = make_quadratic(np.diag([3.0, 1.0]))
        # Upper triangle has 3 entries; fraction 1/3 keeps exactly one.
        wrapped = Compressed(ExactHessian(), scheme="top-k", fraction=1.0 / 3.0)
        h = wrapped.produce(0, np.zeros(2), np.ones(2), problem)
        np.testing.assert_array_equal(h, np.diag([3.0, 0.0]))

    def test_random_sparsify_unbiased(self):
        q = np.array([[2.0, -1.0, 0.5],
                      [-1.0, 3.0, 0.25],
                      [0.5, 0.25, 1.5]])
        problem = make_quadratic(q)
        fraction = 0.5
        trials = 100000
        acc = np.zeros((3, 3))
        for seed in range(trials):
            wrapped = Compressed(ExactHessian(), scheme="random-sparsify",
                                 fraction=fraction, seed=seed)
            acc += wrapped.produce(0, np.zeros(3), np.ones(3), problem)
        mean = acc / trials
        stderr_scale = np.sqrt((1.0 - fraction) / fraction / trials)
        for i in range(3):
            for j in range(3):
                stderr = abs(q[i, j]) * stderr_scale
                assert abs(mean[i, j] - q[i, j]) <= 5.0 * stderr + 1e-12

    def test_sparsify_symmetric_and_deterministic(self):
        problem = quadratic_problem(21)
        wrapped = Compressed(ExactHessian(), scheme="random-sparsify",
                             fraction=0.4, seed=5)
        a = wrapped.produce(3, np.ones(4), np.ones(4), problem)
        np.testing.assert_array_equal(a, a.T)
        wrapped2 = Compressed(ExactHessian(), scheme="random-sparsify",
                              fraction=0.4, seed=5)
        np.testing.assert_array_equal(a, wrapped2.produce(3, np.ones(4), np.ones(4), problem))

    def test_invalid_fraction(self):
        with pytest.raises(InvalidInputError):
            Compressed(ExactHessian(), scheme="top-k", fraction=0.0)


class TestDeviation:
    def test_zero_when_equal(self):
        q = quadratic_problem(22).hessian(np.zeros(4))
        assert deviation(q, q) == 0.0

    def test_simple_gap(self):
        assert deviation(np.zeros((2, 2)), np.diag([2.0, 0.0])) == pytest.approx(2.0)

    def test_matches_eigensolver(self):
        gen = np.random.default_rng(23)
        a = gen.standard_normal((6, 6))
        b = gen.standard_normal((6, 6))
        a, b = 0.5 * (a + a.T), 0.5 * (b + b.T)
        expected = np.max(np.abs(np.linalg.eigvalsh(b - a)))
        assert deviation(a, b) == pytest.approx(expected, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            deviation(np.eye(2), np.eye(3))


class TestInexactnessBound:
    def test_evaluate(self):
        bound = InexactnessBound(m=2.0, beta=0.5)
        assert bound.evaluate(4.0) == pytest.approx(4.0)

    def test_rejects_negative(self):
        with pytest.raises(InvalidInputError):
            InexactnessBound(m=-1.0, beta=0.5)
