import numpy as np
import pytest

from hatopt.errors import InvalidInputError, SingularSystemError
from hatopt.numerics import (
    as_symmetric,
    as_vector,
    eigendecompose,
    operator_norm,
    solve_spd,
)


def random_symmetric(n, seed):
    gen = np.random.default_rng(seed)
    m = gen.standard_normal((n, n))
    return 0.5 * (m + m.T)


def random_spd(n, seed):
    gen = np.random.default_rng(seed)
    a = gen.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


class TestOperatorNorm:
    def test_diagonal(self):
        assert operator_norm(np.diag([2.0, -3.0])) == pytest.approx(3.0)

    def test_zero(self):
        assert operator_norm(np.zeros((4, 4))) == 0.0

    def test_matches_dense_eigensolver(self):
        m = random_symmetric(5, 0)
        expected = np.max(np.abs(np.linalg.eigvalsh(m)))
        assert operator_norm(m) == pytest.approx(expected, rel=1e-10)

    def test_power_iteration_path(self):
        # n > 200 exercises the power-iteration branch.
        m = random_symmetric(250, 1)
        expected = np.max(np.abs(np.linalg.eigvalsh(m)))
        assert operator_norm(m) == pytest.approx(expected, rel=1e-10)

    def test_power_iteration_sign_tie(self):
        # Dominant +/- pair of equal magnitude needs the deflation pass.
        gen = np.random.default_rng(3)
        q, _ = np.linalg.qr(gen.standard_normal((210, 210)))
        eigs = gen.uniform(-1.0, 1.0, 210)
        eigs[0], eigs[1] = 5.0, -5.0
        m = (q * eigs) @ q.T
        assert operator_norm(m) == pytest.approx(5.0, rel=1e-9)

    def test_matches_eigendecompose_up_to_50(self):
        for n in (1, 2, 7, 23, 50):
            m = random_symmetric(n, n)
            w, _ = eigendecompose(m)
            assert operator_norm(m) == pytest.approx(np.max(np.abs(w)), rel=1e-9)

    def test_scaling_homogeneity(self):
        m = random_symmetric(8, 5)
        base = operator_norm(m)
        for alpha in (-2.5, 0.25, 7.0):
            assert operator_norm(alpha * m) == pytest.approx(abs(alpha) * base, rel=1e-12)

    def test_rejects_nan(self):
        m = np.eye(3)
        m[0, 1] = np.nan
        with pytest.raises(InvalidInputError):
            operator_norm(m)


class TestSolveSpd:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(solve_spd(np.eye(3), b), b)

    def test_scaled_identity(self):
        b = np.array([4.0, 8.0])
        np.testing.assert_allclose(solve_spd(2.0 * np.eye(2), b), b / 2.0)

    def test_residual_on_random_spd(self):
        m = random_spd(4, 2)
        b = np.random.default_rng(4).standard_normal(4)
        d = solve_spd(m, b)
        assert np.linalg.norm(m @ d - b) <= 1e-10 * (1.0 + np.linalg.norm(b))

    def test_roundtrip_identity(self):
        for seed in range(5):
            m = random_spd(6, seed)
            x = np.random.default_rng(100 + seed).standard_normal(6)
            np.testing.assert_allclose(solve_spd(m, m @ x), x, atol=1e-10 * (1 + np.linalg.norm(x)))

    def test_not_pd_raises_with_min_eigenvalue(self):
        m = np.diag([1.0, -0.5])
        with pytest.raises(SingularSystemError) as info:
            solve_spd(m, np.ones(2))
        assert info.value.min_eigenvalue == pytest.approx(-0.5)


class TestEigendecompose:
    def test_diagonal(self):
        w, _ = eigendecompose(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(w, [1.0, 2.0, 3.0])

    def test_householder_reflector_spectrum(self):
        u = np.array([1.0, 2.0, -1.0, 0.5])
        u /= np.linalg.norm(u)
        m = np.eye(4) - 2.0 * np.outer(u, u)
        w, _ = eigendecompose(m)
        np.testing.assert_allclose(w, [-1.0, 1.0, 1.0, 1.0], atol=1e-12)

    def test_reconstruction_and_orthonormality(self):
        m = random_symmetric(30, 9)
        w, v = eigendecompose(m)
        scale = operator_norm(m)
        assert np.linalg.norm(v @ np.diag(w) @ v.T - m) <= 1e-9 * scale
        assert np.linalg.norm(v.T @ v - np.eye(30)) <= 1e-10
        for i in range(30):
            assert np.linalg.norm(m @ v[:, i] - w[i] * v[:, i]) <= 1e-9 * scale


class TestConstructors:
    def test_as_vector_rejects_matrix(self):
        with pytest.raises(InvalidInputError):
            as_vector(np.eye(2))

    def test_as_symmetric_symmetrizes(self):
        m = np.array([[1.0, 2.0], [0.0, 3.0]])
        out = as_symmetric(m)
        np.testing.assert_allclose(out, out.T)
        np.testing.assert_allclose(out, [[1.0, 1.0], [1.0, 3.0]])

    def test_as_symmetric_rejects_inf(self):
        m = np.eye(2)
        m[1, 1] = np.inf
        with pytest.raises(InvalidInputError):
            as_symmetric(m)
