"""Dense linear-algebra kernels.

Vectors and symmetric matrices are plain float64 numpy arrays.  The
constructors below validate finiteness and symmetrize matrices; everything
downstream assumes inputs passed through them.  Dense only: the problems this
package targets stay at n <= ~500 after feature truncation, where
auditability beats scalability.
"""

import numpy as np

from .errors import InvalidInputError, NumericError, SingularSystemError

# Exact eigendecomposition below this size; power iteration above.
_EXACT_NORM_DIM = 200


def as_vector(x):
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("vector has non-finite entries")
    return v


def as_symmetric(m):
    """Validate, symmetrize ((M + M^T)/2) and return a square float64 array.

    Symmetrization instead of rejection: finite-difference Hessians are
    asymmetric at roundoff level and would otherwise be refused.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


def operator_norm(m):
    """Spectral norm max |eigenvalue| of a symmetric matrix.

    Exact (full eigendecomposition) for n <= 200.  Larger matrices use power
    iteration seeded from the normalized all-ones vector, with a deflation
    pass to catch an opposite-sign extreme eigenvalue of equal magnitude,
    and an exact fallback if the iteration stalls.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    if n <= _EXACT_NORM_DIM:
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))

    lam, v = _power_iteration(a)
    if lam is not None and _is_eigenpair(a, lam, v):
        # Deflate to catch an opposite-sign extreme of equal or larger
        # magnitude (a +lam/-lam tie leaves the plain iteration one-sided).
        lam2, v2 = _power_iteration(a - lam * np.outer(v, v))
        if lam2 is not None:
            return float(max(abs(lam), abs(lam2)))
    # Mixed-eigenvector stall (e.g. exact +s/-s tie): iterate on a @ a,
    # whose dominant eigenvalue is the squared norm regardless of signs.
    lam_sq, v_sq = _power_iteration(a, square=True)
    if lam_sq is not None and lam_sq >= 0 and _is_eigenpair(a @ a, lam_sq, v_sq):
        return float(np.sqrt(lam_sq))
    return float(np.max(np.abs(np.linalg.eigvalsh(a))))


def _is_eigenpair(a, lam, v):
    return np.linalg.norm(a @ v - lam * v) <= 1e-10 * max(1.0, abs(lam))


def _power_iteration(a, max_iters=5000, tol=1e-13, square=False):
    """Dominant (eigenvalue, eigenvector) of a (or a @ a), or (None, None) on stall."""
    n = a.shape[0]
    v = np.ones(n) / np.sqrt(n)

    def apply(vec):
        return a @ (a @ vec) if square else a @ vec

    lam = 0.0
    for _ in range(max_iters):
        w = apply(v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, v
        v_new = w / norm_w
        lam_new = float(v_new @ apply(v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new, v_new
        lam, v = lam_new, v_new
    return None, None


def eigendecompose(m):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues ascending, orthonormal eigenvector matrix V with
    columns V[:, i]).
    """
    a = as_symmetric(m)
    if a.shape[0] > 2000:
        raise InvalidInputError("eigendecompose supports n <= 2000")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}", iterations=None) from exc
    return w, v


def solve_spd(m, b):
    """Solve M d = b for symmetric positive definite M.

    Positive definiteness is checked spectrally (min eig > 1e-12 * max eig);
    failures raise SingularSystemError carrying the offending min eigenvalue.
    """
    a = as_symmetric(m)
    rhs = as_vector(b)
    if a.shape[0] != rhs.shape[0]:
        raise InvalidInputError("matrix/vector dimension mismatch")
    w, v = eigendecompose(a)
    w_min, w_max = float(w[0]), float(w[-1])
    if w_min <= 1e-12 * max(w_max, 0.0) or w_min <= 0.0:
        raise SingularSystemError(
            f"matrix is not positive definite (min eig {w_min:.3e})",
            min_eigenvalue=w_min,
        )
    return v @ ((v.T @ rhs) / w)
