"""Scaling functions and their Bregman divergences.

A scaling function rho generates V(x, y) = rho(y) - rho(x) - <grad rho(x), y - x>
and carries certified strong-convexity / gradient-Lipschitz constants
(sigma_V, L_V).  Construction rejects 2*sigma_V <= L_V outright because the
optimizer's parameter schedule divides by 2*sigma_V - L_V.
"""

import numpy as np

from .errors import ConstantsError, DomainError, InvalidInputError
from .numerics import as_symmetric, as_vector

# Strict-interior margin for restricted domains; solvers backtrack to it.
INTERIOR_MARGIN = 1e-8


class ScalingFunction:
    """Bregman generator with certified (sigma_V, L_V)."""

    def __init__(self, rho_fn, grad_fn, hess_fn, sigma_v, l_v, name="",
                 quadratic_matrix=None, domain_shift=None,
                 stable_divergence=None, stable_grad_delta=None):
        if not (np.isfinite(sigma_v) and np.isfinite(l_v)) or sigma_v <= 0:
            raise InvalidInputError("sigma_V must be positive and finite")
        if sigma_v > l_v * (1.0 + 1e-12):
            raise ConstantsError(f"sigma_V = {sigma_v} exceeds L_V = {l_v}")
        if 2.0 * sigma_v <= l_v:
            raise ConstantsError(
                f"need 2*sigma_V > L_V, got sigma_V = {sigma_v}, L_V = {l_v}")
        self._rho_fn = rho_fn
        self._grad_fn = grad_fn
        self._hess_fn = hess_fn
        self.sigma_v = float(sigma_v)
        self.l_v = float(l_v)
        self.name = name
        # Present iff rho is a pure quadratic 0.5 <Bx, x>.
        self.quadratic_matrix = quadratic_matrix
        # Present iff the domain is the shifted orthant {x : x_i > -theta}.
        self.domain_shift = domain_shift
        self._stable_divergence = stable_divergence
        self._stable_grad_delta = stable_grad_delta

    @property
    def is_quadratic(self):
        return self.quadratic_matrix is not None

    def contains(self, x, margin=0.0):
        if self.domain_shift is None:
            return True
        return bool(np.all(np.asarray(x) > -self.domain_shift + margin))

    def _require_in_domain(self, x, what):
        if not self.contains(x):
            raise DomainError(f"{what} outside the scaling-function domain")

    def rho(self, x):
        x = as_vector(x)
        self._require_in_domain(x, "point")
        return float(self._rho_fn(x))

    def grad_rho(self, x):
        x = as_vector(x)
        self._require_in_domain(x, "point")
        return as_vector(self._grad_fn(x))

    def hess_rho(self, x):
        x = as_vector(x)
        self._require_in_domain(x, "point")
        return as_symmetric(self._hess_fn(x))

    def divergence(self, x, y):
        """V(x, y) >= (sigma_V / 2) ||y - x||^2 >= 0."""
        x = as_vector(x)
        y = as_vector(y)
        self._require_in_domain(x, "first point")
        self._require_in_domain(y, "second point")
        return self.divergence_step(x, y - x)

    def divergence_step(self, x, d):
        """V(x, x + d), evaluated in a cancellation-free form when available.

        The defining expression rho(x+d) - rho(x) - <grad rho(x), d> loses all
        precision for small steps; solvers that multiply V by large weights
        need the stable path.
        """
        if self._stable_divergence is not None:
            return float(self._stable_divergence(x, d))
        return float(self._rho_fn(x + d) - self._rho_fn(x) - self._grad_fn(x) @ d)

    def grad_delta(self, x, d):
        """grad rho(x + d) - grad rho(x), in stable form when available."""
        if self._stable_grad_delta is not None:
            return self._stable_grad_delta(x, d)
        return self._grad_fn(x + d) - self._grad_fn(x)


def divergence(scaling, x, y):
    return scaling.divergence(x, y)


def make_quadratic_scaling(b):
    """rho(x) = 0.5 <Bx, x> for positive definite B.

    Certified constants are the extreme eigenvalues of B: sigma_V = lambda_min,
    L_V = lambda_max.  Fails unless 2*lambda_min > lambda_max.
    """
    b = as_symmetric(b)
    eigs = np.linalg.eigvalsh(b)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    if lam_min <= 0:
        raise InvalidInputError(f"scaling matrix is not PD (min eig {lam_min:.3e})")
    return ScalingFunction(
        rho_fn=lambda x: 0.5 * float(x @ (b @ x)),
        grad_fn=lambda x: b @ x,
        hess_fn=lambda x: b,
        sigma_v=lam_min, l_v=lam_max,
        name="quadratic", quadratic_matrix=b,
        stable_divergence=lambda x, d: 0.5 * float(d @ (b @ d)),
        stable_grad_delta=lambda x, d: b @ d)


def euclidean_scaling(n):
    """rho(x) = 0.5 ||x||^2; sigma_V = L_V = 1."""
    scaling = make_quadratic_scaling(np.eye(n))
    scaling.name = "euclidean"
    return scaling


def make_entropic_simplex_scaling(b, theta, n):
    """rho(x) = 0.5 <Bx, x> + theta * sum (x_i + theta) ln(x_i + theta).

    Domain is the shifted orthant {x : x_i > -theta}.  Certified constants
    sigma_V = lambda_min + theta / (1 + n*theta) and L_V = lambda_max + 1 are
    adopted as declared; the sampled sandwich audit is the runtime check.
    """
    b = as_symmetric(b)
    if b.shape[0] != n:
        raise InvalidInputError("scaling matrix dimension does not match n")
    if not np.isfinite(theta) or theta <= 0:
        raise InvalidInputError("theta must be positive")
    eigs = np.linalg.eigvalsh(b)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    if lam_min <= 0:
        raise InvalidInputError(f"scaling matrix is not PD (min eig {lam_min:.3e})")
    theta = float(theta)

    def rho(x):
        shifted = x + theta
        return 0.5 * float(x @ (b @ x)) + theta * float(np.sum(shifted * np.log(shifted)))

    def grad(x):
        return b @ x + theta * (np.log(x + theta) + 1.0)

    def hess(x):
        return b + theta * np.diag(1.0 / (x + theta))

    def stable_divergence(x, d):
        # Entropy part per coordinate: (u+delta) ln((u+delta)/u) - delta
        # with u = x + theta; log1p keeps precision for small steps.
        u = x + theta
        entropy = np.sum((u + d) * np.log1p(d / u) - d)
        return 0.5 * float(d @ (b @ d)) + theta * float(entropy)

    def stable_grad_delta(x, d):
        return b @ d + theta * np.log1p(d / (x + theta))

    return ScalingFunction(
        rho_fn=rho, grad_fn=grad, hess_fn=hess,
        sigma_v=lam_min + theta / (1.0 + n * theta), l_v=lam_max + 1.0,
        name="entropic", domain_shift=theta,
        stable_divergence=stable_divergence, stable_grad_delta=stable_grad_delta)


def random_spd_scaling(n, lam_min, lam_max, seed):
    """Quadratic scaling from a random symmetric matrix with spectrum in
    [lam_min, lam_max]; the endpoints are attained so the certified constants
    equal the requested ones."""
    from .seeding import substream

    if not 0 < lam_min <= lam_max:
        raise InvalidInputError("need 0 < lam_min <= lam_max")
    gen = substream(seed, 23)
    q, _ = np.linalg.qr(gen.standard_normal((n, n)))
    eigs = gen.uniform(lam_min, lam_max, size=n)
    if n >= 2:
        eigs[0], eigs[-1] = lam_min, lam_max
    else:
        eigs[0] = lam_min
    return make_quadratic_scaling((q * eigs) @ q.T)
