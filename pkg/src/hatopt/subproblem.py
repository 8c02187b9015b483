"""Trust-region subproblem solvers and KKT certification.

The model is  psi(d) = <g, d> + 0.5 <H d, d> + A * V(center, center + d)
minimized over the Euclidean ball ||d|| <= radius.  Two solvers: an exact
eigendecomposition-based path for quadratic scalings (V = 0.5 <B d, d>,
covering both benchmark geometries) and a projected-gradient path for
arbitrary scalings.  Exactness where structure allows it matters because the
per-iteration audits certify solutions through the KKT conditions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bregman import INTERIOR_MARGIN
from .errors import DomainError, SolverError
from .numerics import as_symmetric, as_vector

# Relative |g| threshold below which a component counts as orthogonal to the
# lowest eigenspace (hard-case detection).
_HARD_CASE_TOL = 1e-10
_BOUNDARY_TOL = 1e-7
_MAX_BISECTIONS = 200
_ARMIJO_C = 1e-4
_MAX_PG_ITERS = 5000


@dataclass
class TrustRegionModel:
    """One iteration's subproblem data."""

    g: np.ndarray
    h: np.ndarray
    a: float
    scaling: object
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.g = as_vector(self.g)
        self.h = as_symmetric(self.h)
        self.center = as_vector(self.center)
        if self.a < 0 or self.radius < 0:
            raise ValueError("A and radius must be nonnegative")

    def psi(self, d):
        """Model value at step d."""
        quad = float(self.g @ d) + 0.5 * float(d @ (self.h @ d))
        if self.a == 0.0:
            return quad
        return quad + self.a * self.scaling.divergence_step(self.center, d)

    def psi_grad(self, d):
        grad = self.g + self.h @ d
        if self.a != 0.0:
            grad = grad + self.a * self.scaling.grad_delta(self.center, d)
        return grad


@dataclass
class SubproblemSolution:
    d: np.ndarray
    lam: float
    on_boundary: bool
    kkt_residual: float
    model_value: float

    @property
    def step_norm(self):
        return float(np.linalg.norm(self.d))


@dataclass
class KktReport:
    """Residuals of the four optimality conditions (normalized)."""

    primal_feas: float
    comp_slack: float
    stationarity: float
    second_order_psd_min_eig: float

    def within(self, tol):
        return (self.primal_feas <= tol and self.comp_slack <= tol
                and self.stationarity <= tol)


def _zero_solution(n):
    return SubproblemSolution(d=np.zeros(n), lam=0.0, on_boundary=True,
                              kkt_residual=0.0, model_value=0.0)


def solve_quadratic_bregman(model):
    """Exact ball-constrained solve for quadratic scalings.

    Finds lam >= 0 with (H + A*B + lam*I) d = -g, the shifted matrix PSD,
    ||d|| <= radius and lam * (||d|| - radius) = 0, working in the eigenbasis
    of H + A*B.  The hard case (gradient orthogonal to the lowest eigenspace)
    is completed with a boundary component along the lowest eigenvector.
    """
    if not model.scaling.is_quadratic:
        raise SolverError("quadratic solver requires a quadratic scaling")
    n = model.g.size
    g_norm = float(np.linalg.norm(model.g))
    radius = float(model.radius)
    if g_norm == 0.0 or radius <= 0.0:
        return _zero_solution(n)

    m0 = model.h + model.a * model.scaling.quadratic_matrix
    w, q = np.linalg.eigh(0.5 * (m0 + m0.T))
    g_hat = q.T @ model.g

    def step_for(lam):
        return -(g_hat / (w + lam))

    def norm_for(lam):
        return float(np.linalg.norm(g_hat / (w + lam)))

    # Interior candidate when the model matrix is PD.
    if w[0] > 0.0:
        d_hat = step_for(0.0)
        norm0 = float(np.linalg.norm(d_hat))
        if norm0 <= radius:
            return _finish_quadratic(model, m0, q @ d_hat, 0.0, radius, g_norm)

    lam_lo = max(0.0, -float(w[0]))
    # Pseudo-norm at lam_lo, treating near-singular directions with
    # negligible gradient as absent (hard-case screening).
    shifted = w + lam_lo
    singular = shifted <= 1e-14 * max(1.0, abs(float(w[-1])) + lam_lo)
    blocked = singular & (np.abs(g_hat) > _HARD_CASE_TOL * g_norm)
    if not np.any(blocked):
        d_reg = np.where(singular, 0.0, -g_hat / np.where(singular, 1.0, shifted))
        norm_reg = float(np.linalg.norm(d_reg))
        if norm_reg <= radius:
            if lam_lo == 0.0:
                # Singular PSD matrix with compatible gradient: interior
                # pseudo-solution.
                return _finish_quadratic(model, m0, q @ d_reg, 0.0, radius, g_norm)
            # Hard case: pad with the lowest eigenvector up to the boundary.
            tau = math.sqrt(max(radius ** 2 - norm_reg ** 2, 0.0))
            sign = -1.0 if g_hat[0] > 0 else 1.0
            d_hat = d_reg.copy()
            d_hat[0] += sign * tau
            return _finish_quadratic(model, m0, q @ d_hat, lam_lo, radius, g_norm)

    # Boundary root: ||d(lam)|| = radius with lam > lam_lo.
    lam_hi = lam_lo + g_norm / radius
    for _ in range(64):
        if norm_for(lam_hi) <= radius:
            break
        lam_hi = lam_lo + 2.0 * (lam_hi - lam_lo)
    else:
        raise SolverError("could not bracket the boundary multiplier",
                          bracket=(lam_lo, lam_hi))
    lo, hi = lam_lo, lam_hi
    lam = hi
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            lam = hi
            break
        norm_mid = norm_for(mid)
        if norm_mid > radius:
            lo = mid
        else:
            hi = mid
            lam = mid
        if abs(norm_mid - radius) <= 1e-13 * radius:
            lam = mid
            break
    else:
        lam = hi
        if abs(norm_for(lam) - radius) > 1e-6 * radius:
            raise SolverError("boundary multiplier search did not converge",
                              bracket=(lo, hi))
    d_hat = step_for(lam)
    return _finish_quadratic(model, m0, q @ d_hat, lam, radius, g_norm)


def _finish_quadratic(model, m0, d, lam, radius, g_norm):
    residual = float(np.linalg.norm((m0 + lam * np.eye(d.size)) @ d + model.g))
    value = float(model.g @ d) + 0.5 * float(d @ (m0 @ d))
    on_boundary = (radius - float(np.linalg.norm(d))) <= _BOUNDARY_TOL * radius
    return SubproblemSolution(d=d, lam=float(lam), on_boundary=bool(on_boundary),
                              kkt_residual=residual / (1.0 + g_norm),
                              model_value=value)


def solve_general_bregman(model, tol=1e-9):
    """Projected-gradient solve for arbitrary scalings.

    Runs projected gradient descent with Armijo backtracking on psi over the
    ball, with extra backtracking to stay strictly inside restricted scaling
    domains.  Several deterministic starts (origin and both lowest-curvature
    boundary points) guard against boundary stationary points that are not
    global; the best final model value wins.
    """
    n = model.g.size
    g_norm = float(np.linalg.norm(model.g))
    radius = float(model.radius)
    if g_norm == 0.0 or radius <= 0.0:
        return _zero_solution(n)

    curvature = model.h + model.a * model.scaling.hess_rho(model.center)
    w, q = np.linalg.eigh(curvature)
    starts = [np.zeros(n)]
    for sign in (-1.0, 1.0):
        cand = sign * radius * q[:, 0]
        cand = _pull_into_domain(model, cand)
        if cand is not None:
            starts.append(cand)

    best = None
    for start in starts:
        d, value = _projected_gradient(model, start, tol, radius)
        if best is None or value < best[1]:
            best = (d, value)
    d, value = best

    grad = model.psi_grad(d)
    step_norm = float(np.linalg.norm(d))
    on_boundary = (radius - step_norm) <= _BOUNDARY_TOL * radius
    lam = 0.0
    if on_boundary and step_norm > 0.0:
        lam = max(0.0, -float(grad @ d) / step_norm ** 2)
    residual = float(np.linalg.norm(grad + lam * d)) / (1.0 + g_norm)
    return SubproblemSolution(d=d, lam=lam, on_boundary=bool(on_boundary),
                              kkt_residual=residual, model_value=value)


def _pull_into_domain(model, d):
    if model.scaling.contains(model.center + d, INTERIOR_MARGIN):
        return d
    for _ in range(80):
        d = 0.5 * d
        if model.scaling.contains(model.center + d, INTERIOR_MARGIN):
            return d
    return None


def _project(d, radius):
    norm = float(np.linalg.norm(d))
    if norm <= radius:
        return d
    return d * (radius / norm)


def _projected_gradient(model, d, tol, radius):
    """Monotone spectral projected gradient: Barzilai-Borwein trial steps
    safeguarded by Armijo backtracking."""
    g_norm = float(np.linalg.norm(model.g))
    value = model.psi(d)
    grad = model.psi_grad(d)
    step = 1.0
    for _ in range(_MAX_PG_ITERS):
        pg_norm = float(np.linalg.norm(d - _project(d - grad, radius)))
        if pg_norm <= tol * (1.0 + g_norm):
            break
        t = step
        exhausted = False
        while True:
            cand = _project(d - t * grad, radius)
            cand = _backtrack_domain(model, d, cand, radius)
            decrease = float(grad @ (cand - d))
            cand_value = model.psi(cand)
            if cand_value <= value + _ARMIJO_C * decrease:
                break
            t *= 0.5
            if t < 1e-16:
                exhausted = True
                break
        if exhausted:
            # No progress resolvable in double precision: accept the iterate
            # when it is close to stationary, fail otherwise.
            if pg_norm <= 1e-5 * (1.0 + g_norm):
                break
            raise SolverError("line search failed in the projected-gradient solver")
        cand_grad = model.psi_grad(cand)
        s = cand - d
        y = cand_grad - grad
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 1e-16 else min(t * 2.0, 1.0)
        step = min(max(step, 1e-12), 1e12)
        d, value, grad = cand, cand_value, cand_grad
    return d, value


def _backtrack_domain(model, d_from, d_to, radius):
    """Shrink the move toward d_from until the target is strictly inside the
    scaling domain."""
    if model.scaling.contains(model.center + d_to, INTERIOR_MARGIN):
        return d_to
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        cand = d_from + mid * (d_to - d_from)
        if model.scaling.contains(model.center + cand, INTERIOR_MARGIN):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    if lo == 0.0:
        raise DomainError("cannot stay inside the scaling domain")
    return _project(d_from + lo * (d_to - d_from), radius)


def check_kkt(model, solution):
    """Report the four KKT residuals for a proposed solution.

    Stationarity uses the step-dependent form
    (H + lam I) d + A (grad_rho(center + d) - grad_rho(center)) + g,
    and the second-order condition reports the minimum eigenvalue of
    H + A * hess_rho(center + d) + lam I.
    """
    d = solution.d
    lam = solution.lam
    radius = float(model.radius)
    step_norm = float(np.linalg.norm(d))
    primal = max(0.0, step_norm - radius) / (1.0 + radius)
    comp = abs(lam * (step_norm - radius)) / (1.0 + lam)
    stationarity_vec = (model.h + lam * np.eye(d.size)) @ d + model.g
    if model.a != 0.0:
        stationarity_vec = stationarity_vec + model.a * model.scaling.grad_delta(
            model.center, d)
    stationarity = float(np.linalg.norm(stationarity_vec)) / (1.0 + float(np.linalg.norm(model.g)))
    shifted = model.h + model.a * model.scaling.hess_rho(model.center + d) + lam * np.eye(d.size)
    min_eig = float(np.linalg.eigvalsh(0.5 * (shifted + shifted.T))[0])
    return KktReport(primal_feas=primal, comp_slack=comp,
                     stationarity=stationarity, second_order_psd_min_eig=min_eig)
