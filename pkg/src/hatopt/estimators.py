"""Hessian approximation strategies.

Each estimator produces a symmetric matrix for the current iterate through a
uniform interface and optionally ingests the step/gradient-difference pair
afterwards (quasi-Newton updates).  Quasi-Newton state is kept in direct form
B_k (approximating the Hessian itself, secant B_{k+1} s = y) because the
optimizer consumes the matrix inside a quadratic model; inverse maintenance
would buy nothing here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedProblemError
from .numerics import as_symmetric, as_vector, operator_norm
from .seeding import TAG_SPARSIFY, rademacher, substream

# Curvature-degeneracy threshold shared by the quasi-Newton skip rules.
_SKIP_TOL = 1e-8


@dataclass
class InexactnessBound:
    """Declared deviation bound ||hessian - H_k|| <= m * ||gradient||^beta."""

    m: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and np.isfinite(self.beta)) or self.m < 0 or self.beta < 0:
            raise InvalidInputError("bound parameters must be finite and >= 0")

    def evaluate(self, grad_norm):
        return float(self.m * grad_norm ** self.beta)


class HessianEstimator:
    """Base interface: produce(k, x, g, problem) and observe_step(s, y)."""

    def produce(self, k, x, g, problem):
        raise NotImplementedError

    def observe_step(self, s, y):
        """Ingest s = x_{k+1} - x_k and y = g_{k+1} - g_k; default no-op."""

    def reset(self):
        """Drop per-run state; default no-op."""


class ExactHessian(HessianEstimator):
    """Baseline with zero deviation: returns the problem's true Hessian."""

    def produce(self, k, x, g, problem):
        return problem.hessian(x)


def _default_init(x, g):
    scale = np.linalg.norm(g) / max(1.0, np.linalg.norm(x))
    return max(scale, 1e-8) * np.eye(x.size)


class _QuasiNewton(HessianEstimator):
    def __init__(self, init=None):
        self._init = None if init is None else as_symmetric(init)
        self._b = None

    def reset(self):
        self._b = None

    def produce(self, k, x, g, problem):
        if self._b is None:
            self._b = self._init.copy() if self._init is not None else _default_init(x, g)
        return self._b.copy()

    def observe_step(self, s, y):
        if self._b is None:
            return
        s = as_vector(s)
        y = as_vector(y)
        self._update(s, y)
        self._b = 0.5 * (self._b + self._b.T)

    def _update(self, s, y):
        raise NotImplementedError


class BFGS(_QuasiNewton):
    """Direct rank-2 update; skipped when <s, y> is degenerate."""

    def _update(self, s, y):
        sy = float(s @ y)
        if sy <= _SKIP_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            return
        bs = self._b @ s
        sbs = float(s @ bs)
        if sbs <= 0:
            return
        self._b = self._b - np.outer(bs, bs) / sbs + np.outer(y, y) / sy


class DFP(_QuasiNewton):
    """Direct rank-2 update of the projected form; same skip rule as BFGS."""

    def _update(self, s, y):
        sy = float(s @ y)
        if sy <= _SKIP_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            return
        n = s.size
        proj = np.eye(n) - np.outer(y, s) / sy
        self._b = proj @ self._b @ proj.T + np.outer(y, y) / sy


class SR1(_QuasiNewton):
    """Symmetric rank-1 update B + v v^T / <v, s> with v = y - B s.

    No positive-definiteness guarantee; indefinite output is legitimate.
    """

    def _update(self, s, y):
        v = y - self._b @ s
        vs = float(v @ s)
        if abs(vs) <= _SKIP_TOL * np.linalg.norm(v) * np.linalg.norm(s):
            return
        self._b = self._b + np.outer(v, v) / vs


class HutchinsonDiagonal(HessianEstimator):
    """Diagonal estimate mean_j z_j * (H z_j) with Rademacher probes.

    Probe vectors come from a counter-based stream keyed by
    (seed, iteration, probe index), so traces are reproducible regardless of
    evaluation order.  mode="basis" replaces the probes with the full
    coordinate basis, which recovers the exact diagonal.
    """

    def __init__(self, probes, seed, mode="rademacher"):
        if probes < 1:
            raise InvalidInputError("need at least one probe")
        if mode not in ("rademacher", "basis"):
            raise InvalidInputError(f"unknown probe mode {mode!r}")
        self.probes = int(probes)
        self.seed = int(seed)
        self.mode = mode

    def produce(self, k, x, g, problem):
        h = problem.hessian(x)
        n = h.shape[0]
        if self.mode == "basis":
            return np.diag(np.diag(h))
        acc = np.zeros(n)
        for j in range(self.probes):
            z = rademacher(self.seed, n, k, j)
            acc += z * (h @ z)
        return np.diag(acc / self.probes)


class GaussNewton(HessianEstimator):
    """Gauss-Newton matrix of the problem's per-sample model structure.

    kind "l2" covers squared-residual losses (sum of model-gradient outer
    products); kind "softmax" covers cross-entropy losses (Jacobian sandwich
    of the softmax curvature), which coincides with the empirical Fisher
    matrix for those losses.
    """

    def __init__(self, kind):
        if kind not in ("l2", "softmax"):
            raise InvalidInputError(f"unknown Gauss-Newton kind {kind!r}")
        self.kind = kind

    def produce(self, k, x, g, problem):
        if not problem.supports_ggn:
            raise UnsupportedProblemError(
                f"problem '{problem.name}' exposes no per-sample model structure")
        if problem.ggn_kind != self.kind:
            raise UnsupportedProblemError(
                f"problem '{problem.name}' is {problem.ggn_kind!r}-structured, "
                f"estimator expects {self.kind!r}")
        return problem.ggn(x)


class LazyUpdates(HessianEstimator):
    """Reuse the wrapped estimator's matrix, refreshing every `period` iterations."""

    def __init__(self, inner, period):
        if period < 1:
            raise InvalidInputError("period must be >= 1")
        self.inner = inner
        self.period = int(period)
        self._cache = None

    def reset(self):
        self._cache = None
        self.inner.reset()

    def produce(self, k, x, g, problem):
        if k % self.period == 0 or self._cache is None:
            self._cache = self.inner.produce(k, x, g, problem)
        return self._cache.copy()

    def observe_step(self, s, y):
        self.inner.observe_step(s, y)


class Compressed(HessianEstimator):
    """Sparsify the wrapped estimator's output.

    scheme "top-k" keeps the ceil(fraction * count) largest-magnitude entries
    of the upper triangle and mirrors them; "random-sparsify" keeps each
    upper-triangle entry with probability `fraction` and rescales the
    survivors by 1/fraction, which makes the compressor unbiased.
    """

    def __init__(self, inner, scheme, fraction, seed=0):
        if scheme not in ("top-k", "random-sparsify"):
            raise InvalidInputError(f"unknown compression scheme {scheme!r}")
        if not 0.0 < fraction <= 1.0:
            raise InvalidInputError("fraction must be in (0, 1]")
        self.inner = inner
        self.scheme = scheme
        self.fraction = float(fraction)
        self.seed = int(seed)

    def reset(self):
        self.inner.reset()

    def produce(self, k, x, g, problem):
        full = self.inner.produce(k, x, g, problem)
        if self.fraction == 1.0:
            return full
        n = full.shape[0]
        iu = np.triu_indices(n)
        values = full[iu]
        if self.scheme == "top-k":
            keep = int(np.ceil(self.fraction * values.size))
            order = np.argsort(-np.abs(values), kind="stable")
            mask = np.zeros(values.size, dtype=bool)
            mask[order[:keep]] = True
            kept = np.where(mask, values, 0.0)
        else:
            gen = substream(self.seed, TAG_SPARSIFY, k)
            mask = gen.random(values.size) < self.fraction
            kept = np.where(mask, values / self.fraction, 0.0)
        out = np.zeros_like(full)
        out[iu] = kept
        out = out + np.triu(out, 1).T
        return out

    def observe_step(self, s, y):
        self.inner.observe_step(s, y)


def deviation(h_k, exact):
    """Operator norm of (exact - H_k); the quantity the schedule consumes."""
    h_k = as_symmetric(h_k)
    exact = as_symmetric(exact)
    if h_k.shape != exact.shape:
        raise InvalidInputError("deviation requires matrices of equal shape")
    return operator_norm(exact - h_k)
