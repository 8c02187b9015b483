"""Reference optimizers for comparison runs.

Gradient descent with Armijo backtracking and a damped (Levenberg-shifted)
Newton method.  Both emit the same trace records as the main optimizer so
they share persistence and reporting; schedule-specific columns are zeroed
and the step class is the neutral "baseline".
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hat import (
    IterationRecord,
    RunResult,
    VERDICT_CONVERGED,
    VERDICT_MAX_ITERS,
    VERDICT_SOLVER_FAILURE,
)

BASELINE_STEP = "baseline"


@dataclass
class BaselineConfig:
    kind: str  # "gd-backtracking" | "damped-newton"
    epsilon: float
    max_iters: int
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gd-backtracking", "damped-newton"):
            raise ConfigError(f"unknown baseline kind {self.kind!r}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack_factor < 1:
            raise ConfigError("line-search parameters out of range")
        if not self.initial_step > 0:
            raise ConfigError("initial_step must be positive")


def _armijo(problem, x, f, g, direction, cfg):
    """Backtrack from initial_step until the Armijo condition holds.

    Returns (t, x_next, f_next) or None on failure.
    """
    slope = float(g @ direction)
    t = cfg.initial_step
    while t >= 1e-16:
        x_next = x + t * direction
        f_next = problem.value(x_next)
        if f_next <= f + cfg.armijo_c * t * slope:
            return t, x_next, f_next
        t *= cfg.backtrack_factor
    return None


def run_baseline(problem, cfg, x0=None):
    """Drive a baseline to ||g|| <= epsilon, the iteration budget, or a
    line-search failure."""
    x = problem.x0.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    trace = []
    xs = [x.copy()]
    f = problem.value(x)
    g = problem.gradient(x)
    g_norm = float(np.linalg.norm(g))

    def finish(verdict):
        return RunResult(final_x=x, trace=trace, verdict=verdict, f_final=f,
                         final_grad_norm=g_norm, xs=xs)

    for k in range(cfg.max_iters):
        if g_norm <= cfg.epsilon:
            return finish(VERDICT_CONVERGED)
        started = time.perf_counter_ns()
        shift = 0.0
        if cfg.kind == "damped-newton":
            h = problem.hessian(x)
            min_eig = float(np.linalg.eigvalsh(h)[0])
            shift = max(0.0, -min_eig) + 1e-8
            direction = np.linalg.solve(h + shift * np.eye(x.size), -g)
        else:
            direction = -g
        outcome = _armijo(problem, x, f, g, direction, cfg)
        wall = time.perf_counter_ns() - started
        if outcome is None:
            trace.append(_record(k, f, g_norm, shift, 0.0, wall))
            return finish(VERDICT_SOLVER_FAILURE)
        t, x_next, f_next = outcome
        step_norm = float(np.linalg.norm(t * direction))
        trace.append(_record(k, f, g_norm, shift, step_norm, wall))
        x, f = x_next, f_next
        g = problem.gradient(x)
        g_norm = float(np.linalg.norm(g))
        xs.append(x.copy())

    if g_norm <= cfg.epsilon:
        return finish(VERDICT_CONVERGED)
    return finish(VERDICT_MAX_ITERS)


def _record(k, f, g_norm, shift, step_norm, wall):
    return IterationRecord(
        k=k, f=f, grad_norm=g_norm, deviation=0.0, delta=0.0, r_k=0.0,
        a_k=0.0, radius=0.0, lam=shift, step_norm=step_norm,
        on_boundary=False, step_class=BASELINE_STEP, kkt_residual=0.0,
        wall_nanos=int(wall))


def solve_to_high_accuracy(problem, tol=1e-12, max_iters=500, x0=None):
    """Damped Newton to ||g|| <= tol; returns (x, f, converged).

    Used to precompute reference optima for convex-mode stopping and the
    star-convexity corollary checks.
    """
    cfg = BaselineConfig(kind="damped-newton", epsilon=tol, max_iters=max_iters)
    result = run_baseline(problem, cfg, x0=x0)
    return result.final_x, result.f_final, result.verdict == VERDICT_CONVERGED
