"""The HAT optimizer: schedule, main loop, step classification, audits.

Each iteration builds a quadratic model with the estimator's matrix H_k,
regularizes it with A_k times the Bregman divergence, and constrains the step
to the ball of radius r_k * ||g_k||^(1/2).  The (r_k, A_k) schedule follows
the closed form that guarantees every step either decreases the value by
eta * r_k^3 * ||g_k||^(3/2) or contracts the gradient norm by xi; a step that
does neither is a theory breach and is recorded as a violation.
"""

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, SolverError
from .estimators import InexactnessBound, deviation as matrix_deviation
from .subproblem import (
    KktReport,
    TrustRegionModel,
    check_kkt,
    solve_general_bregman,
    solve_quadratic_bregman,
)

# Largest xi for which the convex-mode gradient-growth guarantee holds.
GOLDEN_XI = (math.sqrt(5.0) - 1.0) / 2.0

VALUE_DECREASE = "value-decrease"
GRAD_DECREASE = "grad-decrease"
VIOLATION = "violation"

VERDICT_CONVERGED = "converged"
VERDICT_MAX_ITERS = "max_iters"
VERDICT_VIOLATION_HALT = "violation_halt"
VERDICT_SOLVER_FAILURE = "solver_failure"


@dataclass
class HatConfig:
    eta: float
    xi: float
    epsilon: float
    max_iters: int
    seed: int = 0
    deviation_mode: str = "oracle"  # "oracle" | "bound"
    bound: Optional[InexactnessBound] = None
    convex: bool = False
    f_star: Optional[float] = None
    general_tol: float = 1e-9  # subproblem tolerance for non-quadratic scalings

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if not 0 < self.xi < 1:
            raise ConfigError("xi must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")
        if self.deviation_mode not in ("oracle", "bound"):
            raise ConfigError(f"unknown deviation mode {self.deviation_mode!r}")
        if self.deviation_mode == "bound" and self.bound is None:
            raise ConfigError("bound mode requires an InexactnessBound")
        if self.convex:
            if self.f_star is None:
                raise ConfigError("convex mode requires f_star")
            if self.xi > GOLDEN_XI + 1e-15:
                raise ConfigError(
                    f"convex mode requires xi <= (sqrt(5)-1)/2 ~= {GOLDEN_XI:.6f}")


@dataclass
class IterationRecord:
    k: int
    f: float
    grad_norm: float
    deviation: float
    delta: float
    r_k: float
    a_k: float
    radius: float
    lam: float
    step_norm: float
    on_boundary: bool
    step_class: str
    kkt_residual: float
    wall_nanos: int


@dataclass
class RunResult:
    final_x: np.ndarray
    trace: List[IterationRecord]
    verdict: str
    f_final: float
    final_grad_norm: float
    xs: List[np.ndarray] = field(default_factory=list)
    h_min_eigs: List[float] = field(default_factory=list)
    h_norms: List[float] = field(default_factory=list)
    kkt_reports: List[KktReport] = field(default_factory=list)

    @property
    def r_min(self):
        return min((rec.r_k for rec in self.trace), default=float("nan"))

    @property
    def g_max(self):
        return max((rec.grad_norm for rec in self.trace), default=float("nan"))

    def count(self, step_class):
        return sum(1 for rec in self.trace if rec.step_class == step_class)


def schedule(g_norm, dev, cfg, scaling, l2):
    """Per-iteration (r_k, A_k) from the closed-form selection rule.

    r_k = xi / (Delta'_k + sqrt(a*xi)) with
    Delta'_k = (dev / g_norm^(1/2)) * (1 + L_V / (2 sigma_V - L_V)) and
    a = L2/2 + L_V (2 eta + L2/3) / (2 sigma_V - L_V);
    A_k = (dev + r_k g_norm^(1/2) (2 eta + L2/3)) / (2 sigma_V - L_V).
    """
    if g_norm <= 0:
        raise ConfigError("schedule requires a positive gradient norm")
    denom = 2.0 * scaling.sigma_v - scaling.l_v
    sqrt_g = math.sqrt(g_norm)
    delta_prime = (dev / sqrt_g) * (1.0 + scaling.l_v / denom)
    a = l2 / 2.0 + scaling.l_v * (2.0 * cfg.eta + l2 / 3.0) / denom
    r_k = cfg.xi / (delta_prime + math.sqrt(a * cfg.xi))
    a_k = (dev + r_k * sqrt_g * (2.0 * cfg.eta + l2 / 3.0)) / denom
    return r_k, a_k


def deviation_for_schedule(x, h_k, problem, cfg, g_norm):
    """True deviation ||hessian(x) - H_k|| in oracle mode; M * ||g||^beta in
    bound mode."""
    if cfg.deviation_mode == "oracle":
        return matrix_deviation(h_k, problem.hessian(x))
    return cfg.bound.evaluate(g_norm)


def classify_step(f_k, f_next, g_norm, g_next_norm, r_k, cfg):
    """Classify one step against the two per-iteration guarantees.

    Value decrease wins when both hold (the value-decrease set is counted
    first by the iteration-count bounds).  Slack absorbs roundoff only.
    """
    slack = 1e-9 * (1.0 + abs(f_k))
    if f_next - f_k <= -cfg.eta * r_k ** 3 * g_norm ** 1.5 + slack:
        return VALUE_DECREASE
    if g_next_norm <= cfg.xi * g_norm + slack:
        return GRAD_DECREASE
    return VIOLATION


def _solve(model, cfg):
    if model.scaling.is_quadratic:
        return solve_quadratic_bregman(model)
    return solve_general_bregman(model, tol=cfg.general_tol)


def run(problem, scaling, estimator, cfg, x0=None):
    """Drive the optimizer until the target accuracy, an iteration budget,
    a theory breach, or a subproblem failure.

    Nonconvex mode stops at ||g_k|| <= epsilon (checked at the start of the
    iteration, so the trace ends at the first stationary iterate); convex
    mode stops at f(x_k) - f_star <= epsilon.  In oracle mode a violation
    step halts the run; in bound mode the deviation fed to the schedule is
    doubled (persistently) and the step retried once before halting.
    """
    x = problem.x0.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    estimator.reset()
    l2 = problem.constants.hessian_lipschitz
    trace = []
    xs = [x.copy()]
    h_min_eigs = []
    h_norms = []
    kkt_reports = []

    f = problem.value(x)
    g = problem.gradient(x)
    g_norm = float(np.linalg.norm(g))

    def finish(verdict):
        return RunResult(final_x=x, trace=trace, verdict=verdict, f_final=f,
                         final_grad_norm=g_norm, xs=xs,
                         h_min_eigs=h_min_eigs, h_norms=h_norms,
                         kkt_reports=kkt_reports)

    def converged():
        if cfg.convex:
            return f - cfg.f_star <= cfg.epsilon
        return g_norm <= cfg.epsilon

    # Bound mode halves the confidence in the declared bound on every
    # violation by doubling the deviation fed to the schedule; the doubling
    # persists for the rest of the run.
    bound_multiplier = 1.0

    for k in range(cfg.max_iters):
        if converged():
            return finish(VERDICT_CONVERGED)
        started = time.perf_counter_ns()
        h_k = estimator.produce(k, x, g, problem)
        h_eigs = np.linalg.eigvalsh(h_k)
        dev = deviation_for_schedule(x, h_k, problem, cfg, g_norm)

        attempts = 1 if cfg.deviation_mode == "oracle" else 2
        dev_used = dev * bound_multiplier
        accepted = False
        for attempt in range(attempts):
            r_k, a_k = schedule(g_norm, dev_used, cfg, scaling, l2)
            radius = r_k * math.sqrt(g_norm)
            model = TrustRegionModel(g=g, h=h_k, a=a_k, scaling=scaling,
                                     center=x, radius=radius)
            try:
                sol = _solve(model, cfg)
            except SolverError:
                return finish(VERDICT_SOLVER_FAILURE)
            x_next = x + sol.d
            f_next = problem.value(x_next)
            g_next = problem.gradient(x_next)
            g_next_norm = float(np.linalg.norm(g_next))
            step_class = classify_step(f, f_next, g_norm, g_next_norm, r_k, cfg)
            monotone = f_next <= f + 1e-9 * (1.0 + abs(f))
            if step_class != VIOLATION and monotone:
                accepted = True
                break
            if attempt + 1 < attempts:
                bound_multiplier *= 2.0
                dev_used = 2.0 * dev_used
        wall = time.perf_counter_ns() - started

        trace.append(IterationRecord(
            k=k, f=f, grad_norm=g_norm, deviation=dev_used,
            delta=dev_used / math.sqrt(g_norm), r_k=r_k, a_k=a_k,
            radius=radius, lam=sol.lam, step_norm=sol.step_norm,
            on_boundary=sol.on_boundary, step_class=step_class,
            kkt_residual=sol.kkt_residual, wall_nanos=int(wall)))
        h_min_eigs.append(float(h_eigs[0]))
        h_norms.append(float(np.max(np.abs(h_eigs))))
        kkt_reports.append(check_kkt(model, sol))

        if not accepted:
            return finish(VERDICT_VIOLATION_HALT)

        estimator.observe_step(sol.d, g_next - g)
        x, f, g, g_norm = x_next, f_next, g_next, g_next_norm
        xs.append(x.copy())

    if converged():
        return finish(VERDICT_CONVERGED)
    return finish(VERDICT_MAX_ITERS)


@dataclass
class CountReport:
    """Iteration-count audit against the set-size bounds."""

    n_value: int
    n_grad: int
    n_violation: int
    r_min: float
    eta_eff: float
    g_max: float
    value_bound: Optional[float]
    value_bound_pass: Optional[bool]
    grad_bound: Optional[float]
    grad_bound_pass: Optional[bool]
    convex_value_bound: Optional[float] = None
    convex_value_bound_pass: Optional[bool] = None
    d_proxy: Optional[float] = None

    @property
    def passed(self):
        checks = [self.value_bound_pass, self.grad_bound_pass,
                  self.convex_value_bound_pass]
        return all(c for c in checks if c is not None)


def audit_iteration_counts(result, cfg, problem, f_star=None):
    """Check |value-decrease set| and |grad-decrease set| against their
    proven bounds, with eta replaced by eta * r_min^3.

    The value-set bound needs f_star (problem constant or argument); it is
    reported as skipped when unknown.  In convex mode the tighter bound
    sqrt(4 D^3 / (eps * eta_eff^2)) is also checked with D proxied by the
    largest distance from any iterate to the final one.
    """
    n_value = result.count(VALUE_DECREASE)
    n_grad = result.count(GRAD_DECREASE)
    n_violation = result.count(VIOLATION)
    if not result.trace:
        return CountReport(n_value=0, n_grad=0, n_violation=0,
                           r_min=float("nan"), eta_eff=float("nan"),
                           g_max=float("nan"), value_bound=None,
                           value_bound_pass=None, grad_bound=None,
                           grad_bound_pass=None)
    r_min = result.r_min
    eta_eff = cfg.eta * r_min ** 3
    g_max = result.g_max
    if f_star is None:
        f_star = cfg.f_star if cfg.convex else problem.constants.f_star

    # The two gradient-indexed bounds presume every recorded iterate has
    # ||g_k|| > epsilon, which only the nonconvex stopping rule guarantees.
    value_bound = None
    value_pass = None
    if not cfg.convex and f_star is not None:
        f0 = result.trace[0].f
        value_bound = (f0 - f_star) * cfg.epsilon ** -1.5 / eta_eff
        value_pass = n_value <= value_bound

    grad_bound = None
    grad_pass = None
    if not cfg.convex and g_max > cfg.epsilon:
        n_max = math.ceil(math.log(cfg.epsilon / g_max) / math.log(cfg.xi))
        grad_bound = (n_value + 1) * n_max
        grad_pass = n_grad <= grad_bound

    convex_bound = None
    convex_pass = None
    d_proxy = None
    if cfg.convex and result.xs:
        final = result.xs[-1]
        d_proxy = max(float(np.linalg.norm(p - final)) for p in result.xs)
        if d_proxy > 0:
            convex_bound = math.sqrt(4.0 * d_proxy ** 3 / (cfg.epsilon * eta_eff ** 2))
            convex_pass = n_value <= convex_bound

    return CountReport(n_value=n_value, n_grad=n_grad, n_violation=n_violation,
                       r_min=r_min, eta_eff=eta_eff, g_max=g_max,
                       value_bound=value_bound, value_bound_pass=value_pass,
                       grad_bound=grad_bound, grad_bound_pass=grad_pass,
                       convex_value_bound=convex_bound,
                       convex_value_bound_pass=convex_pass, d_proxy=d_proxy)


@dataclass
class ConvexConditionReport:
    """Per-iteration convex-mode checks.

    pd_failures: iterations where H_k >= (L_V - sigma_V) A_k I fails (these
    are excluded from the growth check and reported, not fatal).
    growth_failures: iterations passing the PD check whose successor gradient
    grew by more than 1/xi.
    """

    pd_failures: List[int]
    growth_failures: List[int]
    checked: int

    @property
    def passed(self):
        return not self.growth_failures


def audit_convex_conditions(result, scaling, cfg):
    gap = scaling.l_v - scaling.sigma_v
    pd_failures = []
    growth_failures = []
    for i, rec in enumerate(result.trace):
        pd_ok = result.h_min_eigs[i] >= gap * rec.a_k - 1e-9 * result.h_norms[i]
        if not pd_ok:
            pd_failures.append(rec.k)
            continue
        g_next = (result.trace[i + 1].grad_norm if i + 1 < len(result.trace)
                  else result.final_grad_norm)
        if g_next > rec.grad_norm / cfg.xi * (1.0 + 1e-9):
            growth_failures.append(rec.k)
    return ConvexConditionReport(pd_failures=pd_failures,
                                 growth_failures=growth_failures,
                                 checked=len(result.trace))
