"""Offline analysis: deviation studies, Gauss-Newton bound checks, and the
theory report over persisted traces.

The report trusts nothing precomputed: every derived column is recomputed
from the raw columns and compared against the stored value before any bound
is evaluated.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .baselines import BaselineConfig, run_baseline, solve_to_high_accuracy
from .errors import ConfigError
from .estimators import deviation as matrix_deviation
from .hat import GRAD_DECREASE, HatConfig, VALUE_DECREASE, VIOLATION, run
from .numerics import operator_norm
from .seeding import substream
from .traceio import metadata_path, read_metadata, read_trace

_MAX_STUDY_DIM = 500


@dataclass
class DeltaRow:
    k: int
    grad_norm: float
    deviation_true: float
    delta: float


@dataclass
class DeltaSeries:
    rows: List[DeltaRow]

    @property
    def sup_delta(self):
        return max((r.delta for r in self.rows), default=0.0)

    @property
    def argmax_k(self):
        if not self.rows:
            return None
        return max(self.rows, key=lambda r: r.delta).k


def delta_study(problem, estimator, driver_cfg, iters, scaling=None):
    """Record the relative inexactness delta_k = ||hessian - H_k|| / ||g_k||^(1/2)
    along an optimizer trajectory.

    The driver is either the main optimizer (HatConfig; requires a scaling)
    or a baseline (BaselineConfig); the estimator under study produces its
    matrix at every iterate either way, and the deviation always comes from
    the exact-Hessian oracle.
    """
    if problem.dim > _MAX_STUDY_DIM:
        raise ConfigError(
            f"delta study needs exact Hessians; dim {problem.dim} > {_MAX_STUDY_DIM}")
    if isinstance(driver_cfg, HatConfig):
        if scaling is None:
            raise ConfigError("a HAT-driven study needs a scaling function")
        if driver_cfg.deviation_mode != "oracle":
            raise ConfigError("delta studies require oracle deviation mode")
        cfg = HatConfig(eta=driver_cfg.eta, xi=driver_cfg.xi,
                        epsilon=driver_cfg.epsilon, max_iters=iters,
                        seed=driver_cfg.seed, deviation_mode="oracle",
                        convex=driver_cfg.convex, f_star=driver_cfg.f_star,
                        general_tol=driver_cfg.general_tol)
        result = run(problem, scaling, estimator, cfg)
        rows = [DeltaRow(k=rec.k, grad_norm=rec.grad_norm,
                         deviation_true=rec.deviation, delta=rec.delta)
                for rec in result.trace]
        return DeltaSeries(rows=rows)
    if not isinstance(driver_cfg, BaselineConfig):
        raise ConfigError("driver must be a HatConfig or BaselineConfig")
    return _baseline_delta_study(problem, estimator, driver_cfg, iters)


def _baseline_delta_study(problem, estimator, cfg, iters):
    x = problem.x0.copy()
    estimator.reset()
    rows = []
    stepper = BaselineConfig(kind=cfg.kind, epsilon=cfg.epsilon, max_iters=1,
                             armijo_c=cfg.armijo_c,
                             backtrack_factor=cfg.backtrack_factor,
                             initial_step=cfg.initial_step)
    for k in range(iters):
        g = problem.gradient(x)
        g_norm = float(np.linalg.norm(g))
        if g_norm <= cfg.epsilon:
            break
        h_k = estimator.produce(k, x, g, problem)
        dev = matrix_deviation(h_k, problem.hessian(x))
        rows.append(DeltaRow(k=k, grad_norm=g_norm, deviation_true=dev,
                             delta=dev / math.sqrt(g_norm)))
        step = run_baseline(problem, stepper, x0=x)
        if not step.xs or len(step.xs) < 2:
            break
        x_next = step.xs[-1]
        estimator.observe_step(x_next - x, problem.gradient(x_next) - g)
        x = x_next
    return DeltaSeries(rows=rows)


@dataclass
class GgnBoundReport:
    kind: str
    points: int
    base_max_violation: float
    base_pass: bool
    star_convex_max_violation: Optional[float] = None
    star_convex_pass: Optional[bool] = None
    pl_max_violation: Optional[float] = None
    pl_pass: Optional[bool] = None
    skipped: List[str] = field(default_factory=list)


def verify_ggn_bounds(problem, points, seed, radius=1.0, check_variants=False,
                      slack=1e-9):
    """Sample points and compare ||hessian - ggn|| against the certified
    deviation bounds.

    Base bounds: L * sqrt(2 N f(x)) for squared-residual losses and
    2 L f(x) for cross-entropy losses.  The star-convexity and PL variants
    need a reference optimum; it is obtained by a high-accuracy damped-Newton
    solve and the checks are skipped (not failed) when that solve does not
    reach tolerance or the needed constants are missing.
    """
    if not problem.supports_ggn:
        raise ConfigError(f"problem '{problem.name}' has no Gauss-Newton structure")
    big_l = problem.constants.component_grad_lipschitz
    if big_l is None:
        raise ConfigError("problem lacks a component gradient-Lipschitz constant")
    n_samples = problem.sample_count
    gen = substream(seed, 41)
    xs = gen.uniform(-radius, radius, size=(points, problem.dim))

    x_star = None
    f_star = None
    skipped = []
    if check_variants:
        x_star, f_star, ok = solve_to_high_accuracy(problem, tol=1e-12)
        if not ok:
            skipped.append("reference solve did not reach tolerance")
            x_star = None

    base_violation = -math.inf
    star_violation = -math.inf
    pl_violation = -math.inf
    mu = problem.constants.mu_pl
    for i in range(points):
        x = xs[i]
        left = operator_norm(problem.hessian(x) - problem.ggn(x))
        f_x = problem.value(x)
        if problem.ggn_kind == "l2":
            right = big_l * math.sqrt(max(2.0 * n_samples * f_x, 0.0))
        else:
            right = 2.0 * big_l * f_x
        base_violation = max(base_violation, left - right)
        if x_star is not None:
            g_norm = float(np.linalg.norm(problem.gradient(x)))
            dist = float(np.linalg.norm(x - x_star))
            if problem.ggn_kind == "l2":
                star = (big_l * math.sqrt(2.0 * n_samples * g_norm * dist)
                        + big_l * math.sqrt(max(2.0 * n_samples * f_star, 0.0)))
            else:
                star = 2.0 * big_l * g_norm * dist + 2.0 * big_l * max(f_star, 0.0)
            star_violation = max(star_violation, left - star)
            if mu is not None:
                if problem.ggn_kind == "l2":
                    pl = (big_l * g_norm * math.sqrt(n_samples / mu)
                          + big_l * math.sqrt(max(2.0 * n_samples * f_star, 0.0)))
                else:
                    pl = (big_l / mu * g_norm ** 2 + 2.0 * big_l * max(f_star, 0.0))
                pl_violation = max(pl_violation, left - pl)

    report = GgnBoundReport(kind=problem.ggn_kind, points=points,
                            base_max_violation=base_violation,
                            base_pass=base_violation <= slack, skipped=skipped)
    if x_star is not None:
        report.star_convex_max_violation = star_violation
        report.star_convex_pass = star_violation <= slack
        if mu is not None:
            report.pl_max_violation = pl_violation
            report.pl_pass = pl_violation <= slack
        else:
            report.skipped.append("mu_pl not configured")
    elif check_variants:
        report.skipped.append("star-convex variant skipped (no reference optimum)")
    return report


@dataclass
class ReportSection:
    name: str
    applicable: bool
    passed: bool
    details: str

    def as_dict(self):
        return {"name": self.name, "applicable": self.applicable,
                "passed": self.passed, "details": self.details}


@dataclass
class TheoryReport:
    sections: List[ReportSection]

    @property
    def overall_pass(self):
        return all(s.passed for s in self.sections if s.applicable)

    def as_dict(self):
        return {"overall_pass": self.overall_pass,
                "sections": [s.as_dict() for s in self.sections]}

    def summary_text(self):
        lines = []
        for s in self.sections:
            status = "PASS" if s.passed else "FAIL"
            if not s.applicable:
                status = "SKIP"
            lines.append(f"[{status}] {s.name}: {s.details}")
        lines.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return "\n".join(lines)


def theory_report(trace_path):
    """Audit a persisted trace against every per-iteration guarantee.

    Sections: derived-column consistency, monotone descent, the step-class
    disjunction, the (r_k, A_k) schedule identity, the KKT residual
    distribution, the set-size bounds, and the convex-mode conditions.
    Sections that do not apply to the run (baseline traces, unknown optimum)
    are marked inapplicable rather than failed.
    """
    records = read_trace(trace_path)
    meta = read_metadata(metadata_path(trace_path))
    is_hat = meta.get("method", "hat") == "hat"
    sections = [
        _consistency_section(records),
        _monotonicity_section(records, meta),
        _disjunction_section(records, meta, is_hat),
        _schedule_identity_section(records, meta, is_hat),
        _kkt_section(records, is_hat),
        _set_size_section(records, meta, is_hat),
        _convex_section(records, meta, is_hat),
    ]
    return TheoryReport(sections=sections)


def _consistency_section(records):
    worst = 0.0
    for rec in records:
        recomputed = rec.deviation / math.sqrt(rec.grad_norm)
        worst = max(worst, abs(recomputed - rec.delta) / max(1.0, abs(rec.delta)))
    return ReportSection(
        name="derived-column consistency", applicable=True,
        passed=worst <= 1e-12,
        details=f"max relative delta mismatch {worst:.3e} over {len(records)} rows")


def _values_with_final(records, meta):
    fs = [rec.f for rec in records]
    fs.append(float(meta["f_final"]))
    gs = [rec.grad_norm for rec in records]
    gs.append(float(meta["final_grad_norm"]))
    return fs, gs


def _monotonicity_section(records, meta):
    if not records:
        return ReportSection("monotone descent", True, True, "empty trace (vacuous)")
    fs, _ = _values_with_final(records, meta)
    bad = [i for i in range(len(records))
           if fs[i + 1] > fs[i] + 1e-9 * (1.0 + abs(fs[i]))]
    return ReportSection(
        name="monotone descent", applicable=True, passed=not bad,
        details=f"{len(bad)} increase(s) over {len(records)} steps")


def _disjunction_section(records, meta, is_hat):
    if not is_hat:
        return ReportSection("step-class disjunction", False, True, "baseline trace")
    if not records:
        return ReportSection("step-class disjunction", True, True, "empty trace (vacuous)")
    eta = float(meta["config"]["method"]["eta"])
    xi = float(meta["config"]["method"]["xi"])
    fs, gs = _values_with_final(records, meta)
    violations = 0
    mismatches = 0
    for i, rec in enumerate(records):
        slack = 1e-9 * (1.0 + abs(fs[i]))
        if fs[i + 1] - fs[i] <= -eta * rec.r_k ** 3 * rec.grad_norm ** 1.5 + slack:
            recomputed = VALUE_DECREASE
        elif gs[i + 1] <= xi * rec.grad_norm + slack:
            recomputed = GRAD_DECREASE
        else:
            recomputed = VIOLATION
        if recomputed == VIOLATION:
            violations += 1
        if recomputed != rec.step_class:
            mismatches += 1
    return ReportSection(
        name="step-class disjunction", applicable=True,
        passed=violations == 0 and mismatches == 0,
        details=f"{violations} recomputed violation(s), {mismatches} stored-class mismatch(es)")


def _schedule_identity_section(records, meta, is_hat):
    if not is_hat:
        return ReportSection("schedule identity", False, True, "baseline trace")
    sigma_v = float(meta["sigma_v"])
    l_v = float(meta["l_v"])
    l2 = float(meta["l2"])
    eta = float(meta["config"]["method"]["eta"])
    xi = float(meta["config"]["method"]["xi"])
    denom = 2.0 * sigma_v - l_v
    a_coef = l2 / 2.0 + l_v * (2.0 * eta + l2 / 3.0) / denom
    worst = 0.0
    worst_r = 0.0
    for rec in records:
        lhs = denom * rec.a_k
        rhs = rec.deviation + rec.r_k * math.sqrt(rec.grad_norm) * (2.0 * eta + l2 / 3.0)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
        delta_prime = rec.deviation / math.sqrt(rec.grad_norm) * (1.0 + l_v / denom)
        r_recomputed = xi / (delta_prime + math.sqrt(a_coef * xi))
        worst_r = max(worst_r, abs(r_recomputed - rec.r_k) / max(1.0, rec.r_k))
    return ReportSection(
        name="schedule identity", applicable=True,
        passed=worst <= 1e-12 and worst_r <= 1e-12,
        details=f"max relative residual {worst:.3e}, "
                f"max recomputed-radius mismatch {worst_r:.3e}")


def _kkt_section(records, is_hat):
    if not is_hat:
        return ReportSection("KKT residuals", False, True, "baseline trace")
    worst = max((rec.kkt_residual for rec in records), default=0.0)
    return ReportSection(
        name="KKT residuals", applicable=True, passed=worst <= 1e-6,
        details=f"max residual {worst:.3e}")


def _set_size_section(records, meta, is_hat):
    if not is_hat:
        return ReportSection("set-size bounds", False, True, "baseline trace")
    if not records:
        return ReportSection("set-size bounds", True, True, "empty trace (vacuous)")
    method = meta["config"]["method"]
    eta = float(method["eta"])
    xi = float(method["xi"])
    epsilon = float(method["epsilon"])
    convex = bool(method.get("convex", False))
    n_value = sum(1 for rec in records if rec.step_class == VALUE_DECREASE)
    n_grad = sum(1 for rec in records if rec.step_class == GRAD_DECREASE)
    r_min = min(rec.r_k for rec in records)
    eta_eff = eta * r_min ** 3
    g_max = max(rec.grad_norm for rec in records)
    problems = []
    f_star = meta.get("f_star")
    if convex:
        d_proxy = meta.get("d_proxy")
        if d_proxy is not None and d_proxy > 0:
            bound = math.sqrt(4.0 * float(d_proxy) ** 3 / (epsilon * eta_eff ** 2))
            if n_value > bound:
                problems.append(f"value-set {n_value} > {bound:.3g}")
    else:
        if f_star is not None:
            bound = (records[0].f - float(f_star)) * epsilon ** -1.5 / eta_eff
            if n_value > bound:
                problems.append(f"value-set {n_value} > {bound:.3g}")
        if g_max > epsilon:
            n_max = math.ceil(math.log(epsilon / g_max) / math.log(xi))
            bound = (n_value + 1) * n_max
            if n_grad > bound:
                problems.append(f"grad-set {n_grad} > {bound}")
    return ReportSection(
        name="set-size bounds", applicable=True, passed=not problems,
        details="; ".join(problems) if problems else
        f"value-set {n_value}, grad-set {n_grad} within bounds")


def _convex_section(records, meta, is_hat):
    convex = is_hat and bool(meta["config"]["method"].get("convex", False))
    if not convex:
        return ReportSection("convex-mode conditions", False, True,
                             "not a convex-mode trace")
    if not records:
        return ReportSection("convex-mode conditions", True, True,
                             "empty trace (vacuous)")
    xi = float(meta["config"]["method"]["xi"])
    sigma_v = float(meta["sigma_v"])
    l_v = float(meta["l_v"])
    h_min = meta.get("h_min_eigs")
    h_norms = meta.get("h_norms")
    if h_min is None or h_norms is None:
        return ReportSection("convex-mode conditions", True, False,
                             "estimator spectrum history missing from metadata")
    _, gs = _values_with_final(records, meta)
    excluded = 0
    failures = 0
    for i, rec in enumerate(records):
        if h_min[i] < (l_v - sigma_v) * rec.a_k - 1e-9 * h_norms[i]:
            excluded += 1
            continue
        if gs[i + 1] > rec.grad_norm / xi * (1.0 + 1e-9):
            failures += 1
    return ReportSection(
        name="convex-mode conditions", applicable=True, passed=failures == 0,
        details=f"{failures} growth failure(s), {excluded} iteration(s) excluded "
                f"by the PD condition")
