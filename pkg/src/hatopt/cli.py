"""Experiment runner CLI.

Subcommands: `run` (one config, one trace), `compare` (several configs over a
shared problem, merged long-format CSV), `audit` (theory report over a
persisted trace), `delta-study` (relative-inexactness series).  Configs are
single JSON files; relative paths inside a config resolve against the config
file's directory so runs stay self-describing.  All randomness flows from the
single config seed through counter-based substreams, so re-running a config
reproduces every numeric column bit for bit.

Exit codes for run-like commands: 0 converged, 1 config or data error,
2 iteration budget exhausted, 3 theory-violation halt, 4 subproblem failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import delta_study, theory_report
from .baselines import BaselineConfig, run_baseline, solve_to_high_accuracy
from .bregman import euclidean_scaling, make_entropic_simplex_scaling, random_spd_scaling
from .errors import ConfigError, HatoptError
from .estimators import (
    BFGS,
    Compressed,
    DFP,
    ExactHessian,
    GaussNewton,
    HutchinsonDiagonal,
    InexactnessBound,
    LazyUpdates,
    SR1,
)
from .hat import (
    HatConfig,
    VERDICT_CONVERGED,
    VERDICT_MAX_ITERS,
    VERDICT_SOLVER_FAILURE,
    VERDICT_VIOLATION_HALT,
    audit_iteration_counts,
    run,
)
from .objectives import (
    load_libsvm,
    make_linear_lsq,
    make_logistic,
    make_nlls,
    make_quadratic,
    make_rosenbrock,
    make_softmax_classifier,
    make_tanh_nlls,
    synthetic_classification,
)
from .seeding import substream
from .traceio import metadata_path, write_metadata, write_trace

_EXIT_FOR_VERDICT = {
    VERDICT_CONVERGED: 0,
    VERDICT_MAX_ITERS: 2,
    VERDICT_VIOLATION_HALT: 3,
    VERDICT_SOLVER_FAILURE: 4,
}


def load_config(path):
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    config["_base_dir"] = str(path.parent)
    return config


def _resolve(config, path):
    return Path(config.get("_base_dir", ".")) / path


def validate_config(config):
    """Fail fast on missing files and impossible constants, before any compute."""
    for section in ("problem", "method"):
        if section not in config:
            raise ConfigError(f"config is missing the {section!r} section")
    problem = config["problem"]
    dataset = problem.get("dataset")
    if dataset is not None and dataset.get("kind", "libsvm") == "libsvm":
        path = _resolve(config, dataset["path"])
        if not path.exists():
            raise ConfigError(f"dataset file not found: {path}")
    scaling = config.get("scaling", {"kind": "euclidean"})
    if scaling.get("kind") == "random-spd":
        lam_min = float(scaling["lambda_min"])
        lam_max = float(scaling["lambda_max"])
        if not 0 < lam_min <= lam_max:
            raise ConfigError("random-spd needs 0 < lambda_min <= lambda_max")
        if 2.0 * lam_min <= lam_max:
            raise ConfigError(
                f"scaling constants rejected: 2*{lam_min} <= {lam_max}")


def _build_dataset(spec, config, seed):
    kind = spec.get("kind", "libsvm")
    if kind == "libsvm":
        label_map = spec.get("label_map")
        if label_map is not None:
            label_map = {float(k): float(v) for k, v in label_map.items()}
        return load_libsvm(
            _resolve(config, spec["path"]), label_map=label_map,
            num_features=spec.get("num_features"),
            max_rows=spec.get("max_rows"),
            feature_limit=spec.get("feature_limit"))
    if kind == "synthetic":
        return synthetic_classification(
            n_samples=int(spec["n_samples"]), n_features=int(spec["n_features"]),
            seed=seed, classes=int(spec.get("classes", 2)),
            flip_prob=float(spec.get("flip_prob", 0.15)),
            density=float(spec.get("density", 0.12)))
    raise ConfigError(f"unknown dataset kind {kind!r}")


def build_problem(config):
    spec = config["problem"]
    seed = int(config.get("seed", 0))
    kind = spec.get("kind")
    l2 = spec.get("l2")
    if kind == "rosenbrock":
        problem = make_rosenbrock(l2=l2)
    elif kind == "quadratic":
        n = int(spec.get("n", 20))
        gen = substream(seed, 51)
        q_basis, _ = np.linalg.qr(gen.standard_normal((n, n)))
        eigs = gen.uniform(float(spec.get("eig_min", 1.0)),
                           float(spec.get("eig_max", 10.0)), size=n)
        problem = make_quadratic((q_basis * eigs) @ q_basis.T)
    elif kind in ("logistic", "nlls", "softmax", "tanh-nlls", "linear-lsq"):
        data = _build_dataset(spec["dataset"], config, seed)
        if kind == "logistic":
            problem = make_logistic(data, l2=l2)
        elif kind == "nlls":
            problem = make_nlls(data, l2=l2, l2_seed=seed)
        elif kind == "softmax":
            problem = make_softmax_classifier(
                data, hidden_units=spec.get("hidden_units"), seed=seed,
                l2=l2, l2_seed=seed)
        elif kind == "tanh-nlls":
            problem = make_tanh_nlls(data, hidden_units=int(spec.get("hidden_units", 4)),
                                     seed=seed, l2=l2, l2_seed=seed)
        else:
            problem = make_linear_lsq(data)
    else:
        raise ConfigError(f"unknown problem kind {kind!r}")
    if spec.get("x0") is not None:
        problem.x0 = np.asarray(spec["x0"], dtype=float)
    return problem


def build_scaling(config, dim):
    spec = config.get("scaling", {"kind": "euclidean"})
    seed = int(config.get("seed", 0))
    kind = spec.get("kind", "euclidean")
    if kind == "euclidean":
        return euclidean_scaling(dim)
    if kind == "random-spd":
        return random_spd_scaling(dim, float(spec["lambda_min"]),
                                  float(spec["lambda_max"]), seed)
    if kind == "entropic":
        return make_entropic_simplex_scaling(np.eye(dim), float(spec["theta"]), dim)
    raise ConfigError(f"unknown scaling kind {kind!r}")


def build_estimator(config, problem):
    spec = config.get("estimator", {"kind": "exact"})
    seed = int(config.get("seed", 0))
    kind = spec.get("kind", "exact")
    if kind == "exact":
        estimator = ExactHessian()
    elif kind == "bfgs":
        estimator = BFGS()
    elif kind == "dfp":
        estimator = DFP()
    elif kind == "sr1":
        estimator = SR1()
    elif kind == "hutchinson":
        estimator = HutchinsonDiagonal(probes=int(spec.get("probes", 8)),
                                       seed=seed, mode=spec.get("mode", "rademacher"))
    elif kind in ("ggn", "fisher"):
        # "fisher" is the empirical-Fisher naming for the softmax-kind matrix.
        ggn_kind = spec.get("ggn_kind", "softmax" if kind == "fisher" else None)
        if ggn_kind is None:
            ggn_kind = problem.ggn_kind
        if ggn_kind is None:
            raise ConfigError("the problem has no Gauss-Newton structure")
        estimator = GaussNewton(ggn_kind)
    else:
        raise ConfigError(f"unknown estimator kind {kind!r}")
    for wrapper in spec.get("wrappers", []):
        w_kind = wrapper.get("kind")
        if w_kind == "lazy":
            estimator = LazyUpdates(estimator, period=int(wrapper["period"]))
        elif w_kind in ("top-k", "random-sparsify"):
            estimator = Compressed(estimator, scheme=w_kind,
                                   fraction=float(wrapper["fraction"]), seed=seed)
        else:
            raise ConfigError(f"unknown wrapper kind {w_kind!r}")
    return estimator


def build_method(config, problem):
    spec = config["method"]
    kind = spec.get("kind", "hat")
    if kind == "hat":
        bound = None
        if spec.get("deviation_mode", "oracle") == "bound":
            bound = InexactnessBound(m=float(spec["bound_m"]),
                                     beta=float(spec["bound_beta"]))
        f_star = spec.get("f_star")
        if f_star == "auto":
            _, f_star, ok = solve_to_high_accuracy(problem)
            if not ok:
                raise ConfigError("could not precompute f_star to tolerance")
        cfg = HatConfig(
            eta=float(spec["eta"]), xi=float(spec["xi"]),
            epsilon=float(spec["epsilon"]), max_iters=int(spec["max_iters"]),
            seed=int(config.get("seed", 0)),
            deviation_mode=spec.get("deviation_mode", "oracle"), bound=bound,
            convex=bool(spec.get("convex", False)),
            f_star=None if f_star is None else float(f_star),
            general_tol=float(spec.get("general_tol", 1e-9)))
        return "hat", cfg
    if kind in ("gd", "newton"):
        cfg = BaselineConfig(
            kind="gd-backtracking" if kind == "gd" else "damped-newton",
            epsilon=float(spec["epsilon"]), max_iters=int(spec["max_iters"]),
            armijo_c=float(spec.get("armijo_c", 1e-4)),
            backtrack_factor=float(spec.get("backtrack_factor", 0.5)),
            initial_step=float(spec.get("initial_step", 1.0)))
        return kind, cfg
    raise ConfigError(f"unknown method kind {kind!r}")


def execute(config):
    """Build everything from a validated config and run it."""
    validate_config(config)
    problem = build_problem(config)
    method_kind, method_cfg = build_method(config, problem)
    scaling = build_scaling(config, problem.dim)
    if method_kind == "hat":
        estimator = build_estimator(config, problem)
        result = run(problem, scaling, estimator, method_cfg)
    else:
        result = run_baseline(problem, method_cfg)
    return result, problem, scaling, method_kind, method_cfg


def _json_safe(value):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value if np.isfinite(value) else None
    return value


def build_metadata(config, result, problem, scaling, method_kind, method_cfg):
    echo = {k: v for k, v in config.items() if not k.startswith("_")}
    meta = {
        "config": echo,
        "method": "hat" if method_kind == "hat" else method_kind,
        "verdict": result.verdict,
        "f_final": result.f_final,
        "final_grad_norm": result.final_grad_norm,
        "sigma_v": scaling.sigma_v,
        "l_v": scaling.l_v,
        "l2": problem.constants.hessian_lipschitz,
        "versions": {"hatopt": __version__, "numpy": np.__version__},
    }
    if method_kind == "hat":
        counts = audit_iteration_counts(result, method_cfg, problem)
        meta.update({
            "r_min": _json_safe(counts.r_min),
            "eta_eff": _json_safe(counts.eta_eff),
            "g_max": _json_safe(counts.g_max),
            "count_value_decrease": counts.n_value,
            "count_grad_decrease": counts.n_grad,
            "count_violation": counts.n_violation,
            "f_star": _json_safe(method_cfg.f_star if method_cfg.convex
                                 else problem.constants.f_star),
            "d_proxy": _json_safe(counts.d_proxy),
            "h_min_eigs": result.h_min_eigs,
            "h_norms": result.h_norms,
        })
    else:
        meta["f_star"] = _json_safe(problem.constants.f_star)
    return meta


def _persist(config, result, problem, scaling, method_kind, method_cfg):
    output = config.get("output", {})
    trace_path = output.get("trace")
    if trace_path is None:
        return None
    trace_path = _resolve(config, trace_path)
    write_trace(trace_path, result.trace)
    meta = build_metadata(config, result, problem, scaling, method_kind, method_cfg)
    write_metadata(metadata_path(trace_path), meta)
    return trace_path


def cmd_run(config_path):
    try:
        config = load_config(config_path)
        result, problem, scaling, method_kind, method_cfg = execute(config)
        _persist(config, result, problem, scaling, method_kind, method_cfg)
    except HatoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return 1
    print(f"verdict: {result.verdict} after {len(result.trace)} iteration(s); "
          f"f = {result.f_final:.6g}, ||g|| = {result.final_grad_norm:.6g}")
    return _EXIT_FOR_VERDICT[result.verdict]


def cmd_compare(config_paths, merged_path=None):
    try:
        if len(config_paths) < 2:
            raise ConfigError("compare needs at least two configs")
        configs = [load_config(p) for p in config_paths]
        reference = (configs[0].get("problem"), configs[0].get("seed", 0))
        for config in configs[1:]:
            if (config.get("problem"), config.get("seed", 0)) != reference:
                raise ConfigError("compare requires an identical problem spec and seed")
        rows = []
        worst_exit = 0
        for path, config in zip(config_paths, configs):
            result, problem, scaling, method_kind, method_cfg = execute(config)
            _persist(config, result, problem, scaling, method_kind, method_cfg)
            label = config.get("name") or f"{method_kind}:{Path(path).stem}"
            for rec in result.trace:
                rows.append((label, rec.k, rec.f, rec.grad_norm, rec.wall_nanos))
            worst_exit = max(worst_exit, _EXIT_FOR_VERDICT[result.verdict])
        if merged_path is None:
            merged_path = _resolve(configs[0], "compare.csv")
        merged_path = Path(merged_path)
        merged_path.parent.mkdir(parents=True, exist_ok=True)
        with open(merged_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["method", "k", "f", "grad_norm", "wall_nanos"])
            for label, k, f, g, wall in rows:
                writer.writerow([label, k, format(f, ".17g"),
                                 format(g, ".17g"), wall])
    except HatoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return 1
    print(f"wrote {merged_path} with {len(rows)} rows")
    return worst_exit


def cmd_audit(trace_path, report_path=None):
    try:
        report = theory_report(trace_path)
    except HatoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if report_path is None:
        report_path = Path(trace_path).with_suffix(".report.json")
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.as_dict(), handle, indent=2)
        handle.write("\n")
    print(report.summary_text())
    return 0 if report.overall_pass else 1


def cmd_delta_study(config_path):
    try:
        config = load_config(config_path)
        validate_config(config)
        study = config.get("study", {})
        iters = int(study.get("iters", 100))
        problem = build_problem(config)
        method_kind, method_cfg = build_method(config, problem)
        estimator = build_estimator(config, problem)
        scaling = build_scaling(config, problem.dim) if method_kind == "hat" else None
        series = delta_study(problem, estimator, method_cfg, iters, scaling=scaling)
        out = _resolve(config, study.get("output", "delta.csv"))
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["k", "grad_norm", "deviation", "delta"])
            for row in series.rows:
                writer.writerow([row.k, format(row.grad_norm, ".17g"),
                                 format(row.deviation_true, ".17g"),
                                 format(row.delta, ".17g")])
    except HatoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return 1
    print(f"wrote {out}: {len(series.rows)} rows, sup delta = {series.sup_delta:.6g}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hatopt",
        description="Adaptive trust-region optimizer benchmark runner. "
                    "Common label maps: adult-income data is already -1/+1; "
                    "for the mushrooms data pass {\"1\": 1, \"2\": -1}.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")

    p_cmp = sub.add_parser("compare", help="run several configs over one problem")
    p_cmp.add_argument("configs", nargs="+")
    p_cmp.add_argument("--merged", default=None, help="merged long-format CSV path")

    p_audit = sub.add_parser("audit", help="theory report over a trace file")
    p_audit.add_argument("trace")
    p_audit.add_argument("--report", default=None, help="JSON report path")

    p_delta = sub.add_parser("delta-study", help="relative-inexactness series")
    p_delta.add_argument("config")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "compare":
        return cmd_compare(args.configs, merged_path=args.merged)
    if args.command == "audit":
        return cmd_audit(args.trace, report_path=args.report)
    return cmd_delta_study(args.config)


if __name__ == "__main__":
    sys.exit(main())
