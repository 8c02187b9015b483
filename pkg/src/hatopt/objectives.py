"""Objective functions with analytic oracles and finite-difference cross-checks.

Every problem ships hand-coded value/gradient/Hessian oracles plus the
constants the optimizer schedule consumes (Hessian-Lipschitz L2, optional
global minimum, optional per-component model-gradient Lipschitz constant for
Gauss-Newton bounds).  `fd_gradient` / `fd_hessian` are the independent
oracles used to cross-check every analytic derivative in the test suite.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    InvalidInputError,
    NumericError,
    ParseError,
    UnsupportedProblemError,
)
from .numerics import as_symmetric, as_vector, operator_norm
from .seeding import substream

# Densification refusal threshold for LIBSVM files.
_MAX_DENSE_FEATURES = 5000

# Sampling box half-width for empirical Hessian-Lipschitz estimation.
_L2_PROBE_RADIUS = 2.0
_L2_PROBE_MARGIN = 1.5
_L2_PROBE_PAIRS = 1000
_L2_PROBE_POOL = 200


@dataclass
class ProblemConstants:
    """Certified constants attached to a problem.

    hessian_lipschitz is the L2 of the Hessian-Lipschitz assumption; it may
    be 0 for quadratics (constant Hessian).  component_grad_lipschitz bounds
    the per-component model-gradient Lipschitz constant used by the
    Gauss-Newton deviation bounds.  mu_pl is a Polyak-Lojasiewicz constant
    when known.
    """

    hessian_lipschitz: float
    f_star: Optional[float] = None
    component_grad_lipschitz: Optional[float] = None
    mu_pl: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.hessian_lipschitz) or self.hessian_lipschitz < 0:
            raise InvalidInputError("hessian_lipschitz must be finite and >= 0")


class ObjectiveProblem:
    """Twice-differentiable objective with value/gradient/Hessian oracles."""

    def __init__(self, dim, value_fn, grad_fn, hess_fn, constants, name="",
                 nonconvex=False, x0=None, ggn_kind=None, ggn_fn=None,
                 sample_count=None):
        self.dim = int(dim)
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._hess_fn = hess_fn
        self.constants = constants
        self.name = name
        self.nonconvex = nonconvex
        self.x0 = np.zeros(self.dim) if x0 is None else as_vector(x0)
        self.ggn_kind = ggn_kind
        self._ggn_fn = ggn_fn
        self.sample_count = sample_count

    def value(self, x):
        return float(self._value_fn(as_vector(x)))

    def gradient(self, x):
        return as_vector(self._grad_fn(as_vector(x)))

    def hessian(self, x):
        return as_symmetric(self._hess_fn(as_vector(x)))

    @property
    def supports_ggn(self):
        return self._ggn_fn is not None

    def ggn(self, x):
        """Gauss-Newton matrix; requires per-sample model structure."""
        if self._ggn_fn is None:
            raise UnsupportedProblemError(
                f"problem '{self.name}' has no per-sample model structure")
        return as_symmetric(self._ggn_fn(as_vector(x)))


@dataclass
class LabeledDataset:
    """Dense feature matrix with labels in {-1,+1} or class indices."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float)
        n, d = self.features.shape
        if n == 0 or d == 0:
            raise DataError("dataset must have positive sample and feature counts")
        if self.labels.shape != (n,):
            raise DataError("label count does not match sample count")
        if not np.all(np.isfinite(self.features)) or not np.all(np.isfinite(self.labels)):
            raise DataError("dataset has non-finite entries")

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


def load_libsvm(path, label_map=None, num_features=None, max_rows=None,
                feature_limit=None):
    """Read a sparse-text classification file into a dense LabeledDataset.

    Format per line: `label idx:val idx:val ...` with 1-based indices.
    Unspecified entries are zero; row order follows the file.  label_map
    translates source labels (e.g. {1.0: +1.0, 2.0: -1.0}); labels missing
    from a provided map raise DataError.  Files wider than 5000 features are
    refused unless feature_limit truncates them.
    """
    rows = []
    labels = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if max_rows is not None and len(rows) >= max_rows:
                break
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            try:
                label = float(parts[0])
            except ValueError as exc:
                raise ParseError(f"bad label on line {line_number}: {parts[0]!r}",
                                 line_number=line_number) from exc
            entries = []
            for token in parts[1:]:
                try:
                    idx_text, val_text = token.split(":", 1)
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError as exc:
                    raise ParseError(f"bad entry on line {line_number}: {token!r}",
                                     line_number=line_number) from exc
                if idx < 1:
                    raise ParseError(f"index must be >= 1 on line {line_number}",
                                     line_number=line_number)
                entries.append((idx, val))
                max_index = max(max_index, idx)
            if label_map is not None:
                if label not in label_map:
                    raise DataError(f"label {label} on line {line_number} is not mapped")
                label = float(label_map[label])
            rows.append(entries)
            labels.append(label)
    if not rows:
        raise DataError(f"no data rows in {path}")
    d = num_features if num_features is not None else max_index
    if d <= 0:
        raise DataError(f"could not infer a positive feature count from {path}")
    if feature_limit is not None:
        d = min(d, int(feature_limit))
    elif d > _MAX_DENSE_FEATURES:
        raise DataError(
            f"{path} has {d} features; densification refused (set feature_limit)")
    features = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            if idx <= d:
                features[i, idx - 1] = val
    return LabeledDataset(features=features, labels=np.asarray(labels))


def synthetic_classification(n_samples, n_features, seed, classes=2,
                             flip_prob=0.15, density=0.12):
    """Deterministic sparse-binary classification data.

    Mimics the shape of the standard adult-income benchmark (binary 0/1
    features, ~12% density).  Labels come from a planted linear model with a
    fraction of them flipped, which keeps two-class instances non-separable
    so the logistic optimum stays finite.
    """
    gen = substream(seed, 101)
    features = (gen.random((n_samples, n_features)) < density).astype(float)
    empty = ~features.any(axis=1)
    for i in np.flatnonzero(empty):
        features[i, int(gen.integers(0, n_features))] = 1.0
    if classes == 2:
        w_true = gen.standard_normal(n_features) / math.sqrt(n_features)
        margin = features @ w_true
        labels = np.where(margin >= np.median(margin), 1.0, -1.0)
        flips = gen.random(n_samples) < flip_prob
        labels[flips] = -labels[flips]
    else:
        w_true = gen.standard_normal((classes, n_features)) / math.sqrt(n_features)
        labels = np.argmax(features @ w_true.T, axis=1).astype(float)
        flips = gen.random(n_samples) < flip_prob
        labels[flips] = gen.integers(0, classes, size=int(flips.sum())).astype(float)
    return LabeledDataset(features=features, labels=labels)


def _sigmoid(t):
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _sampled_hessian_lipschitz(hess_fn, dim, seed, pairs=_L2_PROBE_PAIRS,
                               pool=_L2_PROBE_POOL, margin=_L2_PROBE_MARGIN,
                               radius=_L2_PROBE_RADIUS):
    """Empirical L2: margin * max ratio ||H(x)-H(y)|| / ||x-y|| over sampled pairs.

    Hessians are evaluated once on a point pool and pairs are drawn from it,
    which keeps the cost linear in the pool size.
    """
    gen = substream(seed, 7)
    points = gen.uniform(-radius, radius, size=(pool, dim))
    hessians = [as_symmetric(hess_fn(points[i])) for i in range(pool)]
    best = 0.0
    for _ in range(pairs):
        i, j = gen.integers(0, pool, size=2)
        if i == j:
            continue
        dist = float(np.linalg.norm(points[i] - points[j]))
        if dist < 1e-12:
            continue
        ratio = operator_norm(hessians[i] - hessians[j]) / dist
        best = max(best, ratio)
    return margin * best


def make_logistic(data, l2=None):
    """Binary logistic regression: mean log(1 + exp(-b_i * <x, a_i>)).

    Labels must be in {-1,+1}.  The default L2 is the analytic
    third-derivative bound mean_i ||a_i||^3 / (6*sqrt(3)); the sigmoid
    curvature derivative is bounded by 1/(6*sqrt(3)) so the bound is exact
    for the averaged loss.
    """
    if not np.all(np.isin(data.labels, (-1.0, 1.0))):
        raise DataError("logistic regression requires labels in {-1,+1}")
    a = data.features
    b = data.labels
    n = data.n_samples

    def value(x):
        z = b * (a @ x)
        return float(np.mean(np.logaddexp(0.0, -z)))

    def gradient(x):
        z = b * (a @ x)
        return -(a.T @ (b * _sigmoid(-z))) / n

    def hessian(x):
        z = b * (a @ x)
        w = _sigmoid(z) * _sigmoid(-z)
        return (a * w[:, None]).T @ a / n

    if l2 is None:
        l2 = float(np.mean(np.linalg.norm(a, axis=1) ** 3)) / (6.0 * math.sqrt(3.0))
    constants = ProblemConstants(
        hessian_lipschitz=l2,
        component_grad_lipschitz=float(np.max(np.linalg.norm(a, axis=1) ** 2)) / 4.0,
    )
    return ObjectiveProblem(
        dim=data.n_features, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="logistic", nonconvex=False,
        ggn_kind="softmax", ggn_fn=hessian, sample_count=n)


def make_nlls(data, l2=None, l2_seed=0):
    """Nonlinear least squares: mean (b_i - sigmoid(<a_i, x>))^2.

    Labels in [0,1]; -1 is mapped to 0 at construction.  Nonconvex.  The
    default L2 is sampled (1.5x the max observed Hessian-difference ratio
    over random pairs in a box of radius 2) and can be overridden.
    """
    labels = data.labels.copy()
    labels[labels == -1.0] = 0.0
    if np.any(labels < 0.0) or np.any(labels > 1.0):
        raise DataError("nonlinear least squares requires labels in [0,1] (or {-1,+1})")
    a = data.features
    n = data.n_samples

    def value(x):
        s = _sigmoid(a @ x)
        return float(np.mean((labels - s) ** 2))

    def gradient(x):
        s = _sigmoid(a @ x)
        sp = s * (1.0 - s)
        return -(2.0 / n) * (a.T @ ((labels - s) * sp))

    def hessian(x):
        s = _sigmoid(a @ x)
        sp = s * (1.0 - s)
        spp = sp * (1.0 - 2.0 * s)
        w = sp ** 2 - (labels - s) * spp
        return (2.0 / n) * ((a * w[:, None]).T @ a)

    def ggn(x):
        s = _sigmoid(a @ x)
        sp = s * (1.0 - s)
        return (2.0 / n) * ((a * (sp ** 2)[:, None]).T @ a)

    if l2 is None:
        l2 = _sampled_hessian_lipschitz(hessian, data.n_features, l2_seed)
    constants = ProblemConstants(
        hessian_lipschitz=float(l2),
        component_grad_lipschitz=float(np.max(np.linalg.norm(a, axis=1) ** 2)) / 4.0,
    )
    return ObjectiveProblem(
        dim=data.n_features, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="nlls", nonconvex=True,
        ggn_kind="l2", ggn_fn=ggn, sample_count=n)


def make_rosenbrock(l2=None, l2_seed=0):
    """The banana-valley benchmark (1 - x1)^2 + 100 (x2 - x1^2)^2."""

    def value(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    def gradient(x):
        return np.array([
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
            200.0 * (x[1] - x[0] ** 2),
        ])

    def hessian(x):
        return np.array([
            [2.0 + 1200.0 * x[0] ** 2 - 400.0 * x[1], -400.0 * x[0]],
            [-400.0 * x[0], 200.0],
        ])

    if l2 is None:
        l2 = _sampled_hessian_lipschitz(hessian, 2, l2_seed)
    constants = ProblemConstants(hessian_lipschitz=l2, f_star=0.0)
    return ObjectiveProblem(
        dim=2, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="rosenbrock", nonconvex=True,
        x0=np.array([-1.2, 1.0]))


def make_quadratic(q, x0=None):
    """f(x) = 0.5 x^T Q x for symmetric Q; constant Hessian, L2 = 0."""
    q = as_symmetric(q)
    n = q.shape[0]
    eigs = np.linalg.eigvalsh(q)
    constants = ProblemConstants(
        hessian_lipschitz=0.0,
        f_star=0.0 if eigs[0] > 0 else None,
    )
    if x0 is None:
        x0 = 10.0 * np.ones(n) / math.sqrt(n)
    return ObjectiveProblem(
        dim=n, value_fn=lambda x: 0.5 * float(x @ (q @ x)),
        grad_fn=lambda x: q @ x, hess_fn=lambda x: q,
        constants=constants, name="quadratic",
        nonconvex=bool(eigs[0] < 0), x0=x0)


def make_linear_lsq(data):
    """Linear least squares 0.5 * sum_i (<a_i, x> - b_i)^2.

    The model is linear, so the Gauss-Newton matrix equals the exact Hessian
    and the certified per-component gradient-Lipschitz constant is 0.
    """
    a = data.features
    b = data.labels
    gram = a.T @ a

    def value(x):
        r = a @ x - b
        return 0.5 * float(r @ r)

    constants = ProblemConstants(hessian_lipschitz=0.0, component_grad_lipschitz=0.0)
    return ObjectiveProblem(
        dim=data.n_features, value_fn=value,
        grad_fn=lambda x: a.T @ (a @ x - b), hess_fn=lambda x: gram,
        constants=constants, name="linear-lsq", nonconvex=False,
        ggn_kind="l2", ggn_fn=lambda x: gram, sample_count=data.n_samples)


def _log_softmax(logits):
    shift = logits - logits.max(axis=-1, keepdims=True)
    return shift - np.log(np.exp(shift).sum(axis=-1, keepdims=True))


def _check_class_labels(data):
    labels = data.labels
    if not np.all(labels == np.round(labels)) or np.min(labels) < 0:
        raise DataError("softmax classification requires class-index labels 0..c-1")
    y = labels.astype(int)
    c = int(y.max()) + 1
    if c < 2:
        raise DataError("softmax classification requires at least two classes")
    return y, c


def make_softmax_classifier(data, hidden_units=None, seed=0, l2=None, l2_seed=0):
    """Multiclass cross-entropy sum_i -log softmax(phi(x, a_i))[y_i].

    The per-class model phi is affine by default (weights plus intercept per
    class); with hidden_units set it becomes a one-hidden-layer tanh network,
    which makes the model-curvature term of the Hessian nonzero.  Exposes the
    Gauss-Newton matrix; for the affine model that matrix equals the exact
    Hessian and the certified per-component gradient-Lipschitz constant is 0.
    """
    y, c = _check_class_labels(data)
    a = data.features
    n, d = a.shape
    if hidden_units is None:
        return _affine_softmax(a, y, c, l2=l2, l2_seed=l2_seed)
    return _tanh_softmax(a, y, c, int(hidden_units), seed, l2=l2, l2_seed=l2_seed)


def _affine_softmax(a, y, c, l2=None, l2_seed=0):
    n, d = a.shape
    dim = c * (d + 1)
    aug = np.hstack([a, np.ones((n, 1))])  # per-class weights + intercept

    def logits(x):
        w = x.reshape(c, d + 1)
        return aug @ w.T

    def value(x):
        ls = _log_softmax(logits(x))
        return -float(ls[np.arange(n), y].sum())

    def grad_and_ggn(x, want_ggn):
        p = np.exp(_log_softmax(logits(x)))
        resid = p.copy()
        resid[np.arange(n), y] -= 1.0
        g = (resid.T @ aug).reshape(-1)
        if not want_ggn:
            return g
        h = np.zeros((dim, dim))
        for i in range(n):
            s = np.diag(p[i]) - np.outer(p[i], p[i])
            h += np.kron(s, np.outer(aug[i], aug[i]))
        return g, h

    def gradient(x):
        return grad_and_ggn(x, False)

    def hessian(x):
        return grad_and_ggn(x, True)[1]

    if l2 is None:
        l2 = _sampled_hessian_lipschitz(hessian, dim, l2_seed, pool=60, pairs=400)
    constants = ProblemConstants(hessian_lipschitz=l2, component_grad_lipschitz=0.0)
    return ObjectiveProblem(
        dim=dim, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="softmax-affine", nonconvex=False,
        ggn_kind="softmax", ggn_fn=hessian, sample_count=n)


def _tanh_softmax(a, y, c, h, seed, l2=None, l2_seed=0):
    n, d = a.shape
    dim = h * d + c * h

    def unpack(x):
        w1 = x[:h * d].reshape(h, d)
        w2 = x[h * d:].reshape(c, h)
        return w1, w2

    def logits_and_state(x):
        w1, w2 = unpack(x)
        t = np.tanh(a @ w1.T)  # (n, h)
        return t @ w2.T, t, w1, w2

    def value(x):
        ls = _log_softmax(logits_and_state(x)[0])
        return -float(ls[np.arange(n), y].sum())

    def jacobian(i, t, w2):
        # d logits_j / d params for sample i; rows are classes.
        jac = np.zeros((c, dim))
        tp = 1.0 - t[i] ** 2
        for j in range(c):
            jac[j, :h * d] = ((w2[j] * tp)[:, None] @ a[i][None, :]).reshape(-1)
            jac[j, h * d + j * h: h * d + (j + 1) * h] = t[i]
        return jac

    def phi_curvature(i, j, t, w2):
        # Second derivative of logit j w.r.t. params for sample i.
        hess = np.zeros((dim, dim))
        tp = 1.0 - t[i] ** 2
        for p in range(h):
            block = slice(p * d, (p + 1) * d)
            outer = np.outer(a[i], a[i])
            hess[block, block] = -2.0 * w2[j, p] * t[i, p] * tp[p] * outer
            w2_idx = h * d + j * h + p
            hess[block, w2_idx] = tp[p] * a[i]
            hess[w2_idx, block] = tp[p] * a[i]
        return hess

    def gradient(x):
        logits, t, w1, w2 = logits_and_state(x)
        p = np.exp(_log_softmax(logits))
        resid = p.copy()
        resid[np.arange(n), y] -= 1.0
        g = np.zeros(dim)
        for i in range(n):
            g += jacobian(i, t, w2).T @ resid[i]
        return g

    def ggn(x):
        logits, t, w1, w2 = logits_and_state(x)
        p = np.exp(_log_softmax(logits))
        out = np.zeros((dim, dim))
        for i in range(n):
            jac = jacobian(i, t, w2)
            s = np.diag(p[i]) - np.outer(p[i], p[i])
            out += jac.T @ s @ jac
        return out

    def hessian(x):
        logits, t, w1, w2 = logits_and_state(x)
        p = np.exp(_log_softmax(logits))
        resid = p.copy()
        resid[np.arange(n), y] -= 1.0
        out = ggn(x)
        for i in range(n):
            for j in range(c):
                if resid[i, j] != 0.0:
                    out += resid[i, j] * phi_curvature(i, j, t, w2)
        return out

    x0 = 0.5 * substream(seed, 11).standard_normal(dim) / math.sqrt(d)
    big_l = _sampled_component_lipschitz(
        lambda x, i: _tanh_softmax_phi_grads(x, i, a, h, c, unpack), dim, n, seed)
    if l2 is None:
        l2 = _sampled_hessian_lipschitz(hessian, dim, l2_seed, pool=40, pairs=300,
                                        radius=1.0)
    constants = ProblemConstants(hessian_lipschitz=l2, component_grad_lipschitz=big_l)
    return ObjectiveProblem(
        dim=dim, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="softmax-tanh", nonconvex=True, x0=x0,
        ggn_kind="softmax", ggn_fn=ggn, sample_count=n)


def _tanh_softmax_phi_grads(x, i, a, h, c, unpack):
    w1, w2 = unpack(x)
    t = np.tanh(w1 @ a[i])
    tp = 1.0 - t ** 2
    d = a.shape[1]
    dim = h * d + c * h
    grads = np.zeros((c, dim))
    for j in range(c):
        grads[j, :h * d] = ((w2[j] * tp)[:, None] @ a[i][None, :]).reshape(-1)
        grads[j, h * d + j * h: h * d + (j + 1) * h] = t
    return grads


def _sampled_component_lipschitz(phi_grads, dim, n_samples, seed, pairs=2000,
                                 margin=1.2, radius=1.0):
    """Empirical per-component model-gradient Lipschitz constant.

    margin * max over sampled point pairs and samples of
    ||grad phi_j(x) - grad phi_j(y)|| / ||x - y||.
    """
    gen = substream(seed, 13)
    best = 0.0
    for _ in range(pairs):
        x = gen.uniform(-radius, radius, size=dim)
        y = gen.uniform(-radius, radius, size=dim)
        dist = float(np.linalg.norm(x - y))
        if dist < 1e-12:
            continue
        i = int(gen.integers(0, n_samples))
        gx = np.atleast_2d(phi_grads(x, i))
        gy = np.atleast_2d(phi_grads(y, i))
        ratio = float(np.max(np.linalg.norm(gx - gy, axis=1))) / dist
        best = max(best, ratio)
    return margin * best


def make_tanh_nlls(data, hidden_units, seed=0, l2=None, l2_seed=0):
    """Half sum of squared residuals of a one-hidden-layer tanh model.

    f(x) = 0.5 sum_i (phi(x, a_i) - b_i)^2 with phi(x, a) = <v, tanh(W a)>,
    parameters x = (W, v).  This is the scaling under which the Gauss-Newton
    deviation bound L * sqrt(2 N f(x)) applies verbatim with H = sum of
    model-gradient outer products.
    """
    a = data.features
    b = data.labels
    n, d = a.shape
    h = int(hidden_units)
    dim = h * d + h

    def unpack(x):
        return x[:h * d].reshape(h, d), x[h * d:]

    def model_and_grads(x):
        w, v = unpack(x)
        t = np.tanh(a @ w.T)  # (n, h)
        phi = t @ v
        tp = 1.0 - t ** 2
        grads = np.zeros((n, dim))
        grads[:, h * d:] = t
        for p in range(h):
            grads[:, p * d:(p + 1) * d] = (v[p] * tp[:, p])[:, None] * a
        return phi, grads, t, tp, w, v

    def value(x):
        phi = model_and_grads(x)[0]
        return 0.5 * float(np.sum((phi - b) ** 2))

    def gradient(x):
        phi, grads = model_and_grads(x)[:2]
        return grads.T @ (phi - b)

    def ggn(x):
        grads = model_and_grads(x)[1]
        return grads.T @ grads

    def hessian(x):
        phi, grads, t, tp, w, v = model_and_grads(x)
        out = grads.T @ grads
        resid = phi - b
        for i in range(n):
            if resid[i] == 0.0:
                continue
            outer = np.outer(a[i], a[i])
            for p in range(h):
                block = slice(p * d, (p + 1) * d)
                out[block, block] += resid[i] * (-2.0 * v[p] * t[i, p] * tp[i, p]) * outer
                v_idx = h * d + p
                out[block, v_idx] += resid[i] * tp[i, p] * a[i]
                out[v_idx, block] += resid[i] * tp[i, p] * a[i]
        return out

    def phi_grads(x, i):
        w, v = unpack(x)
        t = np.tanh(w @ a[i])
        tp = 1.0 - t ** 2
        g = np.zeros(dim)
        g[h * d:] = t
        for p in range(h):
            g[p * d:(p + 1) * d] = v[p] * tp[p] * a[i]
        return g

    x0 = 0.5 * substream(seed, 12).standard_normal(dim) / math.sqrt(d)
    big_l = _sampled_component_lipschitz(phi_grads, dim, n, seed)
    if l2 is None:
        l2 = _sampled_hessian_lipschitz(hessian, dim, l2_seed, pool=40, pairs=300,
                                        radius=1.0)
    constants = ProblemConstants(hessian_lipschitz=l2, component_grad_lipschitz=big_l)
    return ObjectiveProblem(
        dim=dim, value_fn=value, grad_fn=gradient, hess_fn=hessian,
        constants=constants, name="tanh-nlls", nonconvex=True, x0=x0,
        ggn_kind="l2", ggn_fn=ggn, sample_count=n)


def _fd_step(x):
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def fd_gradient(problem, x):
    """Central-difference gradient with step 1e-5 * (1 + ||x||)."""
    x = as_vector(x)
    h = _fd_step(x)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        f_plus = problem.value(x + e)
        f_minus = problem.value(x - e)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"non-finite probe in fd_gradient at coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def fd_hessian(problem, x):
    """Central differences of the analytic gradient, symmetrized."""
    x = as_vector(x)
    h = _fd_step(x)
    cols = np.zeros((x.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g_plus = problem.gradient(x + e)
        g_minus = problem.gradient(x - e)
        if not (np.all(np.isfinite(g_plus)) and np.all(np.isfinite(g_minus))):
            raise NumericError(f"non-finite probe in fd_hessian at coordinate {i}")
        cols[:, i] = (g_plus - g_minus) / (2.0 * h)
    return as_symmetric(cols)
