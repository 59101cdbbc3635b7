"""Deterministic statistical kernels: correlation, cosine similarity, PCA,
ridge least squares, logistic regression, AUC-ROC, and split utilities.

Everything here is pure and reentrant; randomized routines take explicit
seeds. Implementations are self-contained on top of numpy so their behavior
is pinned by the test oracles rather than by a library version.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInput,
    InvalidConfig,
    NonConvergence,
    SingleClass,
    SingularSystem,
    TooFewSamples,
    ZeroNorm,
    ZeroVariance,
)

VARIANCE_FLOOR = 1e-15


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length sequences.

    Raises ZeroVariance if either input's population variance is at the
    numerical floor.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidConfig("pearson expects two 1-D sequences of equal length")
    if x.size < 2:
        raise InvalidConfig("pearson needs at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx) / x.size
    vy = float(dy @ dy) / y.size
    if vx < VARIANCE_FLOOR or vy < VARIANCE_FLOOR:
        raise ZeroVariance(f"variance at floor: var(x)={vx:.3g}, var(y)={vy:.3g}")
    return float((dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy)))


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two vectors; ZeroNorm on degenerate input."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise InvalidConfig("cosine_similarity expects two 1-D vectors of equal length")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu <= 1e-15 or nv <= 1e-15:
        raise ZeroNorm(f"norm at floor: |u|={nu:.3g}, |v|={nv:.3g}")
    return float((u @ v) / (nu * nv))


@dataclass
class PcaResult:
    """Principal components of a column-centered data matrix.

    components: orthonormal rows, highest-variance direction first, each row
        sign-fixed so its largest-magnitude coordinate is positive.
    explained_variance_ratio: nonincreasing, sums to 1.
    means: column means removed before the decomposition.
    """

    components: np.ndarray
    explained_variance_ratio: np.ndarray
    means: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) @ self.components.T

    def inverse(self, scores: np.ndarray) -> np.ndarray:
        return scores @ self.components + self.means


def pca(X) -> PcaResult:
    """Principal component analysis via singular value decomposition.

    Rows are observations, columns variables. Raises DegenerateInput when all
    rows are identical (no variance to decompose).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InvalidConfig("pca expects an N x P matrix with N >= 2")
    if not np.all(np.isfinite(X)):
        raise InvalidConfig("pca input must be finite")
    means = X.mean(axis=0)
    centered = X - means
    total = float(np.sum(centered * centered))
    if total < VARIANCE_FLOOR:
        raise DegenerateInput("all rows identical; PCA undefined")
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variances = singular**2
    ratios = variances / variances.sum()
    # Deterministic sign: make the largest-|entry| coordinate of each component positive.
    for row in vt:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return PcaResult(components=vt, explained_variance_ratio=ratios, means=means)


def components_for_variance(ratios, threshold: float = 0.9) -> int:
    """Smallest k whose cumulative explained-variance ratio reaches threshold."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.ndim != 1 or ratios.size == 0:
        raise InvalidConfig("ratios must be a nonempty 1-D sequence")
    if not 0.0 < threshold <= 1.0:
        raise InvalidConfig(f"threshold must be in (0, 1], got {threshold}")
    cumulative = np.cumsum(ratios)
    hits = np.flatnonzero(cumulative >= threshold - 1e-12)
    if hits.size == 0:
        return ratios.size
    return int(hits[0]) + 1


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float


def ridge_fit(X, y, lam: float = 1e-8) -> RidgeModel:
    """Minimize ||y - Xw - b||^2 + lam * ||w||^2 (intercept unpenalized).

    The default lam is a numerical floor so collinear feature columns stay
    solvable; SingularSystem can only occur at lam = 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.size:
        raise InvalidConfig("X and y disagree on sample count")
    if lam < 0:
        raise InvalidConfig("lam must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    xc = X - x_mean
    yc = y - y_mean
    gram = xc.T @ xc + lam * np.eye(X.shape[1])
    try:
        weights = np.linalg.solve(gram, xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("normal equations singular at lam = 0") from exc
    intercept = y_mean - float(x_mean @ weights)
    return RidgeModel(weights=weights, intercept=intercept)


def ridge_predict(model: RidgeModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return X @ model.weights + model.intercept


def r2(y, yhat) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot (SS_tot about mean(y))."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot < VARIANCE_FLOOR:
        raise ZeroVariance("target has no variance; R^2 undefined")
    return 1.0 - ss_res / ss_tot


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    converged: bool
    n_iter: int
    grad_norm: float


def logistic_loss(weights, intercept, X, y, l2: float) -> float:
    """Penalized negative log-likelihood (intercept unpenalized)."""
    z = X @ weights + intercept
    return float(np.sum(np.logaddexp(0.0, z)) - y @ z + 0.5 * l2 * (weights @ weights))


def logistic_grad(weights, intercept, X, y, l2: float) -> np.ndarray:
    """Gradient of logistic_loss w.r.t. [weights, intercept]."""
    p = _sigmoid(X @ weights + intercept)
    gw = X.T @ (p - y) + l2 * weights
    gb = float(np.sum(p - y))
    return np.concatenate([gw, [gb]])


def logistic_fit(X, labels, l2: float = 1e-4, tol: float = 1e-8, max_iter: int = 100) -> LogisticModel:
    """L2-penalized logistic regression by damped Newton iteration.

    Deterministic: zero initialization, halving line search, convergence at
    gradient norm < tol. Hitting max_iter emits a NonConvergence warning and
    returns the best iterate rather than raising.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] != y.size:
        raise InvalidConfig("X and labels disagree on sample count")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise InvalidConfig("labels must be binary 0/1")
    if classes.size < 2:
        raise SingleClass("both classes must be present")
    n, p = X.shape
    w = np.zeros(p + 1)  # intercept last
    reg = np.full(p + 1, l2)
    reg[-1] = 0.0

    def full_loss(wvec):
        return logistic_loss(wvec[:-1], wvec[-1], X, y, l2)

    grad = np.empty(p + 1)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = X @ w[:-1] + w[-1]
        prob = _sigmoid(z)
        grad[:p] = X.T @ (prob - y) + l2 * w[:p]
        grad[p] = np.sum(prob - y)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            converged = True
            break
        s = prob * (1.0 - prob)
        xs = X * s[:, None]
        hess = np.empty((p + 1, p + 1))
        hess[:p, :p] = X.T @ xs
        hess[:p, p] = xs.sum(axis=0)
        hess[p, :p] = hess[:p, p]
        hess[p, p] = s.sum()
        hess[np.diag_indices_from(hess)] += reg
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        base = full_loss(w)
        slope = float(grad @ step)
        t = 1.0
        while t > 1e-12:
            candidate = w - t * step
            if full_loss(candidate) <= base - 1e-4 * t * slope:
                break
            t *= 0.5
        w = w - t * step
    final_grad = logistic_grad(w[:-1], w[-1], X, y, l2)
    gnorm = float(np.linalg.norm(final_grad))
    converged = converged or gnorm < tol
    if not converged:
        warnings.warn(
            f"logistic_fit stopped after {it} iterations with gradient norm {gnorm:.3g}",
            NonConvergence,
        )
    return LogisticModel(
        weights=w[:-1], intercept=float(w[-1]), converged=converged, n_iter=it, grad_norm=gnorm
    )


def predict_score(model: LogisticModel, X) -> np.ndarray:
    """Class-1 probability per row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return _sigmoid(X @ model.weights + model.intercept)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_roc(scores, labels) -> float:
    """Area under the ROC curve as the normalized Mann-Whitney U statistic.

    Equals the probability that a random positive outranks a random negative,
    with ties credited 0.5.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if scores.shape != y.shape or scores.ndim != 1:
        raise InvalidConfig("scores and labels must be 1-D and equal length")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = _average_ranks(scores)
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass
class SplitPlan:
    """A stratified train/test split with its bookkeeping."""

    train: np.ndarray
    test: np.ndarray
    class_train_fraction: dict
    seed: int


def stratified_split(classes, ratio: float = 0.8, seed: int = 0) -> SplitPlan:
    """Seeded stratified split: floor(ratio * n_c) of each class to train, then
    the largest-remainder classes promoted one item at a time until the global
    train count reaches floor(ratio * N).

    Classes with a single member go wholly to train, with a warning.
    """
    labels = np.asarray(classes)
    if labels.ndim != 1 or labels.size == 0:
        raise InvalidConfig("classes must be a nonempty 1-D sequence")
    if not 0.0 < ratio < 1.0:
        raise InvalidConfig(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    order = sorted(np.unique(labels), key=str)
    by_class = {}  # cls -> [train list, test list, fractional remainder]
    for cls in order:
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            warnings.warn(f"class {cls!r} has {idx.size} item(s); sending all to train")
            by_class[cls] = [list(idx), [], 0.0]
            continue
        shuffled = list(idx[rng.permutation(idx.size)])
        n_train = int(np.floor(ratio * idx.size))
        by_class[cls] = [shuffled[:n_train], shuffled[n_train:], ratio * idx.size - n_train]

    target = int(np.floor(ratio * labels.size))
    total_train = sum(len(parts[0]) for parts in by_class.values())
    # Promote one test item per class, largest fractional remainder first,
    # until the global ratio is within one item.
    for cls in sorted(order, key=lambda c: -by_class[c][2]):
        if total_train >= target:
            break
        train_c, test_c, _ = by_class[cls]
        if len(test_c) > 1:
            train_c.append(test_c.pop(0))
            total_train += 1

    train = np.sort(np.concatenate([np.asarray(parts[0], dtype=int) for parts in by_class.values()]))
    test_lists = [parts[1] for parts in by_class.values() if parts[1]]
    test = np.sort(np.concatenate([np.asarray(t, dtype=int) for t in test_lists])) if test_lists else np.empty(0, dtype=int)
    fractions = {
        cls: len(parts[0]) / (len(parts[0]) + len(parts[1])) for cls, parts in by_class.items()
    }
    return SplitPlan(train=train, test=test, class_train_fraction=fractions, seed=seed)


def kfold_indices(n: int, k: int = 5, seed: int = 0) -> list:
    """Seeded shuffle of range(n) split into k folds with sizes differing by <= 1."""
    if k < 2:
        raise InvalidConfig(f"k must be >= 2, got {k}")
    if n < k:
        raise TooFewSamples(f"cannot make {k} folds from {n} samples")
    permutation = np.random.default_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(permutation, k)]
