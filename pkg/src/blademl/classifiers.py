"""Four classifiers built from first principles.

All training is deterministic: fixed data, config, and seed produce
bit-identical models.  Every predict function returns a probability table
aligned with the dataset's class order (entries nonnegative, summing to 1).

  - Logistic regression: one-vs-rest, full-batch gradient descent on the
    mean negative log-likelihood plus an L2 penalty on the non-intercept
    coefficients, zero initialization.
  - Decision tree: greedy recursive partitioning on midpoint thresholds,
    Gini impurity for classification and mean squared error for regression,
    `x <= threshold` routed left.
  - Gaussian naive Bayes: class priors times per-feature Gaussian
    likelihoods with a variance floor, evaluated in log space.
  - Multilayer perceptron: configurable hidden layers, softmax output,
    per-sample stochastic gradient descent with seeded initialization and
    seeded epoch shuffles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .fmt import render_json
from .rng import SplitMix64, shuffled_indices

PROB_CLIP = 1e-15
ACTIVATIONS = ("relu", "sigmoid", "tanh")

LOGISTIC_DEFAULTS = {
    "learning_rate": 0.1, "limit": 1000, "tolerance": 1e-6, "l2": 1e-4,
}
TREE_DEFAULTS = {"max_depth": 10, "min_leaf": 2}
MLP_DEFAULTS = {
    "learning_rate": 0.01, "limit": 200, "l2": 1e-4,
    "hidden": (20,), "activation": "relu",
}


@dataclass
class TrainConfig:
    """Shared hyperparameter record; fields left as None fall back to the
    per-model defaults above."""

    learning_rate: float | None = None
    limit: int | None = None
    tolerance: float | None = None
    l2: float | None = None
    seed: int = 0
    hidden: tuple[int, ...] | None = None
    activation: str | None = None
    max_depth: int | None = None
    min_leaf: int | None = None

    def __post_init__(self):
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.limit is not None and self.limit < 1:
            raise ValueError("iteration/epoch limit must be at least 1")
        if self.tolerance is not None and self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.l2 is not None and self.l2 < 0:
            raise ValueError("L2 strength must be nonnegative")
        if self.hidden is not None:
            self.hidden = tuple(int(h) for h in self.hidden)
            if not self.hidden or any(h < 1 for h in self.hidden):
                raise ValueError("hidden layer sizes must all be at least 1")
        if self.activation is not None and self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max depth must be at least 1")
        if self.min_leaf is not None and self.min_leaf < 1:
            raise ValueError("min leaf must be at least 1")

    def resolved(self, name: str, defaults: dict):
        value = getattr(self, name)
        return defaults[name] if value is None else value


def sigmoid(z):
    """Numerically stable 1 / (1 + exp(-z)); exponentiates only -|z|."""
    arr = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    if np.ndim(z) == 0:
        return float(out[0])
    return out


def logit(p: float) -> float:
    """log(p / (1 - p)), the inverse of sigmoid; rejects p in {0, 1}."""
    if not 0.0 < p < 1.0:
        raise ValueError("logit requires 0 < p < 1")
    return math.log(p) - math.log1p(-p)


def _check_finite(X: np.ndarray) -> None:
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass
class LogisticModel:
    """One-vs-rest coefficient rows: P(class c | x) before renormalization is
    sigmoid(intercepts[c] + coefficients[c] . x)."""

    class_names: list[str]
    intercepts: np.ndarray
    coefficients: np.ndarray

    @property
    def feature_count(self) -> int:
        return self.coefficients.shape[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.feature_count:
            raise ValueError("feature count mismatch")
        scores = sigmoid(X @ self.coefficients.T + self.intercepts)
        totals = scores.sum(axis=1, keepdims=True)
        uniform = totals[:, 0] == 0.0
        scores[uniform] = 1.0
        totals[uniform] = float(len(self.class_names))
        return scores / totals


def logistic_objective(
    intercept: float, weights: np.ndarray, X: np.ndarray, targets: np.ndarray,
    l2: float,
) -> float:
    """Mean negative log-likelihood plus (l2 / 2) * ||weights||^2.

    The intercept is unpenalized.  Computed via logaddexp for stability:
    nll_i = log(1 + exp(z_i)) - t_i * z_i.
    """
    z = intercept + X @ weights
    nll = np.logaddexp(0.0, z) - targets * z
    return float(nll.mean() + 0.5 * l2 * float(weights @ weights))


def logistic_gradient(
    intercept: float, weights: np.ndarray, X: np.ndarray, targets: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Analytic gradient of logistic_objective in (intercept, weights)."""
    residual = sigmoid(intercept + X @ weights) - targets
    n = X.shape[0]
    return float(residual.mean()), X.T @ residual / n + l2 * weights


def train_logistic(ds: LabeledDataset, cfg: TrainConfig | None = None) -> LogisticModel:
    """Fit one-vs-rest logistic coefficients by full-batch gradient descent.

    Deterministic: coefficients start at zero and descend with a fixed step
    until the gradient infinity-norm drops below the tolerance or the
    iteration limit is reached.
    """
    cfg = cfg or TrainConfig()
    if len(ds.class_names) < 2:
        raise ValueError("logistic training requires at least 2 classes")
    X = ds.X
    _check_finite(X)
    rate = cfg.resolved("learning_rate", LOGISTIC_DEFAULTS)
    limit = cfg.resolved("limit", LOGISTIC_DEFAULTS)
    tolerance = cfg.resolved("tolerance", LOGISTIC_DEFAULTS)
    l2 = cfg.resolved("l2", LOGISTIC_DEFAULTS)

    k = len(ds.class_names)
    intercepts = np.zeros(k)
    coefficients = np.zeros((k, X.shape[1]))
    for c in range(k):
        targets = (ds.y == c).astype(np.float64)
        intercept = 0.0
        weights = np.zeros(X.shape[1])
        for _ in range(limit):
            g0, gw = logistic_gradient(intercept, weights, X, targets, l2)
            gw_max = float(np.abs(gw).max()) if gw.size else 0.0
            if max(abs(g0), gw_max) < tolerance:
                break
            intercept -= rate * g0
            weights -= rate * gw
        intercepts[c] = intercept
        coefficients[c] = weights
    return LogisticModel(list(ds.class_names), intercepts, coefficients)


def predict_logistic(model: LogisticModel, x) -> np.ndarray:
    """Per-class one-vs-rest sigmoid scores renormalized to sum 1; an
    all-zero score row falls back to the uniform distribution."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise ValueError("feature count mismatch")
    return model.predict_proba(x[None, :])[0]


# ---------------------------------------------------------------------------
# Decision tree


def gini_impurity(proportions) -> float:
    """1 - sum(p_k^2) over a class-proportion simplex."""
    p = np.asarray(proportions, dtype=np.float64)
    if p.size == 0 or np.any(p < 0.0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError("proportions must be nonnegative and sum to 1")
    return 1.0 - float((p ** 2).sum())


def mse_impurity(targets) -> float:
    """Mean squared deviation from the node mean."""
    t = np.asarray(targets, dtype=np.float64)
    if t.size == 0:
        raise ValueError("impurity of an empty target set is undefined")
    return float(((t - t.mean()) ** 2).mean())


@dataclass
class TreeNode:
    """Internal nodes carry (feature, threshold, left, right); leaves carry
    the class-count/probability tables (classification) or the target mean
    (regression), plus the sample count."""

    n: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: np.ndarray | None = None
    probs: np.ndarray | None = None
    mean: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class TreeModel:
    criterion: str
    class_names: list[str] | None
    feature_count: int
    root: TreeNode
    max_depth: int
    min_leaf: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.array([predict_tree(self, row) for row in np.asarray(X)])


def _class_split(X, y, k, n, min_leaf, parent_impurity):
    """Best (decrease, feature, threshold) over all midpoint candidates.

    decrease = parent - (n_l / n) * gini_l - (n_r / n) * gini_r, with child
    ginis computed from integer class counts as 1 - sum((count / size)^2).
    Ties: lowest feature index, then lowest threshold (strict > acceptance
    over ascending candidates).  Splits leaving a child below min_leaf are
    invalid.
    """
    best_decrease = 0.0
    best_feature = None
    best_threshold = None
    sizes_left = np.arange(1, n, dtype=np.float64)
    sizes_right = n - sizes_left
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        distinct = xs[1:] > xs[:-1]
        valid = distinct & (sizes_left >= min_leaf) & (sizes_right >= min_leaf)
        if not valid.any():
            continue
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y[order]] = 1.0
        counts_left = np.cumsum(onehot, axis=0)[:-1]
        counts_right = counts_left[-1] + onehot[-1] - counts_left
        gini_left = 1.0 - ((counts_left / sizes_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((counts_right / sizes_right[:, None]) ** 2).sum(axis=1)
        decrease = (
            parent_impurity
            - (sizes_left / n) * gini_left
            - (sizes_right / n) * gini_right
        )
        decrease[~valid] = -np.inf
        i = int(np.argmax(decrease))
        if decrease[i] > best_decrease:
            best_decrease = float(decrease[i])
            best_feature = j
            best_threshold = (xs[i] + xs[i + 1]) / 2.0
    return best_decrease, best_feature, best_threshold


def _mse_split(X, targets, n, min_leaf, parent_impurity):
    """Regression analogue of _class_split; child impurity is the biased
    variance computed as sum(y^2)/size - (sum(y)/size)^2, clipped at 0."""
    best_decrease = 0.0
    best_feature = None
    best_threshold = None
    sizes_left = np.arange(1, n, dtype=np.float64)
    sizes_right = n - sizes_left
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        ys = targets[order]
        distinct = xs[1:] > xs[:-1]
        valid = distinct & (sizes_left >= min_leaf) & (sizes_right >= min_leaf)
        if not valid.any():
            continue
        cum = np.cumsum(ys)[:-1]
        cum2 = np.cumsum(ys ** 2)[:-1]
        total = float(ys.sum())
        total2 = float((ys ** 2).sum())
        mse_left = np.maximum(cum2 / sizes_left - (cum / sizes_left) ** 2, 0.0)
        mse_right = np.maximum(
            (total2 - cum2) / sizes_right - ((total - cum) / sizes_right) ** 2, 0.0
        )
        decrease = (
            parent_impurity
            - (sizes_left / n) * mse_left
            - (sizes_right / n) * mse_right
        )
        decrease[~valid] = -np.inf
        i = int(np.argmax(decrease))
        if decrease[i] > best_decrease:
            best_decrease = float(decrease[i])
            best_feature = j
            best_threshold = (xs[i] + xs[i + 1]) / 2.0
    return best_decrease, best_feature, best_threshold


def _grow(X, y, k, depth, max_depth, min_leaf, classification):
    n = X.shape[0]
    if classification:
        counts = np.bincount(y, minlength=k)
        leaf = TreeNode(
            n=n, counts=counts, probs=counts / n, mean=None
        )
        impurity = 1.0 - ((counts / n) ** 2).sum()
        pure = int(counts.max()) == n
    else:
        leaf = TreeNode(n=n, mean=float(y.mean()))
        impurity = mse_impurity(y)
        pure = impurity == 0.0
    if depth >= max_depth or pure or n < 2 * min_leaf:
        return leaf
    if classification:
        decrease, feature, threshold = _class_split(
            X, y, k, n, min_leaf, impurity
        )
    else:
        decrease, feature, threshold = _mse_split(X, y, n, min_leaf, impurity)
    if feature is None or decrease <= 0.0:
        return leaf
    mask = X[:, feature] <= threshold
    if mask.all() or not mask.any():
        return leaf
    return TreeNode(
        n=n,
        feature=feature,
        threshold=float(threshold),
        left=_grow(X[mask], y[mask], k, depth + 1, max_depth, min_leaf,
                   classification),
        right=_grow(X[~mask], y[~mask], k, depth + 1, max_depth, min_leaf,
                    classification),
    )


def train_tree(ds: LabeledDataset, cfg: TrainConfig | None = None) -> TreeModel:
    """Grow a classification tree by greedy Gini-decrease splitting."""
    cfg = cfg or TrainConfig()
    if len(ds.class_names) < 2:
        raise ValueError("tree classification requires at least 2 classes")
    X = ds.X
    _check_finite(X)
    max_depth = cfg.resolved("max_depth", TREE_DEFAULTS)
    min_leaf = cfg.resolved("min_leaf", TREE_DEFAULTS)
    root = _grow(X, ds.y, len(ds.class_names), 0, max_depth, min_leaf, True)
    return TreeModel("gini", list(ds.class_names), X.shape[1], root,
                     max_depth, min_leaf)


def train_regression_tree(X, targets, cfg: TrainConfig | None = None) -> TreeModel:
    """Grow a regression tree by greedy MSE-decrease splitting."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != targets.shape[0] or X.shape[0] < 1:
        raise ValueError("X and targets must be nonempty with matching rows")
    _check_finite(X)
    _check_finite(targets)
    max_depth = cfg.resolved("max_depth", TREE_DEFAULTS)
    min_leaf = cfg.resolved("min_leaf", TREE_DEFAULTS)
    root = _grow(X, targets, 0, 0, max_depth, min_leaf, False)
    return TreeModel("mse", None, X.shape[1], root, max_depth, min_leaf)


def predict_tree(model: TreeModel, x):
    """Route x down threshold comparisons (`<=` goes left); returns the leaf
    class-probability table, or the leaf mean in regression mode."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise ValueError("feature count mismatch")
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    if model.criterion == "gini":
        return node.probs.copy()
    return node.mean


# ---------------------------------------------------------------------------
# Gaussian naive Bayes


@dataclass
class NaiveBayesModel:
    class_names: list[str]
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    eps_var: float

    @property
    def feature_count(self) -> int:
        return self.means.shape[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.feature_count:
            raise ValueError("feature count mismatch")
        # log P(C) + sum_i log N(x_i; mu, var), normalized in log space.
        log_like = -0.5 * (
            np.log(2.0 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2
            / self.variances[None, :, :]
        ).sum(axis=2)
        log_post = np.log(self.priors)[None, :] + log_like
        log_post -= log_post.max(axis=1, keepdims=True)
        post = np.exp(log_post)
        return post / post.sum(axis=1, keepdims=True)


def train_naive_bayes(ds: LabeledDataset) -> NaiveBayesModel:
    """Estimate priors and per-class per-feature Gaussians.

    Variances are population (divisor n) and floored at
    eps_var = 1e-9 * max over features of the total population variance
    (that maximum itself floored at 1e-12), so constant features never
    produce degenerate densities.
    """
    if len(ds.class_names) < 2:
        raise ValueError("naive Bayes requires at least 2 classes")
    X = ds.X
    _check_finite(X)
    k = len(ds.class_names)
    n, p = X.shape
    counts = np.bincount(ds.y, minlength=k)
    if int(counts.min()) == 0:
        raise ValueError("every class needs at least one sample")
    eps_var = 1e-9 * max(float(X.var(axis=0).max()), 1e-12)
    priors = counts / n
    means = np.empty((k, p))
    variances = np.empty((k, p))
    for c in range(k):
        rows = X[ds.y == c]
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(rows.var(axis=0), eps_var)
    return NaiveBayesModel(list(ds.class_names), priors, means, variances, eps_var)


def predict_naive_bayes(model: NaiveBayesModel, x) -> np.ndarray:
    """Log-space posterior over classes for one feature row."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise ValueError("feature count mismatch")
    return model.predict_proba(x[None, :])[0]


# ---------------------------------------------------------------------------
# Multilayer perceptron


@dataclass
class MlpModel:
    """Feed-forward network; weights[l] has shape (out, in) so layer l maps
    a_prev -> activation(weights[l] @ a_prev + biases[l])."""

    class_names: list[str]
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.layer_sizes[0]:
            raise ValueError("feature count mismatch")
        a = X
        for l in range(len(self.weights) - 1):
            a = _activate(a @ self.weights[l].T + self.biases[l], self.activation)
        z = a @ self.weights[-1].T + self.biases[-1]
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    return np.tanh(z)


def _activation_grad(z, a, kind):
    # Derivative expressed from pre-activation z and activation a.
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a ** 2


def init_mlp(
    class_names: list[str], layer_sizes: list[int], activation: str,
    rng: SplitMix64,
) -> MlpModel:
    """Seeded initialization: each layer's weights are drawn row-major as
    (2 u - 1) / sqrt(fan_in) from the shared SplitMix64 stream; biases 0."""
    weights = []
    biases = []
    for l in range(len(layer_sizes) - 1):
        fan_in = layer_sizes[l]
        fan_out = layer_sizes[l + 1]
        draws = rng.uniforms(fan_out * fan_in).reshape(fan_out, fan_in)
        weights.append((2.0 * draws - 1.0) / math.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(class_names, list(layer_sizes), weights, biases, activation)


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Class-probability table for one input row (softmax output layer,
    row max subtracted for stability)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.layer_sizes[0],):
        raise ValueError("feature count mismatch")
    return model.predict_proba(x[None, :])[0]


def _forward_trace(model: MlpModel, x):
    activations = [x]
    pre_activations = []
    a = x
    for l in range(len(model.weights) - 1):
        z = model.weights[l] @ a + model.biases[l]
        a = _activate(z, model.activation)
        pre_activations.append(z)
        activations.append(a)
    z = model.weights[-1] @ a + model.biases[-1]
    z = z - z.max()
    e = np.exp(z)
    probs = e / e.sum()
    return activations, pre_activations, probs


def mlp_loss(model: MlpModel, x, class_index: int, l2: float) -> float:
    """Per-sample objective: cross-entropy of the softmax output plus
    (l2 / 2) * sum of squared weights (biases unpenalized)."""
    _, _, probs = _forward_trace(model, np.asarray(x, dtype=np.float64))
    ce = -math.log(float(np.clip(probs[class_index], PROB_CLIP, 1.0 - PROB_CLIP)))
    penalty = 0.5 * l2 * sum(float((w ** 2).sum()) for w in model.weights)
    return ce + penalty


def mlp_gradients(model: MlpModel, x, class_index: int, l2: float):
    """Backpropagated gradient of mlp_loss at one sample.

    Softmax + cross-entropy gives output delta = probs - onehot; hidden
    deltas chain through the activation derivative; each weight gradient
    adds the l2 * W penalty term.
    """
    x = np.asarray(x, dtype=np.float64)
    activations, pre_activations, probs = _forward_trace(model, x)
    delta = probs.copy()
    delta[class_index] -= 1.0
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = np.outer(delta, activations[l]) + l2 * model.weights[l]
        grads_b[l] = delta
        if l > 0:
            delta = (model.weights[l].T @ delta) * _activation_grad(
                pre_activations[l - 1], activations[l], model.activation
            )
    return grads_w, grads_b


def cross_entropy_loss(predicted, actual: str, class_names: list[str]) -> float:
    """-log of the probability assigned to the actual class, clipped to
    [1e-15, 1 - 1e-15]."""
    p = np.asarray(predicted, dtype=np.float64)
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError("predicted probabilities must sum to 1")
    if actual not in class_names:
        raise ValueError(f"unknown label {actual!r}")
    value = float(p[class_names.index(actual)])
    return -math.log(min(max(value, PROB_CLIP), 1.0 - PROB_CLIP))


def sgd_update(params, gradient, rate: float):
    """One descent step: params - rate * gradient, elementwise, over an
    array or a (possibly nested) sequence of arrays."""
    if rate <= 0.0:
        raise ValueError("learning rate must be positive")
    return _sgd_step_checked(params, gradient, rate)


def _sgd_step_checked(params, gradient, rate):
    if isinstance(params, (list, tuple)):
        if not isinstance(gradient, (list, tuple)) or len(params) != len(gradient):
            raise ValueError("parameter/gradient shape mismatch")
        return [_sgd_step_checked(p, g, rate) for p, g in zip(params, gradient)]
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(gradient, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError("parameter/gradient shape mismatch")
    out = p - rate * g
    return float(out) if out.ndim == 0 else out


def train_mlp(ds: LabeledDataset, cfg: TrainConfig | None = None) -> MlpModel:
    """Train by per-sample SGD: seeded init, per-epoch Fisher-Yates shuffle
    from the same SplitMix64 stream, one backprop update per row."""
    cfg = cfg or TrainConfig()
    if len(ds.class_names) < 2:
        raise ValueError("MLP training requires at least 2 classes")
    X = ds.X
    _check_finite(X)
    rate = cfg.resolved("learning_rate", MLP_DEFAULTS)
    limit = cfg.resolved("limit", MLP_DEFAULTS)
    l2 = cfg.resolved("l2", MLP_DEFAULTS)
    hidden = cfg.resolved("hidden", MLP_DEFAULTS)
    activation = cfg.resolved("activation", MLP_DEFAULTS)

    sizes = [X.shape[1], *hidden, len(ds.class_names)]
    rng = SplitMix64(cfg.seed)
    model = init_mlp(list(ds.class_names), sizes, activation, rng)
    y = ds.y
    for _ in range(limit):
        for i in shuffled_indices(ds.n, rng):
            grads_w, grads_b = mlp_gradients(model, X[i], int(y[i]), l2)
            model.weights = sgd_update(model.weights, grads_w, rate)
            model.biases = sgd_update(model.biases, grads_b, rate)
    return model


# ---------------------------------------------------------------------------
# Serialization


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        doc = {"n": node.n}
        if node.counts is not None:
            doc["counts"] = [int(c) for c in node.counts]
            doc["probs"] = [float(p) for p in node.probs]
        if node.mean is not None:
            doc["mean"] = float(node.mean)
        return doc
    return {
        "n": node.n,
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict) -> TreeNode:
    if "feature" not in doc:
        counts = doc.get("counts")
        return TreeNode(
            n=doc["n"],
            counts=None if counts is None else np.array(counts),
            probs=None if counts is None else np.array(doc["probs"]),
            mean=doc.get("mean"),
        )
    return TreeNode(
        n=doc["n"],
        feature=doc["feature"],
        threshold=doc["threshold"],
        left=_node_from_dict(doc["left"]),
        right=_node_from_dict(doc["right"]),
    )


def model_to_json(model) -> str:
    """Self-describing JSON for any trained model; reals carry 17
    significant digits so reloading reproduces predictions bit-identically."""
    if isinstance(model, LogisticModel):
        doc = {
            "kind": "logistic",
            "classes": model.class_names,
            "intercepts": model.intercepts.tolist(),
            "coefficients": model.coefficients.tolist(),
        }
    elif isinstance(model, TreeModel):
        doc = {
            "kind": "tree",
            "criterion": model.criterion,
            "classes": model.class_names,
            "feature_count": model.feature_count,
            "max_depth": model.max_depth,
            "min_leaf": model.min_leaf,
            "root": _node_to_dict(model.root),
        }
    elif isinstance(model, NaiveBayesModel):
        doc = {
            "kind": "naive_bayes",
            "classes": model.class_names,
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
            "eps_var": float(model.eps_var),
        }
    elif isinstance(model, MlpModel):
        doc = {
            "kind": "mlp",
            "classes": model.class_names,
            "activation": model.activation,
            "layer_sizes": model.layer_sizes,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    return render_json(doc) + "\n"


def model_from_json(text: str):
    """Inverse of model_to_json."""
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "logistic":
        return LogisticModel(
            doc["classes"],
            np.array(doc["intercepts"], dtype=np.float64),
            np.array(doc["coefficients"], dtype=np.float64),
        )
    if kind == "tree":
        return TreeModel(
            doc["criterion"], doc["classes"], doc["feature_count"],
            _node_from_dict(doc["root"]), doc["max_depth"], doc["min_leaf"],
        )
    if kind == "naive_bayes":
        return NaiveBayesModel(
            doc["classes"],
            np.array(doc["priors"], dtype=np.float64),
            np.array(doc["means"], dtype=np.float64),
            np.array(doc["variances"], dtype=np.float64),
            float(doc["eps_var"]),
        )
    if kind == "mlp":
        return MlpModel(
            doc["classes"], list(doc["layer_sizes"]),
            [np.array(w, dtype=np.float64) for w in doc["weights"]],
            [np.array(b, dtype=np.float64) for b in doc["biases"]],
            doc["activation"],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w") as handle:
        handle.write(model_to_json(model))


def load_model(path):
    with open(path, "r") as handle:
        return model_from_json(handle.read())
