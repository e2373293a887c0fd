"""Cross-validated metric suite, confusion matrices, pairwise comparisons.

The evaluator trains every requested model on the identical fold assignment
and pools out-of-fold probability predictions.  Pooled predictions feed the
confusion matrix and the headline metric suite; per-fold scores feed the
pairwise model-comparison matrices (fraction of folds where the row model
beats the column model, ties counted half).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import classifiers
from .classifiers import TrainConfig, cross_entropy_loss
from .dataset import FoldAssignment, LabeledDataset
from .features import zscore_normalize
from .fmt import fmt17

METRIC_NAMES = (
    "auc", "ca", "f1", "precision", "recall", "specificity", "mcc", "log_loss"
)

# Metrics that get a pairwise fold-win comparison table.
COMPARISON_METRICS = (
    "auc", "ca", "f1", "precision", "recall", "specificity", "log_loss"
)

MODEL_KINDS = ("tree", "nb", "logreg", "mlp")


class ProtocolError(ValueError):
    """A fold's training part is missing a class, so the fold cannot be
    evaluated under the shared protocol."""


class RSquaredUndefinedError(ValueError):
    """SST is zero: R^2 has no defined value.  SSE/SST are attached."""

    def __init__(self, sse: float, sst: float):
        super().__init__("R^2 undefined: total sum of squares is zero")
        self.sse = sse
        self.sst = sst


@dataclass
class ConfusionMatrix:
    """counts[i][j] = examples of actual class i predicted as class j."""

    classes: list[str]
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if self.counts.shape != (k, k):
            raise ValueError("counts must be square over the class list")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def proportions(self) -> np.ndarray:
        """Rows normalized to sum 1; empty rows stay all zero."""
        totals = self.counts.sum(axis=1, keepdims=True)
        out = np.zeros(self.counts.shape)
        nonzero = totals[:, 0] > 0
        out[nonzero] = self.counts[nonzero] / totals[nonzero]
        return out


def confusion_matrix(actual, predicted, classes: list[str]) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise ValueError("actual and predicted must have equal length")
    index = {name: i for i, name in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        if a not in index:
            raise ValueError(f"unknown actual label {a!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        counts[index[a], index[p]] += 1
    return ConfusionMatrix(list(classes), counts)


@dataclass
class ClassificationMetrics:
    ca: float
    precision: float
    recall: float
    f1: float
    specificity: float
    mcc: float


def classification_metrics(cm: ConfusionMatrix) -> ClassificationMetrics:
    """Support-weighted one-vs-rest metrics plus the multiclass MCC.

    Per class: precision TP/(TP+FP), recall TP/(TP+FN), specificity
    TN/(TN+FP), F1 the harmonic mean of precision and recall; every
    zero-denominator case scores 0.  The reported values weight each class
    by its actual count.  MCC uses the covariance (R_K) form with an exact
    integer numerator; a zero denominator scores 0.
    """
    counts = cm.counts
    n = int(counts.sum())
    if n < 1:
        raise ValueError("metrics of an empty confusion matrix are undefined")
    k = len(cm.classes)
    trace = int(np.trace(counts))
    ca = trace / n

    actual_totals = counts.sum(axis=1)
    predicted_totals = counts.sum(axis=0)
    precision = recall = f1 = specificity = 0.0
    for c in range(k):
        tp = int(counts[c, c])
        fp = int(predicted_totals[c]) - tp
        fn = int(actual_totals[c]) - tp
        tn = n - tp - fp - fn
        prec_c = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec_c = tp / (tp + fn) if tp + fn > 0 else 0.0
        spec_c = tn / (tn + fp) if tn + fp > 0 else 0.0
        f1_c = (
            2.0 * prec_c * rec_c / (prec_c + rec_c)
            if prec_c + rec_c > 0 else 0.0
        )
        weight = int(actual_totals[c]) / n
        precision += weight * prec_c
        recall += weight * rec_c
        specificity += weight * spec_c
        f1 += weight * f1_c

    # R_K covariance form, numerator in exact integer arithmetic.
    numerator = trace * n - int(
        sum(int(predicted_totals[c]) * int(actual_totals[c]) for c in range(k))
    )
    d_pred = n * n - int(sum(int(t) ** 2 for t in predicted_totals))
    d_actual = n * n - int(sum(int(t) ** 2 for t in actual_totals))
    if d_pred == 0 or d_actual == 0:
        mcc = 0.0
    else:
        mcc = numerator / (math.sqrt(d_pred) * math.sqrt(d_actual))
    return ClassificationMetrics(ca, precision, recall, f1, specificity, mcc)


def _rank_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """One-vs-rest AUC via the rank statistic with average ranks for ties;
    equals (concordant pairs + 0.5 * tied pairs) / (P * N) exactly."""
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    p = int(positive.sum())
    n_neg = scores.size - p
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - p * (p + 1) / 2.0) / (p * n_neg)


def auc(scores, actual, classes: list[str]) -> float:
    """Support-weighted mean of per-class one-vs-rest AUCs.

    Classes lacking either a positive or a negative example are skipped;
    if no class is valid the AUC is undefined and an error is raised.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(np.abs(scores.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("every probability row must sum to 1")
    if len(actual) != scores.shape[0]:
        raise ValueError("scores and labels must have equal length")
    index = {name: i for i, name in enumerate(classes)}
    y = np.array([index[a] for a in actual])
    total_support = 0
    weighted = 0.0
    for c in range(len(classes)):
        positive = y == c
        p = int(positive.sum())
        if p == 0 or p == y.size:
            continue
        weighted += p * _rank_auc(scores[:, c], positive)
        total_support += p
    if total_support == 0:
        raise ValueError("AUC undefined: all examples carry one label")
    return weighted / total_support


def mean_log_loss(scores, actual, classes: list[str]) -> float:
    """Mean clipped cross-entropy of the actual class probabilities."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(actual) != scores.shape[0]:
        raise ValueError("scores and labels must have equal length")
    losses = [
        cross_entropy_loss(scores[i], actual[i], classes)
        for i in range(scores.shape[0])
    ]
    return float(np.mean(losses))


def regression_errors(actual, predicted) -> tuple[float, float, float]:
    """SSE, SST, and R^2 = 1 - SSE/SST.

    SST = 0 (constant actuals) makes R^2 undefined and raises
    RSquaredUndefinedError carrying the SSE/SST values.
    """
    y = np.asarray(actual, dtype=np.float64)
    yhat = np.asarray(predicted, dtype=np.float64)
    if y.size == 0 or y.shape != yhat.shape:
        raise ValueError("actual and predicted must be nonempty equal-length")
    sse = float(((y - yhat) ** 2).sum())
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        raise RSquaredUndefinedError(sse, sst)
    return sse, sst, 1.0 - sse / sst


@dataclass
class MetricSuite:
    auc: float
    ca: float
    f1: float
    precision: float
    recall: float
    specificity: float
    mcc: float
    log_loss: float


@dataclass
class FoldScores:
    """One model's per-fold values for one metric."""

    model: str
    metric: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("fold scores must be finite")


@dataclass
class ModelSpec:
    """A learner to evaluate: display name, kind tag, hyperparameters."""

    name: str
    kind: str
    config: TrainConfig | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")


def train_spec(spec: ModelSpec, ds: LabeledDataset):
    if spec.kind == "tree":
        return classifiers.train_tree(ds, spec.config)
    if spec.kind == "nb":
        return classifiers.train_naive_bayes(ds)
    if spec.kind == "logreg":
        return classifiers.train_logistic(ds, spec.config)
    return classifiers.train_mlp(ds, spec.config)


@dataclass
class EvaluationReport:
    """Everything cmd-level output needs: pooled suites and confusions,
    per-fold scores, and the raw out-of-fold probabilities."""

    model_names: list[str]
    class_names: list[str]
    ids: list[str]
    actual: list[str]
    folds: FoldAssignment
    suites: dict
    confusions: dict
    fold_scores: dict
    oof_probs: dict
    predicted: dict


def _suite_from_predictions(probs, actual, classes) -> MetricSuite:
    predicted = [classes[int(np.argmax(row))] for row in probs]
    cm = confusion_matrix(actual, predicted, classes)
    m = classification_metrics(cm)
    return MetricSuite(
        auc=auc(probs, actual, classes),
        ca=m.ca, f1=m.f1, precision=m.precision, recall=m.recall,
        specificity=m.specificity, mcc=m.mcc,
        log_loss=mean_log_loss(probs, actual, classes),
    )


def cross_validate(
    ds: LabeledDataset, specs: list[ModelSpec], folds: FoldAssignment
) -> EvaluationReport:
    """Train/predict every model over the shared fold assignment.

    For each fold: columns are z-scored with statistics fitted on the
    training part only (reused on the held-out rows, so no information
    leaks across the split), every model trains on the standardized
    training part, and probabilities are predicted on the standardized
    fold.  Argmax ties resolve to the earliest class.  Raises
    ProtocolError naming the fold and class if any training part misses
    a class.
    """
    if len(ds.class_names) < 2:
        raise ValueError("cross-validation requires at least 2 classes")
    if folds.fold_of.size != ds.n:
        raise ValueError("fold assignment does not match dataset size")
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise ValueError("model names must be unique")

    for f in range(folds.k):
        train_idx = folds.train_indices(f)
        present = set(int(c) for c in np.unique(ds.y[train_idx]))
        for c, class_name in enumerate(ds.class_names):
            if c not in present:
                raise ProtocolError(
                    f"fold {f} training part is missing class {class_name!r}"
                )

    classes = list(ds.class_names)
    actual = list(ds.matrix.labels)
    suites = {}
    confusions = {}
    fold_scores = {}
    oof = {}
    predicted_labels = {}
    for spec in specs:
        probs = np.zeros((ds.n, len(classes)))
        for f in range(folds.k):
            train_idx = folds.train_indices(f)
            test_idx = folds.test_indices(f)
            train_ds = ds.subset(train_idx)
            norm_matrix, params = zscore_normalize(train_ds.matrix)
            model = train_spec(spec, LabeledDataset(norm_matrix, train_ds.class_names))
            probs[test_idx] = model.predict_proba(params.apply(ds.X[test_idx]))
        predicted = [classes[int(np.argmax(row))] for row in probs]
        cm = confusion_matrix(actual, predicted, classes)
        suites[spec.name] = _suite_from_predictions(probs, actual, classes)
        confusions[spec.name] = cm
        oof[spec.name] = probs
        predicted_labels[spec.name] = predicted

        per_metric = {name: [] for name in METRIC_NAMES}
        for f in range(folds.k):
            test_idx = folds.test_indices(f)
            fold_actual = [actual[i] for i in test_idx]
            fold_suite = _suite_from_predictions(
                probs[test_idx], fold_actual, classes
            )
            for name in METRIC_NAMES:
                per_metric[name].append(getattr(fold_suite, name))
        for name in METRIC_NAMES:
            fold_scores[(spec.name, name)] = FoldScores(
                spec.name, name, per_metric[name]
            )

    return EvaluationReport(
        model_names=names, class_names=classes, ids=list(ds.matrix.ids),
        actual=actual, folds=folds, suites=suites, confusions=confusions,
        fold_scores=fold_scores, oof_probs=oof, predicted=predicted_labels,
    )


def compare_models(fold_scores: list[FoldScores]) -> tuple[list[str], np.ndarray]:
    """Pairwise fold-win matrix: entry (A, B) = (wins + 0.5 ties) / k.

    Computed once per unordered pair and mirrored as 1 - p, so
    entry(A, B) + entry(B, A) = 1 holds exactly.  Diagonal entries are NaN
    (rendered empty in CSV output).
    """
    if not fold_scores:
        raise ValueError("no fold scores given")
    metric = fold_scores[0].metric
    k = fold_scores[0].values.size
    for fs in fold_scores:
        if fs.metric != metric:
            raise ValueError("all models must share the compared metric")
        if fs.values.size != k:
            raise ValueError("all models must share the fold count k")
    names = [fs.model for fs in fold_scores]
    matrix = np.full((len(names), len(names)), np.nan)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a = fold_scores[i].values
            b = fold_scores[j].values
            wins = int((a > b).sum())
            ties = int((a == b).sum())
            p = (wins + 0.5 * ties) / k
            matrix[i, j] = p
            matrix[j, i] = 1.0 - p
    return names, matrix


# ---------------------------------------------------------------------------
# CSV writers


def _write_metadata(handle, metadata: dict | None) -> None:
    for key, value in (metadata or {}).items():
        handle.write(f"# {key}: {value}\n")


def write_report_csv(report: EvaluationReport, path, metadata=None) -> None:
    """`model,auc,ca,f1,precision,recall,mcc,specificity,log_loss` rows."""
    with open(path, "w", newline="") as handle:
        _write_metadata(handle, metadata)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["model", "auc", "ca", "f1", "precision", "recall", "mcc",
             "specificity", "log_loss"]
        )
        for name in report.model_names:
            s = report.suites[name]
            writer.writerow(
                [name, fmt17(s.auc), fmt17(s.ca), fmt17(s.f1),
                 fmt17(s.precision), fmt17(s.recall), fmt17(s.mcc),
                 fmt17(s.specificity), fmt17(s.log_loss)]
            )


def write_confusion_csv(cm: ConfusionMatrix, path, metadata=None) -> None:
    """Counts block then row-proportion block, class names as headers."""
    with open(path, "w", newline="") as handle:
        _write_metadata(handle, metadata)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["counts", *cm.classes])
        for i, name in enumerate(cm.classes):
            writer.writerow([name, *(int(v) for v in cm.counts[i])])
        writer.writerow(["proportions", *cm.classes])
        proportions = cm.proportions
        for i, name in enumerate(cm.classes):
            writer.writerow([name, *(fmt17(v) for v in proportions[i])])


def write_predictions_csv(
    report: EvaluationReport, model_name: str, path, metadata=None
) -> None:
    """`id,fold,actual,predicted,p_<class>...` pooled out-of-fold rows."""
    probs = report.oof_probs[model_name]
    predicted = report.predicted[model_name]
    with open(path, "w", newline="") as handle:
        _write_metadata(handle, metadata)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["id", "fold", "actual", "predicted",
             *(f"p_{c}" for c in report.class_names)]
        )
        for i, row_id in enumerate(report.ids):
            writer.writerow(
                [row_id, int(report.folds.fold_of[i]), report.actual[i],
                 predicted[i], *(fmt17(v) for v in probs[i])]
            )


def write_fold_scores_csv(report: EvaluationReport, path, metadata=None) -> None:
    """One row per (model, metric) with k per-fold value columns."""
    k = report.folds.k
    with open(path, "w", newline="") as handle:
        _write_metadata(handle, metadata)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", "metric", *(f"fold{j}" for j in range(k))])
        for name in report.model_names:
            for metric in METRIC_NAMES:
                values = report.fold_scores[(name, metric)].values
                writer.writerow([name, metric, *(fmt17(v) for v in values)])


def write_comparison_csv(
    names: list[str], matrix: np.ndarray, path, metadata=None
) -> None:
    """Square fold-win table; the diagonal is left empty."""
    with open(path, "w", newline="") as handle:
        _write_metadata(handle, metadata)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", *names])
        for i, name in enumerate(names):
            row = [name]
            for j in range(len(names)):
                row.append("" if i == j else fmt17(matrix[i, j]))
            writer.writerow(row)
