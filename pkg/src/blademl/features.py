"""Hand-crafted 37-dimensional image features, z-score normalization, PCA.

The feature layout is fixed so that every stage downstream (classifiers,
clustering, CSV files) agrees on column meaning:

  [0-2]   per-channel means R, G, B, divided by 255
  [3-5]   per-channel population standard deviations, divided by 255
  [6-8]   per-channel standardized skewness (third central moment / sd^3,
          0 when sd = 0)
  [9-24]  16-bin grayscale histogram, bin i covering [16 i, 16 i + 16) with
          the last bin closed at 255, normalized to sum 1
  [25]    mean 3x3 Sobel gradient magnitude over interior pixels, divided by
          255 * sqrt(32) (the analytic maximum)
  [26]    edge density: fraction of interior pixels with raw magnitude > 100
  [27]    dark-spot fraction: pixels with gray < mean - 2 sd (0 when sd = 0)
  [28-36] 3x3 grid of grayscale cell means / 255, row-major; cell bounds use
          floor division with remainder pixels assigned to the last cells
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fmt import fmt17
from .raster import Raster, to_grayscale

FEATURE_COUNT = 37
FEATURE_COLUMNS = [f"f{i:03d}" for i in range(FEATURE_COUNT)]

_SOBEL_MAX = 255.0 * np.sqrt(32.0)
_EDGE_THRESHOLD = 100.0


def extract_features(r: Raster) -> np.ndarray:
    """Compute the 37-feature vector for one RGB raster.

    Pure and deterministic: the same raster always yields bit-identical
    output.  Images smaller than 3x3 are rejected because the Sobel interior
    would be empty.
    """
    if r.channels != 3:
        raise ValueError("feature extraction requires a 3-channel raster")
    if r.width < 3 or r.height < 3:
        raise ValueError("image smaller than 3x3 has no gradient interior")

    rgb = r.grid().astype(np.float64)
    out = np.zeros(FEATURE_COUNT)

    means = rgb.mean(axis=(0, 1))
    sds = rgb.std(axis=(0, 1))
    out[0:3] = means / 255.0
    out[3:6] = sds / 255.0
    m3 = ((rgb - means) ** 3).mean(axis=(0, 1))
    nonzero = sds > 0.0
    out[6:9][nonzero] = m3[nonzero] / sds[nonzero] ** 3

    gray = to_grayscale(r).grid()[..., 0].astype(np.float64)
    n_pixels = gray.size

    bins = (gray.astype(np.int64) // 16).reshape(-1)
    out[9:25] = np.bincount(bins, minlength=16) / n_pixels

    gx = (
        gray[:-2, 2:] + 2.0 * gray[1:-1, 2:] + gray[2:, 2:]
        - gray[:-2, :-2] - 2.0 * gray[1:-1, :-2] - gray[2:, :-2]
    )
    gy = (
        gray[2:, :-2] + 2.0 * gray[2:, 1:-1] + gray[2:, 2:]
        - gray[:-2, :-2] - 2.0 * gray[:-2, 1:-1] - gray[:-2, 2:]
    )
    magnitude = np.sqrt(gx * gx + gy * gy)
    out[25] = magnitude.mean() / _SOBEL_MAX
    out[26] = float(np.mean(magnitude > _EDGE_THRESHOLD))

    g_mean = gray.mean()
    g_sd = gray.std()
    if g_sd > 0.0:
        out[27] = float(np.mean(gray < g_mean - 2.0 * g_sd))

    row_base = r.height // 3
    col_base = r.width // 3
    row_edges = [0, row_base, 2 * row_base, r.height]
    col_edges = [0, col_base, 2 * col_base, r.width]
    for gi in range(3):
        for gj in range(3):
            cell = gray[row_edges[gi]:row_edges[gi + 1],
                        col_edges[gj]:col_edges[gj + 1]]
            out[28 + 3 * gi + gj] = cell.mean() / 255.0
    return out


@dataclass
class FeatureMatrix:
    """Tabular carrier of feature rows with ids and optional labels."""

    ids: list[str]
    labels: list[str] | None
    columns: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        n, width = self.values.shape
        if len(self.ids) != n:
            raise ValueError("ids and rows must have equal length")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels and rows must have equal length")
        if len(self.columns) != width:
            raise ValueError("column names must match row width")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class NormalizationParams:
    """Per-column mean and population standard deviation for reuse on
    held-out rows."""

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.sd = np.asarray(self.sd, dtype=np.float64)
        if self.mean.shape != self.sd.shape or self.mean.ndim != 1:
            raise ValueError("mean and sd must be 1-D and equal length")
        if np.any(self.sd < 0.0):
            raise ValueError("standard deviations must be nonnegative")

    def apply(self, values: np.ndarray) -> np.ndarray:
        """(x - mean) / sd per column; zero-sd columns map to all zeros."""
        values = np.asarray(values, dtype=np.float64)
        out = values - self.mean
        nonzero = self.sd > 0.0
        out[:, nonzero] /= self.sd[nonzero]
        out[:, ~nonzero] = 0.0
        return out


def zscore_normalize(m: FeatureMatrix) -> tuple[FeatureMatrix, NormalizationParams]:
    """Column-wise z-scoring with population (divisor n) standard deviation."""
    if m.n < 1:
        raise ValueError("cannot normalize an empty matrix")
    params = NormalizationParams(m.values.mean(axis=0), m.values.std(axis=0))
    normalized = FeatureMatrix(m.ids, m.labels, m.columns, params.apply(m.values))
    return normalized, params


@dataclass
class PcaModel:
    """Column means, orthonormal component rows, explained variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variances: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) @ self.components.T


def pca_fit_transform(m: FeatureMatrix, d: int) -> tuple[PcaModel, FeatureMatrix]:
    """Principal component projection onto the top d eigen-directions.

    Covariance uses divisor n - 1.  Components are ordered by eigenvalue
    descending (stable under ties) and sign-fixed so each component's entry
    of largest absolute value is positive, ties resolved by lowest index.
    """
    n, width = m.values.shape
    if n < 2:
        raise ValueError("PCA requires at least 2 rows")
    if not 1 <= d <= min(n, width):
        raise ValueError(f"component count {d} outside [1, {min(n, width)}]")
    mean = m.values.mean(axis=0)
    centered = m.values - mean
    cov = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")[:d]
    components = eigenvectors[:, order].T.copy()
    variances = np.maximum(eigenvalues[order], 0.0)
    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0.0:
            row *= -1.0
    model = PcaModel(mean, components, variances)
    projected = centered @ components.T
    columns = [f"pc{i:03d}" for i in range(d)]
    return model, FeatureMatrix(m.ids, m.labels, columns, projected)


def write_features_csv(m: FeatureMatrix, path, metadata: dict | None = None) -> None:
    """Write `id,label,<columns...>` CSV with 17-significant-digit values.

    Optional metadata is emitted first as `# key: value` comment lines so
    every output file records how it was produced.
    """
    with open(path, "w", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "label", *m.columns])
        labels = m.labels if m.labels is not None else [""] * m.n
        for i in range(m.n):
            writer.writerow(
                [m.ids[i], labels[i], *(fmt17(v) for v in m.values[i])]
            )


def read_features_csv(path) -> FeatureMatrix:
    """Read the CSV format of write_features_csv; `#` comment lines skipped.

    Rows whose cell count differs from the header are rejected, naming the
    offending line.
    """
    with open(path, "r", newline="") as handle:
        rows = list(csv.reader(line for line in handle if not line.startswith("#")))
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    header = rows[0]
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise ValueError(f"{path}: header must start with id,label")
    columns = header[2:]
    ids: list[str] = []
    labels: list[str] = []
    values = np.empty((len(rows) - 1, len(columns)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ValueError(
                f"{path}: wrong column count on data row {i + 1} "
                f"({len(row)} cells, expected {len(header)})"
            )
        ids.append(row[0])
        labels.append(row[1])
        try:
            values[i] = [float(cell) for cell in row[2:]]
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric value on data row {i + 1}") from exc
    has_labels = any(label != "" for label in labels)
    return FeatureMatrix(ids, labels if has_labels else None, columns, values)
