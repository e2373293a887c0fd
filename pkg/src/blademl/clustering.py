"""Row-distance matrices and agglomerative hierarchical clustering.

Distances default to euclidean on column-wise z-scored features.  The
agglomeration keeps cluster-to-cluster distances current with the
Lance-Williams recurrences, so single, complete, average, and Ward linkage
share one merge loop.  Ward operates on squared euclidean distances and
reports each merge height as the square root of the merge cost, keeping all
four linkages height-monotone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix, zscore_normalize
from .fmt import fmt17

METRICS = ("euclidean", "cosine")
LINKAGES = ("single", "complete", "average", "ward")


@dataclass
class DistanceMatrix:
    """Condensed upper-triangular pairwise distances over n rows."""

    n: int
    condensed: np.ndarray
    metric: str
    normalized: bool

    def __post_init__(self):
        self.condensed = np.asarray(self.condensed, dtype=np.float64)
        expected = self.n * (self.n - 1) // 2
        if self.condensed.shape != (expected,):
            raise ValueError(f"condensed length must be {expected}")
        if not np.all(np.isfinite(self.condensed)):
            raise ValueError("distances must be finite")
        if np.any(self.condensed < 0.0):
            raise ValueError("distances must be nonnegative")

    def index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return self.n * i - i * (i + 1) // 2 + (j - i - 1)

    def get(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return float(self.condensed[self.index(i, j)])

    def full(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        rows, cols = np.triu_indices(self.n, k=1)
        out[rows, cols] = self.condensed
        out[cols, rows] = self.condensed
        return out


def pairwise_distances(
    m: FeatureMatrix, metric: str = "euclidean", normalize: bool = True
) -> DistanceMatrix:
    """All-pairs row distances, z-scoring columns first by default.

    euclidean: sqrt(sum of squared differences).  cosine: 1 - cosine
    similarity, defined as 1 whenever either row has zero norm; tiny
    negative rounding residues are clamped to 0.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if m.n < 2:
        raise ValueError("pairwise distances require at least 2 rows")
    values = m.values
    if not np.all(np.isfinite(values)):
        raise ValueError("features must be finite")
    if normalize:
        values = zscore_normalize(m)[0].values
    rows, cols = np.triu_indices(m.n, k=1)
    if metric == "euclidean":
        diffs = values[rows] - values[cols]
        condensed = np.sqrt((diffs ** 2).sum(axis=1))
    else:
        norms = np.sqrt((values ** 2).sum(axis=1))
        dots = (values[rows] * values[cols]).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            similarity = dots / (norms[rows] * norms[cols])
        condensed = 1.0 - similarity
        zero = (norms[rows] == 0.0) | (norms[cols] == 0.0)
        condensed[zero] = 1.0
        condensed = np.maximum(condensed, 0.0)
    return DistanceMatrix(m.n, condensed, metric, normalize)


@dataclass
class Merge:
    left: int
    right: int
    height: float
    new_id: int


@dataclass
class Dendrogram:
    """n leaves and n - 1 merges; merge i creates cluster id n + i."""

    n: int
    merges: list[Merge]
    linkage: str
    leaf_names: list[str]

    def __post_init__(self):
        if len(self.merges) != self.n - 1:
            raise ValueError("a dendrogram over n leaves needs n - 1 merges")
        if len(self.leaf_names) != self.n:
            raise ValueError("leaf names must cover every leaf")


@dataclass
class ClusterAssignment:
    """Cluster index per leaf; indices ordered by each cluster's smallest
    leaf id."""

    labels: np.ndarray
    count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.count < 1 or self.labels.size == 0:
            raise ValueError("assignment must cover at least one cluster")
        present = np.unique(self.labels)
        if present.min() < 0 or present.max() >= self.count:
            raise ValueError("cluster indices must lie in [0, count)")
        if present.size != self.count:
            raise ValueError("every cluster must be nonempty")


def agglomerate(
    d: DistanceMatrix, linkage: str = "average",
    leaf_names: list[str] | None = None,
) -> Dendrogram:
    """Merge the closest pair repeatedly, updating by Lance-Williams.

    Tie-breaking is deterministic: among minimal-distance pairs, pick the
    one with the lexicographically smallest (min leaf of the left cluster,
    min leaf of the right cluster), where the left cluster is the one
    holding the smaller minimum leaf id.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    n = d.n
    if leaf_names is None:
        leaf_names = [str(i) for i in range(n)]
    if len(leaf_names) != n:
        raise ValueError("leaf names must cover every leaf")

    total = 2 * n - 1
    work = np.zeros((total, total))
    base = d.full()
    if linkage == "ward":
        base = base ** 2
    work[:n, :n] = base

    min_leaf = list(range(n)) + [0] * (n - 1)
    size = [1] * n + [0] * (n - 1)
    active = list(range(n))
    merges: list[Merge] = []

    for step in range(n - 1):
        best = None
        best_key = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                p, q = active[ai], active[bi]
                if min_leaf[p] <= min_leaf[q]:
                    key = (work[p, q], min_leaf[p], min_leaf[q])
                    pair = (p, q)
                else:
                    key = (work[p, q], min_leaf[q], min_leaf[p])
                    pair = (q, p)
                if best_key is None or key < best_key:
                    best_key = key
                    best = pair
        left, right = best
        dist = work[left, right]
        height = float(np.sqrt(dist)) if linkage == "ward" else float(dist)
        new_id = n + step
        merges.append(Merge(left, right, height, new_id))

        p_size, q_size = size[left], size[right]
        active = [c for c in active if c not in (left, right)]
        for other in active:
            dp = work[left, other]
            dq = work[right, other]
            if linkage == "single":
                updated = min(dp, dq)
            elif linkage == "complete":
                updated = max(dp, dq)
            elif linkage == "average":
                updated = (p_size * dp + q_size * dq) / (p_size + q_size)
            else:
                r_size = size[other]
                updated = (
                    (p_size + r_size) * dp
                    + (q_size + r_size) * dq
                    - r_size * dist
                ) / (p_size + q_size + r_size)
            work[new_id, other] = updated
            work[other, new_id] = updated
        min_leaf[new_id] = min_leaf[left]
        size[new_id] = p_size + q_size
        active.append(new_id)

    return Dendrogram(n, merges, linkage, list(leaf_names))


def cut_dendrogram(
    dg: Dendrogram, count: int | None = None, height: float | None = None
) -> ClusterAssignment:
    """Flatten the dendrogram into clusters.

    Count mode undoes the last count - 1 merges; height mode keeps exactly
    the merges with height <= the threshold.  Cluster indices follow each
    cluster's smallest leaf id.
    """
    if (count is None) == (height is None):
        raise ValueError("give exactly one of count or height")
    if count is not None:
        if not 1 <= count <= dg.n:
            raise ValueError(f"cluster count must lie in [1, {dg.n}]")
        kept = dg.merges[: dg.n - count]
    else:
        if height < 0.0:
            raise ValueError("height threshold must be nonnegative")
        kept = [m for m in dg.merges if m.height <= height]

    parent = list(range(2 * dg.n - 1))

    def find(c: int) -> int:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for merge in kept:
        parent[find(merge.left)] = merge.new_id
        parent[find(merge.right)] = merge.new_id

    roots: dict[int, int] = {}
    labels = np.empty(dg.n, dtype=np.int64)
    for leaf in range(dg.n):
        root = find(leaf)
        if root not in roots:
            roots[root] = len(roots)
        labels[leaf] = roots[root]
    return ClusterAssignment(labels, len(roots))


def _children(dg: Dendrogram) -> dict[int, Merge]:
    return {m.new_id: m for m in dg.merges}


def export_dendrogram(dg: Dendrogram, fmt: str = "text") -> str:
    """Render as an indented text tree or a Newick string.

    Text: two-space indent per level, `node <height>` lines for merges and
    `leaf <name>` lines, children ordered smaller-min-leaf first (the stored
    left/right order).  Newick: branch length = parent merge height - child
    merge height (leaves sit at height 0), six decimals, `;`-terminated,
    names passed through verbatim.
    """
    if fmt not in ("text", "newick"):
        raise ValueError("format must be text or newick")
    by_id = _children(dg)
    root = dg.merges[-1].new_id if dg.merges else 0

    if fmt == "text":
        lines: list[str] = []

        def walk(node: int, depth: int) -> None:
            pad = "  " * depth
            if node < dg.n:
                lines.append(f"{pad}leaf {dg.leaf_names[node]}")
                return
            merge = by_id[node]
            lines.append(f"{pad}node {merge.height:.6f}")
            walk(merge.left, depth + 1)
            walk(merge.right, depth + 1)

        walk(root, 0)
        return "\n".join(lines) + "\n"

    def render(node: int, parent_height: float) -> str:
        if node < dg.n:
            return f"{dg.leaf_names[node]}:{parent_height:.6f}"
        merge = by_id[node]
        inner = (
            f"({render(merge.left, merge.height)},"
            f"{render(merge.right, merge.height)})"
        )
        return f"{inner}:{parent_height - merge.height:.6f}"

    if not dg.merges:
        return f"{dg.leaf_names[0]};"
    top = by_id[root]
    body = (
        f"({render(top.left, top.height)},"
        f"{render(top.right, top.height)})"
    )
    return body + ";"


def write_distance_csv(
    d: DistanceMatrix, ids: list[str], path, metadata=None
) -> None:
    """Full square matrix with id header row and column."""
    if len(ids) != d.n:
        raise ValueError("ids must cover every row")
    full = d.full()
    with open(path, "w", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", *ids])
        for i, row_id in enumerate(ids):
            writer.writerow([row_id, *(fmt17(v) for v in full[i])])


def write_assignment_csv(
    assignment: ClusterAssignment, ids: list[str], path, metadata=None
) -> None:
    """`id,cluster` rows."""
    if len(ids) != assignment.labels.size:
        raise ValueError("ids must cover every row")
    with open(path, "w", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "cluster"])
        for row_id, label in zip(ids, assignment.labels):
            writer.writerow([row_id, int(label)])
