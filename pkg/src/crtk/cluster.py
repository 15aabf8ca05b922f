"""Ward agglomerative clustering, dendrogram cuts and matrix ordering."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, InputFileError, ValidationError
from .lexicon import SynonymGroup
from .relations import SimilarityMatrix

DENDROGRAM_FORMAT = "crtk-dendrogram-1"


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in the usual linkage convention.

    Leaves are nodes ``0..n-1``; merge ``i`` creates node ``n + i``. In each
    merge ``left < right``.
    """

    merges: tuple[Merge, ...]
    leaf_labels: tuple[str, ...]

    def __post_init__(self):
        n = len(self.leaf_labels)
        if len(self.merges) != n - 1:
            raise ValidationError(f"{n} leaves need {n - 1} merges, got {len(self.merges)}")
        seen = set()
        for i, m in enumerate(self.merges):
            for child in (m.left, m.right):
                if child >= n + i or child in seen:
                    raise ValidationError(f"merge {i} references invalid or reused node {child}")
                seen.add(child)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def children(self, node: int) -> tuple[int, int] | None:
        n = self.n_leaves
        if node < n:
            return None
        m = self.merges[node - n]
        return m.left, m.right

    def leaf_order(self) -> list[int]:
        """Leaf indices left to right, visiting the left child of each merge first."""
        n = self.n_leaves
        if n == 1:
            return [0]
        out, stack = [], [2 * n - 2]
        while stack:
            node = stack.pop()
            if node < n:
                out.append(node)
            else:
                m = self.merges[node - n]
                stack.append(m.right)
                stack.append(m.left)
        return out

    def to_json(self) -> dict:
        return {
            "format": DENDROGRAM_FORMAT,
            "labels": list(self.leaf_labels),
            "merges": [[m.left, m.right, m.height, m.size] for m in self.merges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dendrogram":
        if data.get("format") != DENDROGRAM_FORMAT:
            raise ValidationError(f"unsupported dendrogram format {data.get('format')!r}")
        merges = tuple(Merge(int(a), int(b), float(h), int(s)) for a, b, h, s in data["merges"])
        return cls(merges, tuple(data["labels"]))

    def save(self, path) -> None:
        try:
            Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")
        except OSError as exc:
            raise InputFileError(f"cannot write dendrogram {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "Dendrogram":
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except OSError as exc:
            raise InputFileError(f"cannot read dendrogram {path}: {exc}") from exc


def _as_arrays(vectors):
    if isinstance(vectors, Mapping):
        vectors = list(vectors.items())
    vectors = list(vectors)
    if len(vectors) < 2:
        raise ValidationError("Ward clustering needs at least 2 vectors")
    labels = [str(lab) for lab, _ in vectors]
    dims = {np.asarray(v).shape for _, v in vectors}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValidationError(f"vectors must be 1-D and share a dimension, got shapes {sorted(dims)}")
    X = np.array([np.asarray(v, dtype=np.float64) for _, v in vectors])
    if not np.isfinite(X).all():
        raise ValidationError("vectors contain NaN or infinite values")
    return labels, X


def hac_ward(vectors, normalize: bool = False) -> Dendrogram:
    """Ward-linkage agglomeration of ``(label, vector)`` pairs.

    Costs start as squared Euclidean distances and are updated with the
    Lance-Williams recurrence

        D(k, i+j) = ((n_i + n_k) D(k, i) + (n_j + n_k) D(k, j) - n_k D(i, j)) / (n_i + n_j + n_k)

    so a merge of clusters A and B costs 2 |A||B| / (|A| + |B|) * |c_A - c_B|^2.
    The reported height is the square root of that cost, which for two
    single points is their Euclidean distance. Equal costs are resolved by
    the smallest (min node id, max node id) pair.
    """
    labels, X = _as_arrays(vectors)
    if normalize:
        norms = np.linalg.norm(X, axis=1)
        norms[norms == 0] = 1.0
        X = X / norms[:, None]
    n = len(X)
    D = np.empty((n, n))
    for i in range(n):
        D[i] = ((X - X[i]) ** 2).sum(axis=1)
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    node = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        best = D.min()
        ties = np.argwhere(D == best)
        if len(ties) > 2:
            a, b = min(
                (tuple(p) for p in ties if p[0] < p[1]),
                key=lambda p: (min(node[p[0]], node[p[1]]), max(node[p[0]], node[p[1]])),
            )
        else:
            a, b = sorted(ties[0])
        ni, nj = size[a], size[b]
        nk = size
        new = ((ni + nk) * D[a] + (nj + nk) * D[b] - nk * best) / (ni + nj + nk)
        lo, hi = sorted((node[a], node[b]))
        merges.append(Merge(int(lo), int(hi), float(np.sqrt(best)), int(ni + nj)))
        active[b] = False
        new[~active] = np.inf
        new[a] = np.inf
        D[a, :] = new
        D[:, a] = new
        D[b, :] = np.inf
        D[:, b] = np.inf
        size[a] = ni + nj
        node[a] = n + step
    return Dendrogram(tuple(merges), tuple(labels))


def cut_indices(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Cluster number per leaf after undoing the last ``k - 1`` merges.

    Clusters are numbered in order of their lowest leaf index.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}, got {k}")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, m in enumerate(dendrogram.merges[: n - k]):
        parent[find(m.left)] = n + i
        parent[find(m.right)] = n + i
    roots: dict[int, int] = {}
    out = np.empty(n, dtype=np.int64)
    for leaf in range(n):
        out[leaf] = roots.setdefault(find(leaf), len(roots))
    return out


def cut(dendrogram: Dendrogram, k: int) -> dict[str, int]:
    """Map each leaf label to its cluster number; see ``cut_indices``."""
    labels = dendrogram.leaf_labels
    if len(set(labels)) != len(labels):
        raise ValidationError("leaf labels must be unique to cut by label")
    return dict(zip(labels, cut_indices(dendrogram, k).tolist()))


def _axis_order(sums: np.ndarray, clusters: np.ndarray) -> tuple[list[int], list[int]]:
    """Permutation and display cluster numbers for one axis.

    Clusters go by descending total, members by descending own sum; ties
    keep current positions, so re-ordering an ordered axis is a no-op.
    """
    totals: dict[int, float] = {}
    first: dict[int, int] = {}
    for pos, c in enumerate(clusters.tolist()):
        totals[c] = totals.get(c, 0.0) + float(sums[pos])
        first.setdefault(c, pos)
    cluster_rank = sorted(totals, key=lambda c: (-totals[c], first[c]))
    perm, labels = [], []
    for rank, c in enumerate(cluster_rank):
        members = [p for p in range(len(sums)) if clusters[p] == c]
        members.sort(key=lambda p: (-sums[p], p))
        perm.extend(members)
        labels.extend([rank] * len(members))
    return perm, labels


def _clusters_for(labels: Sequence[str], dendro: Dendrogram | None, k: int | None, axis: str) -> np.ndarray:
    if dendro is None:
        return np.arange(len(labels))
    have, want = set(dendro.leaf_labels), set(labels)
    if have != want or len(dendro.leaf_labels) != len(labels):
        raise ValidationError(
            f"{axis} dendrogram leaves do not match matrix labels: "
            f"missing {sorted(want - have)}, extra {sorted(have - want)}"
        )
    mapping = cut(dendro, k if k is not None else 1)
    return np.array([mapping[lab] for lab in labels])


def order_matrix(matrix: SimilarityMatrix, row_dendro=None, col_dendro=None, k_rows=None, k_cols=None) -> SimilarityMatrix:
    """Group rows/columns by dendrogram cuts and sort them by similarity sums.

    Without a dendrogram an axis is sorted by plain row (column) sums.
    """
    rc = _clusters_for(matrix.row_labels, row_dendro, k_rows, "row")
    cc = _clusters_for(matrix.col_labels, col_dendro, k_cols, "column")
    rperm, rlab = _axis_order(matrix.values.sum(axis=1), rc)
    cperm, clab = _axis_order(matrix.values.sum(axis=0), cc)
    old_r = matrix.row_order or tuple(range(len(rperm)))
    old_c = matrix.col_order or tuple(range(len(cperm)))
    return replace(
        matrix,
        row_groups=tuple(matrix.row_groups[p] for p in rperm),
        col_groups=tuple(matrix.col_groups[p] for p in cperm),
        values=matrix.values[np.ix_(rperm, cperm)],
        row_order=tuple(old_r[p] for p in rperm),
        col_order=tuple(old_c[p] for p in cperm),
        row_clusters=tuple(rlab),
        col_clusters=tuple(clab),
    )


def summarize_by_cluster(matrix: SimilarityMatrix, row_partition=None) -> SimilarityMatrix:
    """Average the rows of each cluster into one row.

    ``row_partition`` is a cluster number per row, or a mapping from row
    label to cluster number; it defaults to the clusters stored by
    ``order_matrix``. Output clusters appear in order of their first row.
    Each output row group is named after its first row and lists the
    clustered row labels as members.
    """
    labels = matrix.row_labels
    if row_partition is None:
        if matrix.row_clusters is None:
            raise ValidationError("matrix has no row clusters; order it or pass a partition")
        part = list(matrix.row_clusters)
    elif isinstance(row_partition, Mapping):
        gap = [lab for lab in labels if lab not in row_partition]
        if gap:
            raise DataError(f"partition does not cover rows: {gap}")
        part = [row_partition[lab] for lab in labels]
    else:
        part = list(row_partition)
        if len(part) != len(labels):
            raise DataError(f"partition has {len(part)} entries for {len(labels)} rows")
    order: list = []
    members: dict = {}
    for pos, c in enumerate(part):
        if c not in members:
            order.append(c)
            members[c] = []
        members[c].append(pos)
    values = np.array([matrix.values[members[c]].mean(axis=0) for c in order])
    groups = tuple(SynonymGroup(labels[members[c][0]], tuple(labels[p] for p in members[c])) for c in order)
    return replace(
        matrix, row_groups=groups, values=values.reshape(len(order), len(matrix.col_groups)),
        row_order=None, row_clusters=tuple(range(len(order))),
    )
