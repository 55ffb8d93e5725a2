"""Agglomerative clustering of distance matrices and partition agreement."""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from sklearn.metrics import adjusted_rand_score

from copula_util import DataError, check_keys

LINKAGES = ('single', 'complete', 'average')
DEFAULT_LINKAGE = 'average'
SYMMETRY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    entries: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise DataError(f'a distance matrix is a non-empty N x N array, got shape {entries.shape}')
        if not np.isfinite(entries).all():
            raise DataError('distance matrix has non-finite entries')
        if np.abs(entries - entries.T).max() > SYMMETRY_TOLERANCE:
            raise DataError('distance matrix is not symmetric')
        if (np.diag(entries) != 0).any():
            raise DataError('distance matrix diagonal is not zero')
        if (entries < 0).any():
            raise DataError('distance matrix has negative entries')
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(entries.shape[0]))
        if len(labels) != entries.shape[0]:
            raise DataError(f'{len(labels)} labels for a {entries.shape[0]} x {entries.shape[0]} matrix')
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'labels', tuple(str(label) for label in labels))

    @property
    def size(self):
        return self.entries.shape[0]

    def scaled(self, factor):
        return DistanceMatrix(self.entries * factor, self.labels)


@dataclass(frozen=True)
class Merge:
    """Clusters `left` and `right` joined at `height` into a cluster of `size` leaves.

    Leaves are numbered 0..N-1, the cluster created by merge s is N + s.
    """
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    merges: Tuple[Merge, ...]
    labels: Tuple[str, ...]
    linkage: str = DEFAULT_LINKAGE

    @property
    def n_leaves(self):
        return len(self.labels)

    def to_json(self):
        return {
            'linkage': self.linkage,
            'labels': list(self.labels),
            'merges': [{'left': m.left, 'right': m.right, 'height': m.height, 'size': m.size} for m in self.merges],
        }

    @classmethod
    def from_json(cls, document, where='dendrogram'):
        check_keys(document, ['labels', 'merges'], ['linkage', 'labels', 'merges'], where)
        try:
            merges = tuple(Merge(int(m['left']), int(m['right']), float(m['height']), int(m['size'])) for m in document['merges'])
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f'{where}: merges must be {{left, right, height, size}} records ({e})') from e
        labels = tuple(str(label) for label in document['labels'])
        if len(merges) != len(labels) - 1:
            raise DataError(f'{where}: {len(merges)} merges for {len(labels)} leaves')
        return cls(merges, labels, document.get('linkage', DEFAULT_LINKAGE))


def agglomerate(dm, linkage=DEFAULT_LINKAGE):
    """Lance-Williams agglomeration; equal distances are resolved towards the smallest leaf indices."""
    if linkage not in LINKAGES:
        raise DataError(f'unknown linkage "{linkage}", expected one of {", ".join(LINKAGES)}')
    if not isinstance(dm, DistanceMatrix):
        dm = DistanceMatrix(dm)
    n = dm.size
    if n < 2:
        raise DataError(f'clustering needs at least 2 items, got {n}')

    # slot p holds the cluster whose smallest leaf is p
    distances = np.array(dm.entries, dtype=float)
    sizes = np.ones(n, dtype=np.int64)
    ids = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []

    for step in range(n - 1):
        candidates = np.where(active[:, None] & active[None, :], distances, np.inf)
        candidates[np.tril_indices(n)] = np.inf
        p, q = np.unravel_index(np.argmin(candidates), candidates.shape)
        height = float(distances[p, q])
        size = int(sizes[p] + sizes[q])
        merges.append(Merge(int(ids[p]), int(ids[q]), height, size))

        if linkage == 'single':
            updated = np.minimum(distances[p], distances[q])
        elif linkage == 'complete':
            updated = np.maximum(distances[p], distances[q])
        else:
            updated = (sizes[p] * distances[p] + sizes[q] * distances[q]) / size
        distances[p, :] = updated
        distances[:, p] = updated
        distances[p, p] = 0.0
        active[q] = False
        sizes[p] = size
        ids[p] = n + step

    return Dendrogram(tuple(merges), dm.labels, linkage)


def cut(dendrogram, k):
    """Flat partition into k clusters: undo the top k-1 merges.

    Clusters are numbered in order of their smallest leaf.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise DataError(f'k must lie in [1, {n}], got {k}')
    parent = list(range(2 * n - 1))

    def find(node):
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for step, merge in enumerate(dendrogram.merges[:n - k]):
        parent[find(merge.left)] = n + step
        parent[find(merge.right)] = n + step

    roots = {}
    assignments = np.empty(n, dtype=np.int64)
    for leaf in range(n):
        assignments[leaf] = roots.setdefault(find(leaf), len(roots))
    return assignments


def assignments_to_json(dendrogram, assignments):
    return {
        'k': int(len(set(assignments.tolist()))),
        'assignments': {label: int(cluster) for label, cluster in zip(dendrogram.labels, assignments)},
    }


def adjusted_rand_index(a, b):
    """Chance-corrected agreement of two partitions; 1 iff they are identical up to relabeling."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if len(a) != len(b):
        raise DataError(f'partitions have different lengths ({len(a)} and {len(b)})')
    if len(a) == 0:
        raise DataError('partitions are empty')
    return float(adjusted_rand_score(a, b))
