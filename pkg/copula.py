"""Empirical copula transform and histogram signatures of copula samples.

A Panel (T observations of a d-variate series) is mapped to normalized ranks,
which are binned on a regular m^d grid. Cells are left-open, right-closed
intervals ((k)/m, (k+1)/m], so the rank 1.0 always falls in the last cell and a
comonotone sample of length T (m dividing T) fills the diagonal cells evenly.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.stats import rankdata

from copula_util import DataError

logger = logging.getLogger(__name__)

# Dense constructions above this many atoms are rejected (EMD costs are O(n^2) in memory)
MAX_DENSE_ATOMS = 65536
MASS_TOLERANCE = 1e-12
# Ranks are multiples of 1/(2T): anything closer than this to a cell edge sits on it
EDGE_TOLERANCE = 1e-9

DEFAULT_RESOLUTIONS = {1: 16, 2: 16, 3: 8, 4: 4}


def default_resolution(dimension):
    return DEFAULT_RESOLUTIONS.get(dimension, 4)


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Panel:
    """T x d matrix of raw observations of one multivariate time series."""
    values: np.ndarray
    series_id: Optional[str] = None
    columns: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f'a panel is a T x d matrix, got an array of shape {values.shape}')
        if values.shape[0] < 2 or values.shape[1] < 1:
            raise DataError(f'a panel needs T >= 2 observations and d >= 1 variables, got {values.shape}')
        finite = np.isfinite(values)
        if not finite.all():
            row, col = np.argwhere(~finite)[0]
            raise DataError(f'non-finite value {values[row, col]} at row {row + 1}, column {col + 1}')
        if self.columns is not None and len(self.columns) != values.shape[1]:
            raise DataError(f'{len(self.columns)} column names for {values.shape[1]} columns')
        object.__setattr__(self, 'values', _frozen(values, float))

    @property
    def length(self):
        return self.values.shape[0]

    @property
    def dimension(self):
        return self.values.shape[1]

    def column_names(self):
        if self.columns is not None:
            return list(self.columns)
        return [f'x{i + 1}' for i in range(self.dimension)]


@dataclass(frozen=True, eq=False)
class CopulaSample:
    """Normalized ranks of a Panel: T points in (0,1]^d."""
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2:
            raise DataError(f'a copula sample is a T x d matrix, got shape {points.shape}')
        if (points <= 0).any() or (points > 1).any():
            raise DataError('copula sample points must lie in (0,1]')
        object.__setattr__(self, 'points', _frozen(points, float))

    @property
    def length(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class Signature:
    """Sparse weighted point set on the cell centers of a regular m^d grid.

    Atoms are stored as integer cell indices, sorted lexicographically, with
    their weights. Positions are the cell centers (k + 0.5) / m.
    """
    cells: np.ndarray
    weights: np.ndarray
    resolution: int
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=float)
        m = int(self.resolution)
        if m < 2:
            raise DataError(f'grid resolution must be >= 2, got {m}')
        if cells.ndim != 2 or cells.shape[0] == 0 or cells.shape[1] == 0:
            raise DataError(f'a signature needs at least one atom with d >= 1 coordinates, got cells of shape {cells.shape}')
        if weights.shape != (cells.shape[0],):
            raise DataError(f'{weights.shape[0] if weights.ndim else 0} weights for {cells.shape[0]} atoms')
        if (cells < 0).any() or (cells >= m).any():
            raise DataError(f'cell indices must lie in [0, {m - 1}]')
        if not np.isfinite(weights).all() or (weights <= 0).any():
            raise DataError('atom weights must be finite and strictly positive')

        order = np.lexsort(cells.T[::-1])
        cells = cells[order]
        weights = weights[order]
        if cells.shape[0] > 1 and (np.diff(cells, axis=0) == 0).all(axis=1).any():
            raise DataError('duplicate atom positions in signature')

        object.__setattr__(self, 'resolution', m)
        object.__setattr__(self, 'cells', _frozen(cells, np.int64))
        object.__setattr__(self, 'weights', _frozen(weights, float))

    @property
    def dimension(self):
        return self.cells.shape[1]

    @property
    def size(self):
        return self.cells.shape[0]

    @property
    def positions(self):
        return (self.cells + 0.5) / self.resolution

    @property
    def mass(self):
        return float(np.sum(self.weights))

    def is_normalized(self):
        return abs(self.mass - 1.0) <= MASS_TOLERANCE

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return (self.resolution == other.resolution
                and self.cells.shape == other.cells.shape
                and np.array_equal(self.cells, other.cells)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def to_json(self):
        return {
            'dimension': self.dimension,
            'resolution': self.resolution,
            'atoms': [[[float(p) for p in position], float(w)] for position, w in zip(self.positions, self.weights)],
        }

    @classmethod
    def from_json(cls, document, where='signature'):
        from copula_util import check_keys

        check_keys(document, ['resolution', 'atoms'], ['dimension', 'resolution', 'atoms'], where)
        m = document['resolution']
        if not isinstance(m, int) or isinstance(m, bool):
            raise DataError(f'{where}: resolution must be an integer')
        atoms = document['atoms']
        if not isinstance(atoms, list) or len(atoms) == 0:
            raise DataError(f'{where}: "atoms" must be a non-empty list of [[coordinates...], weight]')
        try:
            positions = np.array([atom[0] for atom in atoms], dtype=float)
            weights = np.array([atom[1] for atom in atoms], dtype=float)
        except (TypeError, ValueError, IndexError) as e:
            raise DataError(f'{where}: atoms must be [[coordinates...], weight] pairs ({e})') from e
        if positions.ndim != 2:
            raise DataError(f'{where}: atoms have inconsistent dimensions')
        if 'dimension' in document and document['dimension'] != positions.shape[1]:
            raise DataError(f'{where}: declared dimension {document["dimension"]} but atoms have {positions.shape[1]} coordinates')
        cells = np.rint(positions * m - 0.5)
        if np.abs((cells + 0.5) / m - positions).max() > EDGE_TOLERANCE:
            raise DataError(f'{where}: atom positions are not cell centers of a grid of resolution {m}')
        return cls(cells.astype(np.int64), weights, m)


def empirical_copula_transform(panel):
    """Normalized ranks R / T of every column; ties receive their average rank."""
    if not isinstance(panel, Panel):
        panel = Panel(panel)
    ranks = rankdata(panel.values, method='average', axis=0)
    return CopulaSample(ranks / panel.length)


def grid_cells(points, resolution):
    """Index of the ((k)/m, (k+1)/m] cell containing every coordinate."""
    cells = np.ceil(np.asarray(points) * resolution - EDGE_TOLERANCE).astype(np.int64) - 1
    return np.clip(cells, 0, resolution - 1)


def bin_copula(sample, resolution):
    """Histogram a copula sample on the m^d grid; only occupied cells become atoms."""
    if not isinstance(resolution, (int, np.integer)) or resolution < 2:
        raise DataError(f'grid resolution must be an integer >= 2, got {resolution}')
    cells = grid_cells(sample.points, resolution)
    occupied, counts = np.unique(cells, axis=0, return_counts=True)
    return Signature(occupied, counts / sample.length, int(resolution))


def _check_dense_budget(dimension, resolution):
    if resolution < 2:
        raise DataError(f'grid resolution must be >= 2, got {resolution}')
    if dimension < 1:
        raise DataError(f'dimension must be >= 1, got {dimension}')
    n_atoms = resolution ** dimension
    if n_atoms > MAX_DENSE_ATOMS:
        raise DataError(f'a dense {dimension}-dimensional grid at resolution {resolution} has {n_atoms} atoms '
                        f'(limit {MAX_DENSE_ATOMS}); lower the resolution or use a sampled signature')
    return n_atoms


def independence_signature(dimension, resolution):
    """The discrete uniform density: every cell center with weight m^-d."""
    n_atoms = _check_dense_budget(dimension, resolution)
    cells = np.indices((resolution,) * dimension).reshape(dimension, -1).T
    return Signature(cells, np.full(n_atoms, 1.0 / n_atoms), resolution, metadata={'kind': 'independence'})


def monotone_signature(dimension, resolution, orientation):
    """m atoms of weight 1/m on the diagonal, mirrored on every axis with orientation -1."""
    orientation = np.asarray(orientation, dtype=int).ravel()
    if orientation.size == 0 or orientation.size != dimension:
        raise DataError(f'orientation needs one +1/-1 entry per coordinate ({dimension}), got {orientation.tolist()}')
    if not np.isin(orientation, (-1, 1)).all():
        raise DataError(f'orientation entries must be +1 or -1, got {orientation.tolist()}')
    if resolution < 2:
        raise DataError(f'grid resolution must be >= 2, got {resolution}')
    k = np.arange(resolution)[:, None]
    cells = np.where(orientation > 0, k, resolution - 1 - k)
    return Signature(cells, np.full(resolution, 1.0 / resolution), resolution,
                     metadata={'kind': 'monotone', 'orientation': orientation.tolist()})


def default_pattern_sample_size(resolution):
    return 100 * resolution ** 2


def signature_from_pattern(pattern, resolution, sample_size=None, seed=None):
    """Target signature of a noiseless pattern: M generated points, rank transformed and binned.

    `pattern` is a synth.PatternSpec or a pattern kind name; its noise level is ignored.
    """
    # synth imports this module
    import synth

    if isinstance(pattern, str):
        pattern = synth.PatternSpec(kind=pattern)
    if sample_size is None:
        sample_size = default_pattern_sample_size(resolution)
    if sample_size < 10 * resolution ** 2:
        raise DataError(f'a pattern signature at resolution {resolution} needs at least {10 * resolution ** 2} points, got {sample_size}')
    if seed is None:
        seed = pattern.seed
    spec = pattern.replace(noise_level=0.0, sample_size=sample_size, seed=seed)
    panel = synth.generate_pattern(spec)
    signature = bin_copula(empirical_copula_transform(panel), resolution)
    return Signature(signature.cells, signature.weights, resolution,
                     metadata={'kind': 'pattern', 'pattern': spec.kind, 'sample_size': sample_size, 'seed': seed})


def sampled_independence_signature(dimension, resolution, sample_size=None, seed=None):
    """Independence copula approximated by M independent uniform points (for grids above the dense budget)."""
    import synth

    spec = synth.PatternSpec(kind='independence', dimension=dimension, seed=0 if seed is None else seed)
    if sample_size is None:
        sample_size = default_pattern_sample_size(resolution)
    logger.info(f'Approximating the {dimension}-dimensional independence copula from {sample_size} uniform points')
    return signature_from_pattern(spec, resolution, sample_size=sample_size)


def dense_signature(signature):
    """The m^d histogram array of a signature."""
    _check_dense_budget(signature.dimension, signature.resolution)
    histogram = np.zeros((signature.resolution,) * signature.dimension)
    histogram[tuple(signature.cells.T)] = signature.weights
    return histogram


def signature_from_histogram(histogram):
    """Sparse signature of the nonzero cells of an m^d histogram, normalized to mass 1."""
    histogram = np.asarray(histogram, dtype=float)
    if len(set(histogram.shape)) != 1:
        raise DataError(f'a histogram is an m x ... x m array, got shape {histogram.shape}')
    if not np.isfinite(histogram).all() or (histogram < 0).any():
        raise DataError('histogram frequencies must be finite and nonnegative')
    total = float(histogram.sum())
    if total == 0:
        raise DataError('an all-zero histogram has no mass to normalize')
    cells = np.argwhere(histogram > 0)
    return Signature(cells, histogram[tuple(cells.T)] / total, histogram.shape[0])
