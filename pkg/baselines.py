"""Reference dependence coefficients and the estimator descriptor used by the power harness."""
from dataclasses import dataclass, replace
from typing import Optional

import dcor as energy
import numpy as np
from scipy.stats import pearsonr, rankdata, spearmanr

from copula_util import DataError
from dependence import tdc
from synth import make_rng

ESTIMATORS = ('pearson', 'spearman', 'dcor', 'rdc', 'tdc')
RDC_PROJECTIONS = 20
RDC_SCALE = 1 / 6
# Singular values below this fraction of the largest span no direction of the feature space
RANK_TOLERANCE = 1e-10


def _as_vector(values, name):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    if values.ndim != 1:
        raise DataError(f'{name} must be a vector, got shape {values.shape}')
    if not np.isfinite(values).all():
        raise DataError(f'{name} has non-finite values')
    return values


def _as_matrix(values, name):
    values = getattr(values, 'values', values)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise DataError(f'{name} must be a T x d matrix, got shape {values.shape}')
    if not np.isfinite(values).all():
        raise DataError(f'{name} has non-finite values')
    return values


def _check_pair(x, y):
    if len(x) != len(y):
        raise DataError(f'x and y have different lengths ({len(x)} and {len(y)})')
    if len(x) < 2:
        raise DataError(f'at least 2 observations are needed, got {len(x)}')


def pearson(x, y):
    """Sample linear correlation."""
    x, y = _as_vector(x, 'x'), _as_vector(y, 'y')
    _check_pair(x, y)
    for name, values in (('x', x), ('y', y)):
        if np.ptp(values) == 0:
            raise DataError(f'{name} has zero variance')
    return float(np.clip(pearsonr(x, y)[0], -1.0, 1.0))


def spearman(x, y):
    """Pearson correlation of the average ranks."""
    x, y = _as_vector(x, 'x'), _as_vector(y, 'y')
    _check_pair(x, y)
    for name, values in (('x', x), ('y', y)):
        if np.ptp(values) == 0:
            raise DataError(f'{name} has zero variance')
    return float(np.clip(spearmanr(x, y)[0], -1.0, 1.0))


def dcor(x, y):
    """Distance correlation sqrt(dCov^2(x,y) / sqrt(dVar^2(x) dVar^2(y)))."""
    x, y = _as_matrix(x, 'x'), _as_matrix(y, 'y')
    _check_pair(x, y)
    for name, values in (('x', x), ('y', y)):
        if np.ptp(values, axis=0).max() == 0:
            raise DataError(f'{name} is constant, its distance variance is 0')
    if x.shape[1] == 1 and y.shape[1] == 1:
        value = energy.distance_correlation(x[:, 0], y[:, 0])
    else:
        value = energy.distance_correlation(x, y)
    return float(np.clip(value, 0.0, 1.0))


def _random_features(values, k, s, rng):
    """sin of k random projections of the copula transform (with a bias column)."""
    copula = rankdata(values, method='average', axis=0) / values.shape[0]
    copula = np.column_stack([copula, np.ones(values.shape[0])])
    weights = rng.standard_normal((copula.shape[1], k))
    return np.sin((s / copula.shape[1]) * copula @ weights)


def _orthonormal_basis(features):
    centered = features - features.mean(axis=0)
    u, singular, _ = np.linalg.svd(centered, full_matrices=False)
    if singular.size == 0 or singular[0] == 0:
        return u[:, :0]
    return u[:, singular > RANK_TOLERANCE * singular[0]]


def rdc(x, y, k=RDC_PROJECTIONS, s=RDC_SCALE, seed=0):
    """Randomized Dependence Coefficient: largest canonical correlation of random sinusoidal copula features."""
    x, y = _as_matrix(x, 'x'), _as_matrix(y, 'y')
    _check_pair(x, y)
    if k < 1:
        raise DataError(f'the number of projections must be >= 1, got {k}')
    if len(x) <= k:
        raise DataError(f'RDC with {k} projections needs more than {k} observations, got {len(x)}')
    rng = make_rng(seed)
    basis_x = _orthonormal_basis(_random_features(x, k, s, rng))
    basis_y = _orthonormal_basis(_random_features(y, k, s, rng))
    if basis_x.shape[1] == 0 or basis_y.shape[1] == 0:
        raise DataError('RDC features are constant; x or y has no variation')
    correlations = np.linalg.svd(basis_x.T @ basis_y, compute_uv=False)
    return float(np.clip(correlations[0], 0.0, 1.0))


@dataclass(frozen=True)
class Estimator:
    """A dependence statistic with its configuration.

    Pearson and Spearman report |correlation|. The tdc estimator needs a target
    set, supplied per pattern by the power harness through `with_targets`.
    """
    name: str
    projections: int = RDC_PROJECTIONS
    scale: float = RDC_SCALE
    resolution: int = 16
    solver: str = 'exact'
    targets: Optional[object] = None

    def __post_init__(self):
        if self.name not in ESTIMATORS:
            raise DataError(f'unknown estimator "{self.name}", expected one of {", ".join(ESTIMATORS)}')

    def with_targets(self, targets):
        return replace(self, targets=targets)

    def label(self):
        if self.name == 'tdc':
            return f'tdc(m={self.resolution})'
        if self.name == 'rdc':
            return f'rdc(k={self.projections},s={self.scale:.4g})'
        return self.name

    def statistic(self, x, y, seed=0):
        if self.name == 'pearson':
            return abs(pearson(x, y))
        if self.name == 'spearman':
            return abs(spearman(x, y))
        if self.name == 'dcor':
            return dcor(x, y)
        if self.name == 'rdc':
            return rdc(x, y, k=self.projections, s=self.scale, seed=seed)
        if self.targets is None:
            raise DataError('the tdc estimator needs a target set')
        return tdc(x, y, self.targets, solver=self.solver).value
