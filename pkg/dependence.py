"""Intra-dependence distance and Target Dependencies Coefficient (TDC).

D_intra compares the copula histograms of two d-variate series. TDC locates the
copula of the stacked observations (X, Y) between the independence copula and
the nearest of a set of target copulas:

    TDC = EMD(C_ind, C) / (EMD(C_ind, C) + min_i EMD(C, C_i))
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from cluster import DistanceMatrix
from copula import (MAX_DENSE_ATOMS, Panel, Signature, bin_copula, default_resolution, empirical_copula_transform,
                    independence_signature, monotone_signature, sampled_independence_signature, signature_from_pattern)
from copula_util import DataError, NumericalError, check_keys
from transport import emd

logger = logging.getLogger(__name__)

MODES = ('intra', 'tdc')

# Keys of a TargetSet JSON document entry
K_JSON_KIND = 'kind'
K_JSON_ORIENTATION = 'orientation'
K_JSON_PATTERN = 'pattern'
K_JSON_SAMPLE_SIZE = 'sample_size'
K_JSON_SEED = 'seed'
K_JSON_ATOMS = 'atoms'
K_JSON_RESOLUTION = 'resolution'
K_JSON_DIMENSION = 'dimension'
TARGET_KINDS = ('monotone', 'pattern', 'explicit')
LIST_AUTHORIZED_KEYS_JSON = [K_JSON_KIND, K_JSON_ORIENTATION, K_JSON_PATTERN, K_JSON_SAMPLE_SIZE, K_JSON_SEED,
                             K_JSON_ATOMS, K_JSON_RESOLUTION, K_JSON_DIMENSION]
LIST_MANDATORY_KEYS_JSON = {
    'monotone': [K_JSON_KIND, K_JSON_ORIENTATION],
    'pattern': [K_JSON_KIND, K_JSON_PATTERN],
    'explicit': [K_JSON_KIND, K_JSON_ATOMS],
}


def _as_panel(panel):
    return panel if isinstance(panel, Panel) else Panel(panel)


def independence_copula(dimension, resolution, seed=0):
    """Dense independence signature, or its sampled approximation above the dense budget."""
    if resolution ** dimension <= MAX_DENSE_ATOMS:
        return independence_signature(dimension, resolution)
    return sampled_independence_signature(dimension, resolution, seed=seed)


@dataclass(frozen=True, eq=False)
class TargetSet:
    """Named target copulas and the independence copula, all on one grid."""
    targets: Tuple[Tuple[str, Signature], ...]
    independence: Signature

    def __post_init__(self):
        targets = tuple((str(name), signature) for name, signature in self.targets)
        if len(targets) == 0:
            raise DataError('a target set needs at least one target')
        names = [name for name, _ in targets]
        if len(set(names)) != len(names):
            raise DataError(f'duplicate target names in {names}')
        for name, signature in targets:
            if signature.dimension != self.independence.dimension or signature.resolution != self.independence.resolution:
                raise DataError(f'target "{name}" is {signature.dimension}-dimensional at resolution {signature.resolution}, '
                                f'expected {self.independence.dimension} at resolution {self.independence.resolution}')
            if not signature.is_normalized():
                raise DataError(f'target "{name}" has mass {signature.mass!r}, expected 1')
            if signature == self.independence:
                raise DataError(f'target "{name}" equals the independence copula')
        object.__setattr__(self, 'targets', targets)

    @property
    def dimension(self):
        return self.independence.dimension

    @property
    def resolution(self):
        return self.independence.resolution

    @property
    def names(self):
        return [name for name, _ in self.targets]

    @classmethod
    def build(cls, targets: Dict[str, Signature], seed=0):
        """Target set over the independence copula matching the targets' grid."""
        if len(targets) == 0:
            raise DataError('a target set needs at least one target')
        first = next(iter(targets.values()))
        return cls(tuple(targets.items()), independence_copula(first.dimension, first.resolution, seed=seed))

    @classmethod
    def comonotone_countermonotone(cls, dimension, resolution):
        """Perfect dependence and perfect anti-dependence between the two halves of the stacked coordinates."""
        if dimension < 2 or dimension % 2:
            raise DataError(f'stacked dimension must be even and >= 2, got {dimension}')
        half = dimension // 2
        return cls.build({
            'comonotone': monotone_signature(dimension, resolution, [1] * dimension),
            'countermonotone': monotone_signature(dimension, resolution, [1] * half + [-1] * half),
        })

    @classmethod
    def for_pattern(cls, kind, resolution, sample_size=None, seed=0):
        """Single target built from the noiseless pattern `kind`."""
        return cls.build({kind: signature_from_pattern(kind, resolution, sample_size=sample_size, seed=seed)}, seed=seed)

    @classmethod
    def from_json(cls, document, resolution, dimension=None, seed=0, where='targets'):
        """Build from {name: {"kind": "monotone"|"pattern"|"explicit", ...}}."""
        if not isinstance(document, dict) or len(document) == 0:
            raise DataError(f'{where}: expected a non-empty JSON object of named targets')
        targets = {}
        for name, entry in document.items():
            entry_where = f'{where}["{name}"]'
            if not isinstance(entry, dict) or entry.get(K_JSON_KIND) not in TARGET_KINDS:
                raise DataError(f'{entry_where}: "kind" must be one of {", ".join(TARGET_KINDS)}')
            kind = entry[K_JSON_KIND]
            check_keys(entry, LIST_MANDATORY_KEYS_JSON[kind], LIST_AUTHORIZED_KEYS_JSON, entry_where)

            if kind == 'monotone':
                orientation = entry[K_JSON_ORIENTATION]
                if not isinstance(orientation, list):
                    raise DataError(f'{entry_where}: orientation must be a list of +1/-1')
                signature = monotone_signature(len(orientation), resolution, orientation)
            elif kind == 'pattern':
                signature = signature_from_pattern(entry[K_JSON_PATTERN], resolution,
                                                   sample_size=entry.get(K_JSON_SAMPLE_SIZE),
                                                   seed=entry.get(K_JSON_SEED, seed))
            else:
                signature = Signature.from_json({K_JSON_RESOLUTION: entry.get(K_JSON_RESOLUTION, resolution),
                                                 K_JSON_ATOMS: entry[K_JSON_ATOMS]}, where=entry_where)
                if signature.resolution != resolution:
                    raise DataError(f'{entry_where}: resolution {signature.resolution} differs from the grid resolution {resolution}')
            if dimension is not None and signature.dimension != dimension:
                raise DataError(f'{entry_where}: target is {signature.dimension}-dimensional, expected {dimension}')
            targets[name] = signature
        return cls.build(targets, seed=seed)

    def to_json(self):
        document = {}
        for name, signature in self.targets:
            kind = signature.metadata.get('kind')
            if kind == 'monotone':
                document[name] = {K_JSON_KIND: 'monotone', K_JSON_ORIENTATION: signature.metadata['orientation']}
            elif kind == 'pattern':
                document[name] = {K_JSON_KIND: 'pattern', K_JSON_PATTERN: signature.metadata['pattern'],
                                  K_JSON_SAMPLE_SIZE: signature.metadata['sample_size'],
                                  K_JSON_SEED: signature.metadata['seed']}
            else:
                explicit = signature.to_json()
                document[name] = {K_JSON_KIND: 'explicit', K_JSON_RESOLUTION: explicit['resolution'],
                                  K_JSON_ATOMS: explicit['atoms']}
        return document


@dataclass(frozen=True)
class TdcResult:
    value: float
    activated_target: str
    independence_distance: float
    target_distances: Dict[str, float] = field(default_factory=dict)

    def to_json(self):
        return {
            'tdc': self.value,
            'activated_target': self.activated_target,
            'independence_distance': self.independence_distance,
            'target_distances': dict(self.target_distances),
        }


def copula_signature(panel, resolution):
    return bin_copula(empirical_copula_transform(panel), resolution)


def intra_distance(x1, x2, resolution=None, solver='exact', **solver_options):
    """D_intra: EMD between the copula histograms of two d-variate series (d >= 2)."""
    x1, x2 = _as_panel(x1), _as_panel(x2)
    if x1.dimension != x2.dimension:
        raise DataError(f'panels have different dimensions ({x1.dimension} and {x2.dimension})')
    if x1.dimension < 2:
        raise DataError('intra-dependence needs at least 2 coordinates per series')
    if resolution is None:
        resolution = default_resolution(x1.dimension)
    return emd(copula_signature(x1, resolution), copula_signature(x2, resolution), solver=solver, **solver_options)


def tdc(x, y, targets, resolution=None, solver='exact', **solver_options):
    """Target Dependencies Coefficient between x and y on the copula of their stacked observations."""
    x, y = _as_panel(x), _as_panel(y)
    if x.length != y.length:
        raise DataError(f'x and y have different lengths ({x.length} and {y.length})')
    dimension = x.dimension + y.dimension
    if dimension != targets.dimension:
        raise DataError(f'stacked dimension {dimension} does not match the {targets.dimension}-dimensional targets')
    if resolution is not None and resolution != targets.resolution:
        raise DataError(f'resolution {resolution} differs from the target set resolution {targets.resolution}')

    stacked = Panel(np.column_stack([x.values, y.values]))
    empirical = copula_signature(stacked, targets.resolution)

    independence_distance = emd(targets.independence, empirical, solver=solver, **solver_options)
    target_distances = {name: emd(empirical, target, solver=solver, **solver_options) for name, target in targets.targets}
    # first target wins ties
    activated = min(target_distances, key=target_distances.get)
    nearest = target_distances[activated]

    denominator = independence_distance + nearest
    if denominator <= 0:
        raise NumericalError('the empirical copula equals both the independence copula and a target')
    value = min(max(independence_distance / denominator, 0.0), 1.0)
    return TdcResult(value, activated, independence_distance, target_distances)


def _intra_pair(s1, s2, solver, solver_options):
    return emd(s1, s2, solver=solver, **solver_options)


def _tdc_pair(x, y, targets, solver, solver_options):
    return 1.0 - tdc(x, y, targets, solver=solver, **solver_options).value


def distance_matrix(panels, mode='intra', targets=None, resolution=None, solver='exact', jobs=1, quiet=True,
                    labels=None, **solver_options):
    """Pairwise D_intra or 1 - TDC; every unordered pair is computed once, in parallel when jobs != 1."""
    panels = [_as_panel(panel) for panel in panels]
    if len(panels) < 2:
        raise DataError(f'a distance matrix needs at least 2 panels, got {len(panels)}')
    dimensions = sorted({panel.dimension for panel in panels})
    if len(dimensions) != 1:
        raise DataError(f'panels have heterogeneous dimensions {dimensions}')
    if mode not in MODES:
        raise DataError(f'unknown mode "{mode}", expected one of {", ".join(MODES)}')
    if labels is None:
        labels = [panel.series_id or f'panel_{i}' for i, panel in enumerate(panels)]

    pairs = list(combinations(range(len(panels)), 2))
    if mode == 'intra':
        if dimensions[0] < 2:
            raise DataError('intra-dependence needs at least 2 coordinates per series')
        if resolution is None:
            resolution = default_resolution(dimensions[0])
        signatures = [copula_signature(panel, resolution) for panel in panels]
        tasks = (delayed(_intra_pair)(signatures[i], signatures[j], solver, solver_options) for i, j in pairs)
    else:
        if targets is None:
            raise DataError('tdc mode needs a target set')
        if resolution is not None and resolution != targets.resolution:
            raise DataError(f'resolution {resolution} differs from the target set resolution {targets.resolution}')
        tasks = (delayed(_tdc_pair)(panels[i], panels[j], targets, solver, solver_options) for i, j in pairs)

    logger.info(f'Computing {len(pairs)} {mode} distances between {len(panels)} panels')
    values = Parallel(n_jobs=jobs)(tqdm(tasks, total=len(pairs), desc=f'{mode} distances', disable=quiet))

    entries = np.zeros((len(panels), len(panels)))
    for (i, j), value in zip(pairs, values):
        entries[i, j] = entries[j, i] = value
    return DistanceMatrix(entries, labels=tuple(labels))
