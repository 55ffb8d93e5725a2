"""Deterministic patterns plus noise, Gaussian pairs and labelled multivariate datasets.

Random numbers come from numpy's Philox 4x64 counter-based generator. A stream
is identified by the user seed and a tuple of non-negative integers (its spawn
key), e.g. (pattern index, noise level key, trial, role) in the power harness,
(class index, member index) for MTS datasets. Streams with different keys are
independent and the same (seed, key) pair reproduces the same numbers on every
platform.
"""
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from copula import Panel
from copula_util import DataError

logger = logging.getLogger(__name__)

PATTERNS = ('linear', 'quadratic', 'cubic', 'sine_low', 'sine_high', 'fourth_root', 'circle', 'step')
KINDS = PATTERNS + ('independence',)

# 0, 1/3, 2/3, ..., 3
NOISE_LEVELS = tuple(k / 3 for k in range(10))
DEFAULT_SAMPLE_SIZE = 500


def make_rng(seed, *stream):
    """Philox generator for the stream `stream` of the user seed `seed`."""
    if seed is None or int(seed) < 0:
        raise DataError(f'seed must be a non-negative integer, got {seed}')
    if any(int(key) < 0 for key in stream):
        raise DataError(f'stream keys must be non-negative integers, got {stream}')
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(key) for key in stream))
    return np.random.Generator(np.random.Philox(sequence))


def _cubic(x):
    t = x - 1 / 3
    return 128 * t ** 3 - 48 * t ** 2 - 12 * t


FUNCTIONS = {
    'linear': lambda x: x,
    'quadratic': lambda x: 4 * (x - 0.5) ** 2,
    'cubic': _cubic,
    'sine_low': lambda x: np.sin(4 * np.pi * x),
    'sine_high': lambda x: np.sin(16 * np.pi * x),
    'fourth_root': lambda x: x ** 0.25,
    'step': lambda x: (x > 0.5).astype(float),
}

_GRID = np.linspace(0, 1, 10001)
# Noise scale: y-range of each noiseless pattern
NOISE_SCALES = {kind: float(np.ptp(g(_GRID))) for kind, g in FUNCTIONS.items()}
NOISE_SCALES['circle'] = 2.0
NOISE_SCALES['independence'] = 1.0


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    noise_level: float = 0.0
    sample_size: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0
    dimension: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f'unknown pattern "{self.kind}", expected one of {", ".join(KINDS)}')
        if int(self.sample_size) < 2:
            raise DataError(f'a pattern sample needs at least 2 points, got {self.sample_size}')
        if not np.isfinite(self.noise_level) or self.noise_level < 0:
            raise DataError(f'noise level must be finite and nonnegative, got {self.noise_level}')
        if self.dimension != 2 and self.kind != 'independence':
            raise DataError(f'pattern "{self.kind}" is bivariate; only "independence" takes another dimension')
        if self.dimension < 1:
            raise DataError(f'dimension must be >= 1, got {self.dimension}')

    def replace(self, **changes):
        return replace(self, **changes)


def _draw(kind, n, noise_level, rng, dimension=2):
    """n x dimension values; column 0 is the latent x, the others g(x) + noise."""
    if kind == 'independence':
        return rng.random((n, dimension))

    scale = noise_level * NOISE_SCALES[kind]
    if kind == 'circle':
        if dimension != 2:
            raise DataError('the circle pattern is bivariate')
        theta = 2 * np.pi * rng.random(n)
        noise = rng.standard_normal((n, 2))
        return np.column_stack([np.cos(theta), np.sin(theta)]) + scale * noise

    x = rng.random(n)
    noise = rng.standard_normal((n, dimension - 1))
    y = FUNCTIONS[kind](x)[:, None] + scale * noise
    return np.column_stack([x, y])


def generate_pattern(spec, stream=()):
    """Panel of `spec.sample_size` points: x ~ U[0,1], y = g(x) + l * sigma_kind * N(0,1).

    `stream` selects an independent stream of `spec.seed` (see make_rng).
    """
    rng = make_rng(spec.seed, *stream)
    values = _draw(spec.kind, int(spec.sample_size), spec.noise_level, rng, spec.dimension)
    columns = ('x', 'y') if values.shape[1] == 2 else tuple(f'u{i + 1}' for i in range(values.shape[1]))
    return Panel(values, series_id=f'{spec.kind}_{spec.noise_level:g}', columns=columns)


def gaussian_copula_panel(rho, sample_size=DEFAULT_SAMPLE_SIZE, seed=0):
    """Bivariate standard Gaussian sample with correlation rho."""
    if not -1 < rho < 1:
        raise DataError(f'correlation must lie in (-1, 1), got {rho}')
    rng = make_rng(seed)
    z = rng.standard_normal((int(sample_size), 2))
    y = rho * z[:, 0] + np.sqrt(1 - rho ** 2) * z[:, 1]
    return Panel(np.column_stack([z[:, 0], y]), series_id=f'gaussian_{rho:g}', columns=('x', 'y'))


@dataclass(frozen=True)
class MtsClass:
    """A class of d-variate series whose coordinates follow `kind` against the first one.

    sign = -1 mirrors the pattern (linear with sign -1 is countermonotone).
    """
    dimension: int
    kind: str
    noise_level: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.dimension < 2:
            raise DataError(f'an MTS class needs d >= 2 coordinates, got {self.dimension}')
        if self.kind not in KINDS:
            raise DataError(f'unknown pattern "{self.kind}", expected one of {", ".join(KINDS)}')
        if self.kind == 'circle' and self.dimension != 2:
            raise DataError('the circle pattern is bivariate')
        if self.sign not in (-1, 1):
            raise DataError(f'sign must be +1 or -1, got {self.sign}')
        if not np.isfinite(self.noise_level) or self.noise_level < 0:
            raise DataError(f'noise level must be finite and nonnegative, got {self.noise_level}')

    @property
    def name(self):
        return f'{self.kind}{"" if self.sign > 0 else "_mirrored"}_d{self.dimension}'

    @classmethod
    def parse(cls, text):
        """Parse "kind:d[:sign[:noise]]", e.g. "linear:2:-1:0.1"."""
        parts = text.split(':')
        try:
            kind = parts[0]
            dimension = int(parts[1]) if len(parts) > 1 else 2
            sign = int(parts[2]) if len(parts) > 2 else 1
            noise_level = float(parts[3]) if len(parts) > 3 else 0.0
        except ValueError as e:
            raise DataError(f'invalid class "{text}", expected kind:d[:sign[:noise]]') from e
        return cls(dimension, kind, noise_level, sign)


def generate_mts_dataset(n_per_class, classes: Sequence[MtsClass], length=DEFAULT_SAMPLE_SIZE, seed=0):
    """`n_per_class` panels per class; returns a list of (Panel, label) in class order."""
    if len(classes) < 2:
        raise DataError(f'an MTS dataset needs at least 2 classes, got {len(classes)}')
    if n_per_class < 1:
        raise DataError(f'n_per_class must be >= 1, got {n_per_class}')
    dataset = []
    for c, mts_class in enumerate(classes):
        if not isinstance(mts_class, MtsClass):
            raise DataError(f'class {c} is not a valid class specification: {mts_class!r}')
        for i in range(n_per_class):
            rng = make_rng(seed, c, i)
            values = _draw(mts_class.kind, int(length), mts_class.noise_level, rng, mts_class.dimension)
            values[:, 1:] *= mts_class.sign
            label = mts_class.name
            panel = Panel(values, series_id=f'{label}_{i:03d}', columns=tuple(f'x{j + 1}' for j in range(values.shape[1])))
            dataset.append((panel, label))
    logger.debug(f'Generated {len(dataset)} panels in {len(classes)} classes')
    return dataset
