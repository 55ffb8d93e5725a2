"""Statistical power of dependence estimators against noisy deterministic patterns.

For every (pattern, noise level) the estimator is calibrated on B null samples
(x and y drawn independently with the pattern's marginals); its power is the
fraction of B dependent samples whose statistic exceeds the (1 - alpha) null
quantile. Every trial owns the random stream
(pattern index, noise level key, trial, role) of the user seed, so results do
not depend on the number of jobs or on execution order.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas
from joblib import Parallel, delayed
from tqdm import tqdm

from baselines import RDC_PROJECTIONS, RDC_SCALE, Estimator
from copula_util import DataError, NumericalError
from dependence import TargetSet
from synth import DEFAULT_SAMPLE_SIZE, KINDS, NOISE_LEVELS, PATTERNS, PatternSpec, generate_pattern, make_rng

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 500
DEFAULT_ALPHA = 0.05
MIN_TRIALS = 100
MAX_FAILURE_RATE = 0.05
NULL_MODES = ('independent', 'permutation')
COLUMNS = ['estimator', 'pattern', 'noise_level', 'power', 'trials', 'threshold']

# Stream roles of a trial
ROLE_DEPENDENT = 0
ROLE_NULL = 1
ROLE_NULL_COPY = 2
ROLE_PERMUTATION = 3
ROLE_ESTIMATOR = 4


@dataclass(frozen=True)
class PowerRow:
    pattern: str
    noise_level: float
    power: float
    trials: int
    null_threshold: float


@dataclass(frozen=True)
class PowerCurve:
    estimator: str
    rows: Tuple[PowerRow, ...]

    def to_frame(self):
        return pandas.DataFrame([(self.estimator, row.pattern, row.noise_level, row.power, row.trials, row.null_threshold)
                                 for row in self.rows], columns=COLUMNS)


def _level_key(noise_level):
    return int(round(noise_level * 1_000_000))


def _stream(pattern, noise_level, trial, role):
    return (KINDS.index(pattern), _level_key(noise_level), trial, role)


def _estimator_seed(seed, pattern, noise_level, trial, role):
    rng = make_rng(seed, *_stream(pattern, noise_level, trial, ROLE_ESTIMATOR), role)
    return int(rng.integers(0, 2 ** 63))


def dependent_sample(pattern, noise_level, trial, seed, sample_size=DEFAULT_SAMPLE_SIZE):
    spec = PatternSpec(pattern, noise_level, sample_size, seed)
    values = generate_pattern(spec, stream=_stream(pattern, noise_level, trial, ROLE_DEPENDENT)).values
    return values[:, 0], values[:, 1]


def null_sample(pattern, noise_level, trial, seed, sample_size=DEFAULT_SAMPLE_SIZE, null_mode='independent'):
    """x and y with the pattern's marginals and no dependence."""
    spec = PatternSpec(pattern, noise_level, sample_size, seed)
    values = generate_pattern(spec, stream=_stream(pattern, noise_level, trial, ROLE_NULL)).values
    if null_mode == 'independent':
        copy = generate_pattern(spec, stream=_stream(pattern, noise_level, trial, ROLE_NULL_COPY)).values
        return values[:, 0], copy[:, 1]
    if null_mode == 'permutation':
        rng = make_rng(seed, *_stream(pattern, noise_level, trial, ROLE_PERMUTATION))
        return values[:, 0], rng.permutation(values[:, 1])
    raise DataError(f'unknown null mode "{null_mode}", expected one of {", ".join(NULL_MODES)}')


def _statistic(estimator, x, y, seed):
    try:
        return estimator.statistic(x, y, seed=seed)
    except (DataError, NumericalError) as e:
        return e


def _trial(estimator, pattern, noise_level, trial, seed, sample_size, null_mode, dependent):
    if dependent:
        x, y = dependent_sample(pattern, noise_level, trial, seed, sample_size)
        role = ROLE_DEPENDENT
    else:
        x, y = null_sample(pattern, noise_level, trial, seed, sample_size, null_mode)
        role = ROLE_NULL
    return _statistic(estimator, x, y, _estimator_seed(seed, pattern, noise_level, trial, role))


def _collect(estimator, pattern, noise_level, trials, seed, sample_size, null_mode, dependent, jobs, quiet):
    what = 'dependent' if dependent else 'null'
    tasks = (delayed(_trial)(estimator, pattern, noise_level, trial, seed, sample_size, null_mode, dependent)
             for trial in range(trials))
    results = Parallel(n_jobs=jobs)(tqdm(tasks, total=trials, disable=quiet,
                                         desc=f'{estimator.label()} {pattern} {noise_level:.3g} {what}'))

    statistics = []
    failures = 0
    for trial, result in enumerate(results):
        if isinstance(result, Exception):
            failures += 1
            logger.warning(f'{estimator.label()}, {pattern}, noise {noise_level:.3g}, {what} trial {trial} excluded: {result}')
        else:
            statistics.append(result)
    if failures > MAX_FAILURE_RATE * trials:
        raise NumericalError(f'{estimator.label()} failed on {failures} of {trials} {what} trials '
                             f'({pattern}, noise {noise_level:.3g})')
    return np.array(statistics, dtype=float)


def _check_protocol(trials, alpha):
    if trials < MIN_TRIALS:
        raise DataError(f'at least {MIN_TRIALS} trials are needed, got {trials}')
    if not 0 < alpha <= 1:
        raise DataError(f'alpha must lie in (0, 1], got {alpha}')


def make_estimator(name, projections=RDC_PROJECTIONS, scale=RDC_SCALE, resolution=16, solver='exact'):
    return Estimator(name.strip().lower(), projections=projections, scale=scale, resolution=resolution, solver=solver)


def prepare_estimator(estimator, pattern, seed=0):
    """TDC gets a target set built from the noiseless pattern; other estimators are returned as is.

    The independence pattern has no dependence to target, so TDC then looks for
    perfect dependence and perfect anti-dependence.
    """
    if estimator.name != 'tdc' or estimator.targets is not None:
        return estimator
    if pattern == 'independence':
        return estimator.with_targets(TargetSet.comonotone_countermonotone(2, estimator.resolution))
    return estimator.with_targets(TargetSet.for_pattern(pattern, estimator.resolution, seed=seed))


def null_threshold(estimator, pattern, noise_level, trials=DEFAULT_TRIALS, alpha=DEFAULT_ALPHA, seed=0,
                   sample_size=DEFAULT_SAMPLE_SIZE, null_mode='independent', jobs=1, quiet=True):
    """(1 - alpha) empirical quantile of the estimator over `trials` null samples."""
    _check_protocol(trials, alpha)
    estimator = prepare_estimator(estimator, pattern, seed)
    statistics = _collect(estimator, pattern, noise_level, trials, seed, sample_size, null_mode, False, jobs, quiet)
    return float(np.quantile(statistics, 1 - alpha))


def power_curve(estimator, patterns=PATTERNS, noise_levels=NOISE_LEVELS, trials=DEFAULT_TRIALS, alpha=DEFAULT_ALPHA,
                seed=0, sample_size=DEFAULT_SAMPLE_SIZE, null_mode='independent', jobs=1, quiet=True):
    """Power of `estimator` for every (pattern, noise level)."""
    _check_protocol(trials, alpha)
    if not isinstance(estimator, Estimator):
        estimator = make_estimator(estimator)
    if null_mode not in NULL_MODES:
        raise DataError(f'unknown null mode "{null_mode}", expected one of {", ".join(NULL_MODES)}')
    rows = []
    for pattern in patterns:
        if pattern not in KINDS:
            raise DataError(f'unknown pattern "{pattern}", expected one of {", ".join(KINDS)}')
        prepared = prepare_estimator(estimator, pattern, seed)
        for noise_level in noise_levels:
            threshold = null_threshold(prepared, pattern, noise_level, trials, alpha, seed, sample_size, null_mode,
                                       jobs, quiet)
            statistics = _collect(prepared, pattern, noise_level, trials, seed, sample_size, null_mode, True, jobs, quiet)
            exceedances = int(np.count_nonzero(statistics > threshold))
            rows.append(PowerRow(pattern, float(noise_level), exceedances / len(statistics), len(statistics), threshold))
            logger.info(f'{estimator.label()} {pattern} noise {noise_level:.3g}: power {rows[-1].power:.3f} '
                        f'(threshold {threshold:.4g})')
    return PowerCurve(estimator.label(), tuple(rows))


def benchmark(estimators, patterns=PATTERNS, noise_levels=NOISE_LEVELS, **options):
    """Long-format table of the power curves of several estimators."""
    frames = [power_curve(estimator, patterns, noise_levels, **options).to_frame() for estimator in estimators]
    return pandas.concat(frames, ignore_index=True)
