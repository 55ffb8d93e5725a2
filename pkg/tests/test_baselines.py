import numpy as np
import pytest

from baselines import Estimator, dcor, pearson, rdc, spearman
from copula_util import DataError
from dependence import TargetSet


def double_centering_dcor(x, y):
    a = np.abs(x[:, None] - x[None, :])
    b = np.abs(y[:, None] - y[None, :])
    A = a - a.mean(axis=0) - a.mean(axis=1)[:, None] + a.mean()
    B = b - b.mean(axis=0) - b.mean(axis=1)[:, None] + b.mean()
    dcov2, dvar2_x, dvar2_y = (A * B).mean(), (A * A).mean(), (B * B).mean()
    return np.sqrt(dcov2 / np.sqrt(dvar2_x * dvar2_y))


class TestPearson:

    def test_affine(self):
        x = np.linspace(0, 1, 20)
        assert pearson(x, 2 * x + 1) == pytest.approx(1.0)
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_hand_instance(self):
        assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_rejects_zero_variance(self):
        with pytest.raises(DataError, match='zero variance'):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_not_invariant_to_increasing_transforms(self, rng):
        x, y = rng.standard_normal(100), rng.standard_normal(100)
        y = x + y
        assert pearson(np.exp(3 * x), y) != pytest.approx(pearson(x, y), abs=1e-3)


class TestSpearman:

    def test_monotone(self, rng):
        x = rng.standard_normal(50)
        assert spearman(x, np.exp(x)) == pytest.approx(1.0)
        assert spearman(x, -x ** 3) == pytest.approx(-1.0)

    def test_hand_instance(self):
        assert spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_invariant_to_increasing_transforms(self, rng):
        x, y = rng.standard_normal(100), rng.standard_normal(100)
        assert spearman(np.exp(x), y) == pytest.approx(spearman(x, y), abs=1e-12)

    def test_rejects_zero_variance(self):
        with pytest.raises(DataError):
            spearman([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


class TestDcor:

    def test_identical_samples(self, rng):
        x = rng.standard_normal(100)
        assert dcor(x, x) == pytest.approx(1.0)

    def test_hand_instance(self):
        x = np.array([1.0, 2.0, 4.0, 7.0])
        y = np.array([2.0, 1.0, 5.0, 3.0])
        assert dcor(x, y) == pytest.approx(double_centering_dcor(x, y), abs=1e-12)

    def test_independent_samples_are_weakly_dependent(self):
        small = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            small += dcor(rng.standard_normal(500), rng.standard_normal(500)) < 0.15
        assert small >= 95

    def test_multivariate(self, rng):
        x = rng.standard_normal((80, 2))
        assert 0.0 <= dcor(x, x[:, :1] + rng.standard_normal((80, 1))) <= 1.0

    def test_rejects_constant_input(self):
        with pytest.raises(DataError, match='constant'):
            dcor(np.ones(10), np.arange(10.0))


class TestRdc:

    def test_identical_samples(self, rng):
        x = rng.standard_normal(300)
        assert rdc(x, x, k=5, s=1 / 6) > 0.99

    def test_seeded(self, rng):
        x, y = rng.standard_normal(200), rng.standard_normal(200)
        assert rdc(x, y, seed=3) == rdc(x, y, seed=3)

    def test_invariant_to_increasing_transforms(self, rng):
        x, y = rng.standard_normal(200), rng.standard_normal(200)
        assert rdc(np.exp(x), y ** 3, seed=1) == rdc(x, y, seed=1)

    def test_in_unit_interval(self, rng):
        for seed in range(10):
            assert 0.0 <= rdc(rng.standard_normal(100), rng.standard_normal(100), seed=seed) <= 1.0

    def test_rejects_short_samples(self):
        with pytest.raises(DataError):
            rdc(np.arange(20.0), np.arange(20.0), k=20)


class TestEstimator:

    def test_absolute_correlations(self):
        x = np.linspace(0, 1, 30)
        assert Estimator('pearson').statistic(x, -x) == pytest.approx(1.0)
        assert Estimator('spearman').statistic(x, -x) == pytest.approx(1.0)

    def test_tdc_needs_targets(self):
        x = np.linspace(0, 1, 30)
        with pytest.raises(DataError, match='target set'):
            Estimator('tdc').statistic(x, x)
        targets = TargetSet.comonotone_countermonotone(2, 4)
        assert Estimator('tdc', resolution=4).with_targets(targets).statistic(x, x) > 0.9

    def test_labels(self):
        assert Estimator('dcor').label() == 'dcor'
        assert Estimator('tdc', resolution=8).label() == 'tdc(m=8)'
        assert Estimator('rdc', projections=10, scale=0.25).label() == 'rdc(k=10,s=0.25)'

    def test_rejects_unknown_estimators(self):
        with pytest.raises(DataError, match='unknown estimator'):
            Estimator('mic')
