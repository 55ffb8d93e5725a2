import numpy as np
import pytest
from scipy.optimize import linprog

from copula import Signature, independence_signature, monotone_signature
from copula_util import DataError, NumericalError
from transport import CONVERGED, ITERATION_LIMIT, emd, emd_exact, emd_sinkhorn, ground_cost


def linear_program_emd(s1, s2):
    """Dense LP over all n*k flows, solved by HiGHS dual simplex."""
    costs = ground_cost(s1, s2)
    n, k = costs.shape
    rows = np.kron(np.eye(n), np.ones(k))
    columns = np.kron(np.ones(n), np.eye(k))
    result = linprog(costs.ravel(), A_eq=np.vstack([rows, columns]), b_eq=np.concatenate([s1.weights, s2.weights]),
                     bounds=(0, None), method='highs-ds')
    assert result.status == 0
    return result.fun


class TestGroundCost:

    def test_identical_atoms_have_zero_diagonal(self):
        signature = independence_signature(2, 4)
        assert np.all(np.diag(ground_cost(signature, signature)) == 0)

    def test_segment(self):
        costs = ground_cost(Signature([[0]], [1.0], 2), Signature([[1]], [1.0], 2))
        assert costs[0, 0] == pytest.approx(0.5)

    def test_euclidean(self):
        costs = ground_cost(Signature([[0, 0]], [1.0], 2), Signature([[1, 1]], [1.0], 2))
        assert costs[0, 0] == pytest.approx(np.sqrt(0.5))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(DataError):
            ground_cost(independence_signature(2, 2), independence_signature(3, 2))


class TestEmdExact:

    def test_identical_signatures(self):
        signature = independence_signature(2, 4)
        plan = emd_exact(signature, signature)
        assert plan.total_cost == 0.0
        assert np.array_equal(plan.flows, np.diag(signature.weights))

    def test_single_atoms(self):
        plan = emd_exact(Signature([[0, 0]], [1.0], 4), Signature([[3, 3]], [1.0], 4))
        assert plan.total_cost == pytest.approx(0.75 * np.sqrt(2))

    def test_comonotone_to_countermonotone(self):
        cost = emd_exact(monotone_signature(2, 2, [1, 1]), monotone_signature(2, 2, [1, -1])).total_cost
        assert cost == pytest.approx(0.5)

    def test_plan_is_feasible(self, rng, random_signature):
        s1, s2 = random_signature(rng, 5), random_signature(rng, 6)
        plan = emd_exact(s1, s2)
        assert np.all(plan.flows >= 0)
        assert plan.flows.sum(axis=1) == pytest.approx(s1.weights, abs=1e-9)
        assert plan.flows.sum(axis=0) == pytest.approx(s2.weights, abs=1e-9)
        assert plan.flows.sum() == pytest.approx(1.0, abs=1e-9)
        assert plan.total_cost == pytest.approx(np.sum(plan.flows * ground_cost(s1, s2)), abs=1e-9)

    def test_matches_a_linear_program(self, rng, random_signature):
        for _ in range(200):
            s1 = random_signature(rng, rng.integers(1, 7))
            s2 = random_signature(rng, rng.integers(1, 7))
            assert emd_exact(s1, s2).total_cost == pytest.approx(linear_program_emd(s1, s2), abs=1e-9)

    def test_metric_axioms(self, rng, random_signature):
        for _ in range(100):
            s1, s2, s3 = (random_signature(rng, rng.integers(1, 12)) for _ in range(3))
            d12, d21 = emd(s1, s2), emd(s2, s1)
            assert emd(s1, s1) == 0.0
            assert d12 == pytest.approx(d21, abs=1e-12)
            assert emd(s1, s3) <= d12 + emd(s2, s3) + 1e-9

    def test_rejects_unnormalized_signatures(self):
        with pytest.raises(DataError, match='normalized'):
            emd_exact(Signature([[0, 0]], [0.5], 2), Signature([[1, 1]], [0.5], 2))


class TestEmdSinkhorn:

    def test_identical_signatures_cost_vanishes(self):
        signature = monotone_signature(2, 8, [1, 1])
        result = emd_sinkhorn(signature, signature, epsilon=0.001)
        assert result.cost == pytest.approx(0.0, abs=1e-6)

    def test_gap_to_exact_shrinks_with_epsilon(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            signatures = []
            for size in rng.integers(3, 7, size=2):
                flat = rng.choice(64, size=size, replace=False)
                weights = rng.random(size) + 0.05
                signatures.append(Signature(np.stack(np.unravel_index(flat, (8, 8)), axis=1), weights / weights.sum(), 8))
            exact = emd_exact(*signatures).total_cost
            gaps = [abs(emd_sinkhorn(*signatures, epsilon=epsilon).cost - exact) for epsilon in (0.1, 0.01, 0.001)]
            assert gaps[1] <= gaps[0] + 1e-8
            assert gaps[2] <= gaps[1] + 1e-8
            assert gaps[2] < 1e-2

    def test_never_below_exact_beyond_marginal_violation(self, rng, random_signature):
        for _ in range(10):
            s1, s2 = random_signature(rng, 6), random_signature(rng, 6)
            result = emd_sinkhorn(s1, s2, epsilon=0.01)
            # a plan whose rows miss the source weights by delta (L1) cannot undercut the optimum by more than diameter * delta
            assert result.cost >= emd_exact(s1, s2).total_cost - np.sqrt(2) * result.marginal_violation - 1e-12

    def test_converges(self):
        result = emd_sinkhorn(monotone_signature(2, 4, [1, 1]), independence_signature(2, 4), epsilon=0.05)
        assert result.status == CONVERGED
        assert result.converged
        assert result.marginal_violation < 1e-9

    def test_iteration_limit(self):
        result = emd_sinkhorn(monotone_signature(2, 8, [1, 1]), independence_signature(2, 8), max_iter=1)
        assert result.status == ITERATION_LIMIT
        assert result.iterations == 1
        assert np.isfinite(result.cost)

    @pytest.mark.parametrize('epsilon', [1e-20, 1e-100, 1e-300])
    def test_rejects_epsilon_below_the_precision_floor(self, epsilon):
        s1, s2 = monotone_signature(2, 8, [1, 1]), independence_signature(2, 8)
        with pytest.raises(NumericalError, match='increase epsilon'):
            emd_sinkhorn(s1, s2, epsilon=epsilon)

    def test_reported_cost_never_exceeds_the_largest_ground_cost(self, rng, random_signature):
        for epsilon in (0.5, 0.01, 1e-4):
            s1, s2 = random_signature(rng, 5), random_signature(rng, 7)
            result = emd_sinkhorn(s1, s2, epsilon=epsilon)
            assert result.plan.sum() == pytest.approx(1.0, abs=1e-6)
            assert result.cost <= ground_cost(s1, s2).max() + 1e-6

    @pytest.mark.parametrize('options', [{'epsilon': 0.0}, {'epsilon': -1.0}, {'tol': 0.0}, {'max_iter': 0}])
    def test_rejects_invalid_options(self, options):
        signature = independence_signature(2, 2)
        with pytest.raises(DataError):
            emd_sinkhorn(signature, signature, **options)


def test_unknown_solver():
    signature = independence_signature(2, 2)
    with pytest.raises(DataError, match='unknown solver'):
        emd(signature, signature, solver='simplex')
