"""Earth Mover's Distance between two equal-mass signatures.

Both solvers work on the balanced problem: signatures carry mass 1, so every
unit of source mass is shipped and EMD is the discrete 1-Wasserstein distance
under the Euclidean ground metric.
"""
import logging
from dataclasses import dataclass

import numpy as np
import ot
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from copula_util import DataError, NumericalError

logger = logging.getLogger(__name__)

SOLVERS = ('exact', 'sinkhorn')
FEASIBILITY_TOLERANCE = 1e-9
# Pivot limit of the network simplex; the balanced problem always terminates well before
MAX_PIVOTS = 10_000_000

DEFAULT_EPSILON = 0.005
DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_ITER = 10000
# Each epsilon-scaling stage divides the regularization by this factor
SCALING_FACTOR = 2.0
# Marginal violation at which an intermediate (not final) stage hands over
STAGE_TOLERANCE = 1e-5
# Smallest epsilon, relative to the largest ground cost, at which the scaled kernel keeps its precision
MIN_RELATIVE_EPSILON = 1e-12
# Largest drift of the final plan mass away from 1
MASS_DRIFT = 1e-6

CONVERGED = 'converged'
ITERATION_LIMIT = 'iteration_limit'


@dataclass(frozen=True, eq=False)
class TransportPlan:
    flows: np.ndarray
    total_cost: float

    def check(self, source_weights, sink_weights, costs, tolerance=FEASIBILITY_TOLERANCE):
        """Raise NumericalError unless the plan is a feasible flow with the stated cost."""
        flows = self.flows
        if (flows < -tolerance).any():
            raise NumericalError('transport plan has negative flows')
        if np.abs(flows.sum(axis=1) - source_weights).max() > tolerance:
            raise NumericalError('transport plan rows do not match the source weights')
        if np.abs(flows.sum(axis=0) - sink_weights).max() > tolerance:
            raise NumericalError('transport plan columns do not match the sink weights')
        if abs(float(np.sum(flows * costs)) - self.total_cost) > tolerance:
            raise NumericalError('transport plan cost does not match its flows')


@dataclass(frozen=True, eq=False)
class SinkhornResult:
    cost: float
    status: str
    iterations: int
    epsilon: float
    marginal_violation: float
    plan: np.ndarray

    @property
    def converged(self):
        return self.status == CONVERGED


def ground_cost(s1, s2):
    """Euclidean distances between the atom positions of two signatures."""
    if s1.dimension != s2.dimension:
        raise DataError(f'signatures have different dimensions ({s1.dimension} and {s2.dimension})')
    return cdist(s1.positions, s2.positions, metric='euclidean')


def _check_balanced(s1, s2):
    for name, signature in (('first', s1), ('second', s2)):
        if not signature.is_normalized():
            raise DataError(f'the {name} signature has mass {signature.mass!r}; EMD needs signatures normalized to 1')


def emd_exact(s1, s2):
    """Optimal transport plan by the network simplex; `total_cost` is the EMD."""
    costs = ground_cost(s1, s2)
    _check_balanced(s1, s2)

    if s1 == s2:
        plan = TransportPlan(np.diag(s1.weights), 0.0)
        plan.check(s1.weights, s2.weights, costs)
        return plan

    a = np.ascontiguousarray(s1.weights, dtype=np.float64)
    b = np.ascontiguousarray(s2.weights, dtype=np.float64)
    flows, log = ot.emd(a, b, np.ascontiguousarray(costs), numItermax=MAX_PIVOTS, log=True)
    if log.get('warning') is not None:
        raise NumericalError(f'exact EMD solver failed: {log["warning"]}')

    flows = np.where(flows < 0, 0.0, flows)
    plan = TransportPlan(flows, float(np.sum(flows * costs)))
    plan.check(a, b, costs)
    return plan


def _epsilon_schedule(epsilon, costs):
    start = max(epsilon, float(costs.max()))
    schedule = []
    current = start
    while current > epsilon:
        schedule.append(current)
        current /= SCALING_FACTOR
    schedule.append(epsilon)
    return schedule


def emd_sinkhorn(s1, s2, epsilon=DEFAULT_EPSILON, tol=DEFAULT_TOLERANCE, max_iter=DEFAULT_MAX_ITER):
    """Entropic-regularized transport cost by log-domain Sinkhorn iterations with epsilon scaling.

    The reported cost is <C, P> for the final scaled plan P. Iterations stop when
    the row-marginal violation (L1) falls below `tol` at the target epsilon, or
    after `max_iter` iterations in total.
    """
    if not epsilon > 0:
        raise DataError(f'epsilon must be > 0, got {epsilon}')
    if not tol > 0:
        raise DataError(f'tol must be > 0, got {tol}')
    if max_iter < 1:
        raise DataError(f'max_iter must be >= 1, got {max_iter}')
    costs = ground_cost(s1, s2)
    _check_balanced(s1, s2)
    floor = MIN_RELATIVE_EPSILON * float(costs.max())
    if epsilon < floor:
        raise NumericalError(f'epsilon={epsilon:g} is below the precision floor {floor:g} of this problem; '
                             'increase epsilon or use the exact solver')

    a, b = s1.weights, s2.weights
    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))

    schedule = _epsilon_schedule(epsilon, costs)
    stage_budget = max(1, max_iter // (2 * len(schedule)))
    iterations = 0
    violation = np.inf
    plan = None

    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        stage_tol = tol if final else max(tol, STAGE_TOLERANCE)
        stage_iterations = 0
        while iterations < max_iter and (final or stage_iterations < stage_budget):
            f = eps * (log_a - logsumexp((g[None, :] - costs) / eps, axis=1))
            g = eps * (log_b - logsumexp((f[:, None] - costs) / eps, axis=0))
            iterations += 1
            stage_iterations += 1
            if not (np.isfinite(f).all() and np.isfinite(g).all()):
                raise NumericalError(f'Sinkhorn potentials underflowed at epsilon={eps:g}; '
                                     'increase epsilon or use the exact solver')
            plan = np.exp((f[:, None] + g[None, :] - costs) / eps)
            violation = float(np.abs(plan.sum(axis=1) - a).sum())
            if violation < stage_tol:
                break
        if iterations >= max_iter:
            break

    mass = float(plan.sum())
    cost = float(np.sum(plan * costs))
    if abs(mass - 1.0) > MASS_DRIFT or cost > float(costs.max()) + MASS_DRIFT:
        raise NumericalError(f'Sinkhorn lost precision at epsilon={eps:g} (plan mass {mass:.6g}, cost {cost:.6g}); '
                             'increase epsilon or use the exact solver')

    status = CONVERGED if (violation < tol and eps == epsilon) else ITERATION_LIMIT
    if status == ITERATION_LIMIT:
        logger.warning(f'Sinkhorn stopped at the iteration limit ({iterations} iterations, '
                       f'epsilon {eps:g}, marginal violation {violation:.3g})')
    return SinkhornResult(cost, status, iterations, eps, violation, plan)


def emd(s1, s2, solver='exact', epsilon=DEFAULT_EPSILON, tol=DEFAULT_TOLERANCE, max_iter=DEFAULT_MAX_ITER):
    """EMD value with the chosen solver."""
    if solver == 'exact':
        return emd_exact(s1, s2).total_cost
    if solver == 'sinkhorn':
        return emd_sinkhorn(s1, s2, epsilon=epsilon, tol=tol, max_iter=max_iter).cost
    raise DataError(f'unknown solver "{solver}", expected one of {", ".join(SOLVERS)}')
