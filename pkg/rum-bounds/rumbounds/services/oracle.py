"""Brute-force reference computations for certifying the main pipeline on small instances.

Nothing here calls the type enumerator or the bound LPs: columns come from
the full product of patch choices with a plain cycle search, bounds from
enumerating basic solutions, and coverage from sampling the planes.
"""

import itertools
import logging
import math
import time
from collections.abc import Sequence

import numpy as np

from rumbounds.config import get_settings
from rumbounds.errors import InfeasibleObservables, InputError, SizeCapExceeded
from rumbounds.models.representation import (
    AugmentedSystem,
    DemandProbabilities,
    RationalMatrix,
    VectorRepresentation,
    validate_probabilities,
)
from rumbounds.models.results import BudgetCover, CoverReport
from rumbounds.models.system import BudgetSystem, Patch, Sign, SignVector
from rumbounds.services.lp import Sense

logger = logging.getLogger(__name__)

TOL = 1e-9

WEAK, STRICT = 1, 2


class BruteForceOracle:
    """Exhaustive counterparts of type enumeration, bound LPs and patch enumeration."""

    def __init__(self, max_columns: int | None = None, max_combinations: int | None = None):
        settings = get_settings()
        self.max_columns = max_columns if max_columns is not None else settings.oracle_max_columns
        self.max_combinations = max_combinations if max_combinations is not None else settings.oracle_max_combinations

    def brute_force_types(self, rep: VectorRepresentation) -> RationalMatrix:
        """Every patch combination that admits no cycle through a strict relation.

        Raises:
            SizeCapExceeded: If the number of combinations is above the cap.
        """
        total = math.prod(rep.block_sizes)
        if total > self.max_combinations:
            raise SizeCapExceeded(
                f"{total} patch combinations exceed the oracle cap", detail=f"max_combinations={self.max_combinations}"
            )
        start = time.time()
        columns = [
            chosen
            for chosen in itertools.product(*(range(size) for size in rep.block_sizes))
            if not _has_strict_cycle(_relations(chosen, rep))
        ]
        logger.info(f"🔍 Oracle: {len(columns)} of {total} combinations rational ({time.time() - start:.3f}s)")
        return RationalMatrix(rows=rep, selections=tuple(columns))

    def vertex_enumerate_bounds(
        self,
        aug: AugmentedSystem,
        pi1: DemandProbabilities,
        objective: Sequence[float],
        sense: Sense,
    ) -> float:
        """Extremum of objective·A*_0ν over the basic solutions of the observed system.

        Args:
            aug: The augmented system; at most ``max_columns`` columns.
            pi1: Observed demand over the refined observed patches.
            objective: One coefficient per counterfactual patch.
            sense: Whether to minimize or maximize.

        Raises:
            SizeCapExceeded: If A* has more columns than the cap.
            InfeasibleObservables: If no basic solution is feasible.
        """
        h = aug.matrix.n_columns
        if h > self.max_columns:
            raise SizeCapExceeded(
                f"H*={h} exceeds the vertex enumeration cap", detail=f"max_columns={self.max_columns}"
            )
        objective = np.asarray(objective, dtype=float)
        if objective.shape != (aug.n_counterfactual,):
            raise InputError(f"objective needs {aug.n_counterfactual} coefficients, got {objective.size}")
        pi1 = validate_probabilities(pi1, aug.observed_representation)

        a = np.vstack([aug.observed_block.astype(float), np.ones((1, h))])
        b = np.append(np.asarray(pi1.values, dtype=float), 1.0)
        column_values = objective[aug.counterfactual_choice]
        rank = np.linalg.matrix_rank(a)

        values = []
        for size in range(1, rank + 1):
            for subset in itertools.combinations(range(h), size):
                columns = a[:, subset]
                if np.linalg.matrix_rank(columns) < size:
                    continue
                x, *_ = np.linalg.lstsq(columns, b, rcond=None)
                if np.max(np.abs(columns @ x - b)) > 1e-8 or np.min(x) < -TOL:
                    continue
                values.append(float(column_values[list(subset)] @ x))

        if not values:
            raise InfeasibleObservables()
        logger.debug(f"🔍 Oracle: {len(values)} feasible basic solutions")
        return min(values) if sense is Sense.MIN else max(values)

    def sample_patch_cover(
        self, system: BudgetSystem, patches: Sequence[Patch], n: int, seed: int = 0
    ) -> CoverReport:
        """Sample each budget plane uniformly and compare observed sign vectors with ``patches``.

        Points within 10τ of another plane are counted as near ties and skipped.
        """
        if n < 1:
            raise InputError("the sample size must be at least 1")
        rng = np.random.default_rng(seed)
        prices = system.price_matrix()
        full = system.dimension - 1
        skip = 10 * system.tolerance

        covers = []
        for home, budget in enumerate(system.planes):
            known = {patch.label: patch for patch in patches if patch.home_budget == home}
            weights = rng.exponential(size=(n, system.dimension))
            points = weights / weights.sum(axis=1, keepdims=True) / np.asarray(budget.p)
            gaps = points @ prices.T - 1.0
            gaps[:, home] = 0.0

            hits: dict[str, int] = {}
            near_ties = 0
            for row in gaps:
                others = np.delete(row, home)
                if others.size and np.min(np.abs(others)) <= skip:
                    near_ties += 1
                    continue
                label = str(SignVector(signs=tuple(Sign(int(np.sign(g))) for g in row)))
                hits[label] = hits.get(label, 0) + 1

            missing = tuple(label for label, patch in known.items() if patch.dimension == full and label not in hits)
            extraneous = tuple(sorted(label for label in hits if label not in known))
            covers.append(
                BudgetCover(
                    budget_id=budget.id,
                    samples=n,
                    near_ties=near_ties,
                    hits=dict(sorted(hits.items())),
                    missing=missing,
                    extraneous=extraneous,
                )
            )
            if missing or extraneous:
                logger.warning(f"⚠️  Budget {budget.id}: missing {list(missing)}, extraneous {list(extraneous)}")

        return CoverReport(seed=seed, budgets=tuple(covers))


def _relations(chosen: Sequence[int], rep: VectorRepresentation) -> np.ndarray:
    """relation[j, k]: WEAK or STRICT when the bundle chosen on k was affordable on j."""
    n = len(chosen)
    relation = np.zeros((n, n), dtype=int)
    for k in range(n):
        sign = rep.block(k)[chosen[k]].sign
        for j in range(n):
            if j != k:
                if sign[rep.homes[j]] is Sign.ON:
                    relation[j, k] = WEAK
                elif sign[rep.homes[j]] is Sign.BELOW:
                    relation[j, k] = STRICT
    return relation


def _has_strict_cycle(relation: np.ndarray) -> bool:
    """Search every simple cycle (smallest node first) for a strict relation."""
    n = relation.shape[0]

    def walk(start: int, node: int, visited: set[int], strict: bool) -> bool:
        for nxt in range(start, n):
            kind = relation[node, nxt]
            if not kind:
                continue
            through_strict = strict or kind == STRICT
            if nxt == start:
                if through_strict:
                    return True
            elif nxt not in visited and walk(start, nxt, visited | {nxt}, through_strict):
                return True
        return False

    return any(walk(start, start, {start}, False) for start in range(n))
