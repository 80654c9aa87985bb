"""Patch partition of a budget arrangement and polytope queries on patches."""

import itertools
import logging
import time
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from rumbounds.errors import InputError, NotOnAnyBudget
from rumbounds.models.results import ExtremizationResult
from rumbounds.models.system import (
    BudgetSystem,
    Patch,
    PlaneConstraint,
    Relation,
    Sign,
    SignVector,
    plane_constraints,
)
from rumbounds.services.lp import (
    Direction,
    EqualityConstraint,
    InequalityConstraint,
    LinearProgram,
    LpSolver,
    Sense,
    SolverConfig,
)

logger = logging.getLogger(__name__)

_DIRECTIONS = {Relation.LE: Direction.LE, Relation.GE: Direction.GE}


class ClassifiedPoint(BaseModel):
    """Sign vector of a bundle plus the budgets it lies on."""

    model_config = ConfigDict(frozen=True)

    sign: SignVector
    homes: tuple[int, ...]


def _equalities(constraints: Sequence[PlaneConstraint]) -> list[EqualityConstraint]:
    return [
        EqualityConstraint(coefficients=c.coefficients, rhs=c.rhs) for c in constraints if c.relation is Relation.EQ
    ]


def _inequalities(constraints: Sequence[PlaneConstraint], strict_only: bool = False) -> list[InequalityConstraint]:
    return [
        InequalityConstraint(coefficients=c.coefficients, rhs=c.rhs, direction=_DIRECTIONS[c.relation])
        for c in constraints
        if c.relation is not Relation.EQ and (c.strict or not strict_only)
    ]


class PatchGeometry:
    """Builds patches of a budget arrangement and answers LP queries on them."""

    def __init__(self, solver: LpSolver | None = None, config: SolverConfig | None = None):
        self.solver = solver or LpSolver(config)

    def enumerate_patches(self, system: BudgetSystem) -> list[Patch]:
        """Enumerate every patch of every budget in canonical order.

        For each home budget, sign patterns over the other budgets are
        searched depth first in plane order; a prefix whose region is empty
        prunes all its extensions. Lower-dimensional patches are kept only
        when ``system.keep_null_patches`` is set.

        Args:
            system: The budget system (augmented or not).

        Returns:
            Patches grouped by home budget, each group in canonical sign order.
        """
        start = time.time()
        planes = system.planes
        prices = system.price_matrix()
        n = len(planes)
        logger.info(f"📐 Enumerating patches: {n} budgets, K={system.dimension}")

        patches: list[Patch] = []
        for home in range(n):
            others = [k for k in range(n) if k != home]
            found: list[Patch] = []

            def extend(signs: dict[int, Sign], depth: int) -> None:
                if depth == len(others):
                    sign = SignVector(signs=tuple(signs[k] for k in range(n)))
                    found.append(self._make_patch(system, home, sign, prices))
                    return
                k = others[depth]
                for s in (Sign.BELOW, Sign.ON, Sign.ABOVE):
                    candidate = {**signs, k: s}
                    if s is Sign.ON and not system.keep_null_patches:
                        if self._rank(prices, candidate, system.tolerance) > 1:
                            continue
                    if self._region_has_interior(system, candidate):
                        extend(candidate, depth + 1)

            extend({home: Sign.ON}, 0)
            found.sort(key=lambda patch: patch.sign.key)
            logger.debug(f"   {planes[home].id}: {len(found)} patches {[p.label for p in found]}")
            patches.extend(found)

        logger.info(f"✅ {len(patches)} patches enumerated in {time.time() - start:.3f}s")
        return patches

    def _region_has_interior(self, system: BudgetSystem, signs: dict[int, Sign]) -> bool:
        eqs, strict = [], []
        for k, s in sorted(signs.items()):
            p = system.planes[k].p
            if s is Sign.ON:
                eqs.append(EqualityConstraint(coefficients=p, rhs=1.0))
            else:
                direction = Direction.LE if s is Sign.BELOW else Direction.GE
                strict.append(InequalityConstraint(coefficients=p, rhs=1.0, direction=direction))
        return self.solver.max_slack_feasible(eqs=eqs, strict_ineqs=strict).feasible_with_interior

    @staticmethod
    def _rank(prices: np.ndarray, signs: dict[int, Sign], tolerance: float) -> int:
        on = [k for k, s in signs.items() if s is Sign.ON]
        return int(np.linalg.matrix_rank(prices[on], tol=tolerance))

    def _make_patch(self, system: BudgetSystem, home: int, sign: SignVector, prices: np.ndarray) -> Patch:
        closure = plane_constraints(system, sign)
        dimension = system.dimension - self._rank(prices, dict(enumerate(sign.signs)), system.tolerance)
        witness = self.solver.max_slack_feasible(
            eqs=_equalities(closure),
            strict_ineqs=_inequalities(closure, strict_only=True),
        ).witness
        return Patch(home_budget=home, sign=sign, dimension=dimension, closure=closure, interior_point=witness)

    @staticmethod
    def classify_point(y: Sequence[float], system: BudgetSystem) -> ClassifiedPoint:
        """Classify a bundle against every budget plane at tolerance τ.

        Raises:
            InputError: If ``y`` has the wrong length or a negative entry.
            NotOnAnyBudget: If ``y`` lies on no budget plane.
        """
        point = np.asarray(y, dtype=float)
        if point.shape != (system.dimension,):
            raise InputError(f"bundle has {point.size} goods, system has {system.dimension}")
        if np.any(point < 0):
            raise InputError(f"bundle {tuple(point)} has a negative quantity")
        gaps = system.price_matrix() @ point - 1.0
        signs = tuple(
            Sign.ON if abs(g) <= system.tolerance else (Sign.BELOW if g < 0 else Sign.ABOVE) for g in gaps
        )
        homes = tuple(k for k, s in enumerate(signs) if s is Sign.ON)
        if not homes:
            raise NotOnAnyBudget(f"bundle {tuple(point)} lies on none of the budget planes")
        return ClassifiedPoint(sign=SignVector(signs=signs), homes=homes)

    def extremize_linear(self, z: Sequence[float], patch: Patch) -> ExtremizationResult:
        """Infimum and supremum of z·y over the patch closure, with attainment flags.

        An extremum counts as attained when some point of the optimal face
        z·y = value satisfies the patch's strict sign constraints strictly.
        """
        z = tuple(float(v) for v in z)
        if len(z) != patch.n_goods:
            raise InputError(f"functional has {len(z)} coefficients, patch lives in {patch.n_goods} goods")
        eqs = _equalities(patch.closure)
        ineqs = _inequalities(patch.closure)
        strict = _inequalities(patch.closure, strict_only=True)

        values, witnesses, attained = {}, {}, {}
        for sense in (Sense.MIN, Sense.MAX):
            outcome = self.solver.solve(
                LinearProgram(objective=z, sense=sense, eq_constraints=tuple(eqs), ineq_constraints=tuple(ineqs))
            )
            if not outcome.optimal:
                raise InputError(f"patch {patch.label} closure is empty or unbounded ({outcome.status})")
            face = EqualityConstraint(coefficients=z, rhs=outcome.value)
            check = self.solver.max_slack_feasible(eqs=[*eqs, face], strict_ineqs=strict, n_variables=len(z))
            values[sense] = outcome.value
            attained[sense] = check.feasible_with_interior
            witnesses[sense] = check.witness if check.feasible_with_interior else outcome.solution

        return ExtremizationResult(
            inf_value=values[Sense.MIN],
            sup_value=values[Sense.MAX],
            inf_attained=attained[Sense.MIN],
            sup_attained=attained[Sense.MAX],
            inf_witness=witnesses[Sense.MIN],
            sup_witness=witnesses[Sense.MAX],
        )

    def hyperplane_meets_patch(self, patch: Patch, z: Sequence[float], t: float) -> bool:
        """Whether the patch itself, not just its closure, meets {z·y = t}."""
        z = tuple(float(v) for v in z)
        eqs = [*_equalities(patch.closure), EqualityConstraint(coefficients=z, rhs=float(t))]
        strict = _inequalities(patch.closure, strict_only=True)
        return self.solver.max_slack_feasible(eqs=eqs, strict_ineqs=strict, n_variables=len(z)).feasible_with_interior

    @staticmethod
    def closure_vertices(patch: Patch, tolerance: float = 1e-9) -> list[tuple[float, ...]]:
        """Vertices of the patch closure by active-set enumeration (K ≤ 3 only).

        Every choice of K linearly independent constraints among the plane
        rows and the coordinate facets y_k = 0 is solved; solutions that satisfy
        the whole closure are kept, deduplicated and sorted.
        """
        k = patch.n_goods
        if k > 3:
            raise InputError("closure vertices are only listed for K ≤ 3")
        rows = [(np.asarray(c.coefficients, dtype=float), c.rhs) for c in patch.closure]
        rows += [(np.eye(k)[i], 0.0) for i in range(k)]

        def inside(y: np.ndarray) -> bool:
            if np.any(y < -tolerance):
                return False
            for c in patch.closure:
                gap = float(np.dot(c.coefficients, y)) - c.rhs
                if c.relation is Relation.EQ and abs(gap) > tolerance:
                    return False
                if c.relation is Relation.LE and gap > tolerance:
                    return False
                if c.relation is Relation.GE and gap < -tolerance:
                    return False
            return True

        vertices: list[tuple[float, ...]] = []
        for active in itertools.combinations(range(len(rows)), k):
            a = np.array([rows[i][0] for i in active])
            if np.linalg.matrix_rank(a, tol=tolerance) < k:
                continue
            y = np.linalg.solve(a, np.array([rows[i][1] for i in active]))
            if inside(y):
                vertex = tuple(round(float(v), 12) + 0.0 for v in y)
                if vertex not in vertices:
                    vertices.append(vertex)
        return sorted(vertices)

