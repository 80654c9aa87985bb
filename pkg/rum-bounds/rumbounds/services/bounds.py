"""Rationalizability test, counterfactual consistency and sharp counterfactual bounds."""

import logging
import math
import time
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from rumbounds.errors import InfeasibleObservables, InputError, ProbabilityError
from rumbounds.models.representation import (
    AugmentedSystem,
    DemandProbabilities,
    RationalMatrix,
    validate_probabilities,
)
from rumbounds.models.results import (
    Attainability,
    BoundResult,
    BoundStatus,
    CdfEnvelope,
    ExtremizationResult,
    RationalizabilityResult,
)
from rumbounds.services.geometry import PatchGeometry
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

# Grid points this close to a patch infimum are reported as near ties.
NEAR_TIE_FACTOR = 10.0


class EventSpec(BaseModel):
    """A counterfactual event resolved to block-0 patch indices.

    ``inner`` lists patches contained in the event, ``outer`` those meeting it.
    For a union of patches the two coincide.
    """

    model_config = ConfigDict(frozen=True)

    inner: tuple[int, ...]
    outer: tuple[int, ...]

    @model_validator(mode="after")
    def _inner_within_outer(self) -> "EventSpec":
        if not set(self.inner) <= set(self.outer):
            raise ValueError("every patch contained in the event also meets it")
        return self

    @classmethod
    def union(cls, patches: Sequence[int]) -> "EventSpec":
        chosen = tuple(sorted(set(patches)))
        return cls(inner=chosen, outer=chosen)

    @property
    def is_union(self) -> bool:
        return self.inner == self.outer


class CounterfactualBounds:
    """Linear programs over mixtures of rational types.

    Every bound is an LP over ν ≥ 0 with Σν = 1 and A*_1ν = π*_1, the
    observed rows of the augmented matrix matched to the observed demand.
    """

    def __init__(
        self,
        solver: LpSolver | None = None,
        geometry: PatchGeometry | None = None,
        config: SolverConfig | None = None,
    ):
        self.solver = solver or LpSolver(config)
        self.geometry = geometry or PatchGeometry(self.solver)
        self.tolerance = self.solver.config.tolerance

    # ------------------------------------------------------------------
    # Rationalizability
    # ------------------------------------------------------------------

    def test_rationalizable(self, matrix: RationalMatrix, pi: DemandProbabilities) -> RationalizabilityResult:
        """Decide whether π = Aν for some ν ≥ 0.

        When it is not, the minimal l1 distance between π and the mixtures Aν
        (ν in the simplex) is reported as a diagnostic.

        Raises:
            ProbabilityError: If π does not align with the matrix rows.
        """
        pi = validate_probabilities(pi, matrix.rows, self.tolerance)
        a = matrix.array.astype(float)
        h = matrix.n_columns
        logger.info(f"🧮 Testing rationalizability: {a.shape[0]} patches, H={h}")

        lp = LinearProgram(
            objective=(0.0,) * h,
            eq_constraints=tuple(
                EqualityConstraint(coefficients=tuple(row), rhs=value)
                for row, value in zip(a.tolist(), pi.values, strict=True)
            ),
        )
        outcome = self.solver.solve(lp)
        if outcome.optimal:
            logger.info("✅ Demand is rationalizable")
            return RationalizabilityResult(rationalizable=True, witness=outcome.solution, n_columns=h)

        residual = self.l1_residual(matrix, pi)
        logger.info(f"❌ Demand is not rationalizable (l1 residual {residual:.3e})")
        return RationalizabilityResult(rationalizable=False, l1_residual=residual, n_columns=h)

    def l1_residual(self, matrix: RationalMatrix, pi: DemandProbabilities) -> float:
        """min ‖Aν − π‖₁ over the simplex, via split slack variables."""
        a = matrix.array.astype(float)
        rows, h = a.shape
        width = h + 2 * rows
        eqs = []
        for r in range(rows):
            coefficients = [0.0] * width
            coefficients[:h] = a[r].tolist()
            coefficients[h + r] = 1.0
            coefficients[h + rows + r] = -1.0
            eqs.append(EqualityConstraint(coefficients=tuple(coefficients), rhs=pi.values[r]))
        eqs.append(EqualityConstraint(coefficients=(1.0,) * h + (0.0,) * (2 * rows), rhs=1.0))
        outcome = self.solver.solve(
            LinearProgram(objective=(0.0,) * h + (1.0,) * (2 * rows), eq_constraints=tuple(eqs))
        )
        return max(outcome.value, 0.0)

    def observed_matrix(self, aug: AugmentedSystem) -> RationalMatrix:
        """Columns of A* restricted to the observed blocks, deduplicated."""
        selections = sorted({chosen[1:] for chosen in aug.matrix.selections})
        return RationalMatrix(rows=aug.observed_representation, selections=tuple(selections))

    # ------------------------------------------------------------------
    # Consistency of a counterfactual distribution
    # ------------------------------------------------------------------

    def feasible_pi0(self, aug: AugmentedSystem, pi1: DemandProbabilities, pi0: Sequence[float]) -> bool:
        """Whether π*_0 is consistent with the observed demand π*_1.

        Raises:
            ProbabilityError: If π*_0 is misaligned or not a distribution.
            InfeasibleObservables: If π*_1 alone admits no mixture of types.
        """
        pi1 = self._observed(aug, pi1)
        pi0 = tuple(float(v) for v in pi0)
        if len(pi0) != aug.n_counterfactual:
            raise ProbabilityError(f"π0 has {len(pi0)} entries, the counterfactual has {aug.n_counterfactual} patches")
        if any(not math.isfinite(v) or v < -self.tolerance or v > 1 + self.tolerance for v in pi0):
            raise ProbabilityError("π0 entries must lie in [0, 1]", block=0, budget_id=aug.system.counterfactual.id)
        if abs(math.fsum(pi0) - 1.0) > self.tolerance:
            raise ProbabilityError(
                f"π0 sums to {math.fsum(pi0):.12g}, not 1", block=0, budget_id=aug.system.counterfactual.id
            )

        a0 = aug.counterfactual_block.astype(float)
        target = [
            EqualityConstraint(coefficients=tuple(row), rhs=value) for row, value in zip(a0.tolist(), pi0, strict=True)
        ]
        lp = self._region_lp(aug, pi1, np.zeros(aug.matrix.n_columns), Sense.MIN, extra_eqs=target)
        if self.solver.solve(lp).optimal:
            return True
        if not self.solver.solve(self._region_lp(aug, pi1, np.zeros(aug.matrix.n_columns), Sense.MIN)).optimal:
            raise InfeasibleObservables(self._residual(aug, pi1))
        return False

    # ------------------------------------------------------------------
    # Sharp bounds
    # ------------------------------------------------------------------

    def counterfactual_event_bounds(
        self, aug: AugmentedSystem, pi1: DemandProbabilities, event: EventSpec
    ) -> BoundResult:
        """Sharp bounds on the probability of a counterfactual event."""
        n0 = aug.n_counterfactual
        for i in event.outer:
            if not 0 <= i < n0:
                raise InputError(f"event patch index {i} outside the {n0} counterfactual patches")
        g_lo = np.zeros(n0)
        g_lo[list(event.inner)] = 1.0
        g_hi = np.zeros(n0)
        g_hi[list(event.outer)] = 1.0
        logger.info(f"📊 Event bounds: inner={list(event.inner)} outer={list(event.outer)}")

        result = self._bound_pair(aug, pi1, g_lo, g_hi)
        if result.ok and event.is_union:
            # a union of patches is attained exactly by the optimal mixtures
            result = result.model_copy(
                update={"lower_attainable": Attainability.ATTAINED, "upper_attainable": Attainability.ATTAINED}
            )
        return result

    def counterfactual_functional_bounds(
        self,
        aug: AugmentedSystem,
        pi1: DemandProbabilities,
        g_lo: Sequence[float],
        g_hi: Sequence[float],
        lo_attained: Sequence[bool] | None = None,
        hi_attained: Sequence[bool] | None = None,
    ) -> BoundResult:
        """Sharp bounds on E g(y(p_0)) from per-patch infima and suprema of g.

        Args:
            aug: The augmented system.
            pi1: Observed demand over the refined observed patches.
            g_lo: inf of g over each counterfactual patch.
            g_hi: sup of g over each counterfactual patch.
            lo_attained: Whether each infimum is attained on its patch.
            hi_attained: Whether each supremum is attained on its patch.

        Raises:
            InputError: If the vectors are misaligned or g_lo > g_hi somewhere.
        """
        g_lo = np.asarray(g_lo, dtype=float)
        g_hi = np.asarray(g_hi, dtype=float)
        n0 = aug.n_counterfactual
        if g_lo.shape != (n0,) or g_hi.shape != (n0,):
            raise InputError(f"patch bounds need {n0} entries, got {g_lo.size} and {g_hi.size}")
        if not (np.all(np.isfinite(g_lo)) and np.all(np.isfinite(g_hi))):
            raise InputError("patch bounds must be finite")
        if np.any(g_lo > g_hi + self.tolerance):
            bad = [aug.counterfactual_patches[i].label for i in np.flatnonzero(g_lo > g_hi + self.tolerance)]
            raise InputError(f"lower patch bound exceeds upper bound on patches {bad}")

        result = self._bound_pair(aug, pi1, g_lo, g_hi)
        if not result.ok:
            return result
        return result.model_copy(
            update={
                "lower_attainable": self._attainability(aug, result.witness_lower, lo_attained),
                "upper_attainable": self._attainability(aug, result.witness_upper, hi_attained),
            }
        )

    def counterfactual_mean_bounds(
        self, aug: AugmentedSystem, pi1: DemandProbabilities, z: Sequence[float]
    ) -> BoundResult:
        """Sharp bounds on E[z·y(p_0)]."""
        extrema = self.patch_extrema(aug, z)
        logger.info(f"📊 Mean bounds for z={tuple(z)} over {len(extrema)} counterfactual patches")
        return self.counterfactual_functional_bounds(
            aug,
            pi1,
            [e.inf_value for e in extrema],
            [e.sup_value for e in extrema],
            lo_attained=[e.inf_attained for e in extrema],
            hi_attained=[e.sup_attained for e in extrema],
        )

    def counterfactual_cdf_bounds(
        self, aug: AugmentedSystem, pi1: DemandProbabilities, z: Sequence[float], grid: Sequence[float]
    ) -> CdfEnvelope:
        """Pointwise sharp bounds on Pr(z·y(p_0) ≤ t) along ``grid``.

        Raises:
            InputError: If the grid is empty or not strictly increasing.
        """
        grid = tuple(float(t) for t in grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InputError("the c.d.f. grid must be a nonempty strictly increasing list")

        logger.info("=" * 60)
        logger.info("🚀 C.D.F. BOUNDS")
        logger.info(f"   z: {tuple(z)}")
        logger.info(f"   Grid: {len(grid)} points in [{grid[0]:.6g}, {grid[-1]:.6g}]")
        logger.info("=" * 60)
        start = time.time()

        pi1 = self._observed(aug, pi1)
        if not self.solver.solve(self._region_lp(aug, pi1, np.zeros(aug.matrix.n_columns), Sense.MIN)).optimal:
            residual = self._residual(aug, pi1)
            logger.warning(f"⚠️  Observed demand is not rationalizable (l1 residual {residual:.3e})")
            return CdfEnvelope(status=BoundStatus.INFEASIBLE_OBSERVABLES, grid=grid, l1_residual=residual)

        extrema = self.patch_extrema(aug, z)
        cache: dict[tuple[tuple[float, ...], Sense], float] = {}
        lower, upper, ties = [], [], []
        floor_lo = np.zeros(aug.n_counterfactual)
        floor_hi = np.zeros(aug.n_counterfactual)
        for t in grid:
            g_lo, g_hi, near_tie = self._halfspace_coefficients(aug, extrema, z, t)
            # the sublevel event only grows with t
            floor_lo = np.maximum(floor_lo, g_lo)
            floor_hi = np.maximum(floor_hi, np.maximum(g_hi, floor_lo))
            lo = self._cached_extremum(aug, pi1, floor_lo, Sense.MIN, cache)
            hi = self._cached_extremum(aug, pi1, floor_hi, Sense.MAX, cache)
            lower.append(lo)
            upper.append(hi)
            if near_tie:
                ties.append(t)
            logger.debug(f"   t={t:.6g}: [{lo:.12g}, {hi:.12g}]")

        lower = np.maximum.accumulate(np.clip(lower, 0.0, 1.0))
        upper = np.maximum.accumulate(np.maximum(np.clip(upper, 0.0, 1.0), lower))
        if ties:
            logger.warning(f"⚠️  {len(ties)} grid points lie within {NEAR_TIE_FACTOR:g}τ of a patch infimum")
        logger.info(f"✅ C.d.f. bounds computed in {time.time() - start:.2f}s ({len(cache)} distinct LPs)")
        return CdfEnvelope(
            grid=grid,
            lower=tuple(float(v) for v in lower),
            upper=tuple(float(v) for v in upper),
            near_ties=tuple(ties),
        )

    # ------------------------------------------------------------------
    # Supplementary queries
    # ------------------------------------------------------------------

    def patch_extrema(self, aug: AugmentedSystem, z: Sequence[float]) -> list[ExtremizationResult]:
        """inf/sup of z·y over every counterfactual patch, in block order."""
        if len(z) != aug.system.dimension:
            raise InputError(f"z has {len(z)} entries, the system has {aug.system.dimension} goods")
        return [self.geometry.extremize_linear(z, patch) for patch in aug.counterfactual_patches]

    def halfspace_event(self, aug: AugmentedSystem, z: Sequence[float], t: float) -> EventSpec:
        """Resolve {y ∈ B_0 : z·y ≤ t} to the patches it contains and the patches it meets."""
        g_lo, g_hi, _ = self._halfspace_coefficients(aug, self.patch_extrema(aug, z), z, t)
        return EventSpec(inner=tuple(np.flatnonzero(g_lo).tolist()), outer=tuple(np.flatnonzero(g_hi).tolist()))

    def certify_value(
        self,
        aug: AugmentedSystem,
        pi1: DemandProbabilities,
        g_lo: Sequence[float],
        g_hi: Sequence[float],
        value: float,
    ) -> tuple[float, ...] | None:
        """A feasible ν under which E g(y(p_0)) can equal ``value``, or None.

        With g_lo = g_hi the target is the equality g·A*_0ν = value; otherwise
        ``value`` must lie between g_lo·A*_0ν and g_hi·A*_0ν.
        """
        pi1 = self._observed(aug, pi1)
        c_lo = aug.column_objective(g_lo)
        c_hi = aug.column_objective(g_hi)
        if np.allclose(c_lo, c_hi, rtol=0.0, atol=self.tolerance):
            lp = self._region_lp(
                aug,
                pi1,
                np.zeros(aug.matrix.n_columns),
                Sense.MIN,
                extra_eqs=[EqualityConstraint(coefficients=tuple(c_lo.tolist()), rhs=float(value))],
            )
        else:
            lp = self._region_lp(
                aug,
                pi1,
                np.zeros(aug.matrix.n_columns),
                Sense.MIN,
                extra_ineqs=[
                    InequalityConstraint(coefficients=tuple(c_lo.tolist()), rhs=float(value), direction=Direction.LE),
                    InequalityConstraint(coefficients=tuple(c_hi.tolist()), rhs=float(value), direction=Direction.GE),
                ],
            )
        outcome = self.solver.solve(lp)
        return outcome.solution if outcome.optimal else None

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _observed(self, aug: AugmentedSystem, pi1: DemandProbabilities) -> DemandProbabilities:
        if len(pi1.values) != len(aug.rows_1):
            raise ProbabilityError(
                f"observed demand has {len(pi1.values)} entries, the refined observed system has {len(aug.rows_1)}"
            )
        return validate_probabilities(pi1, aug.observed_representation, self.tolerance)

    def _residual(self, aug: AugmentedSystem, pi1: DemandProbabilities) -> float:
        return self.l1_residual(self.observed_matrix(aug), pi1)

    def _region_lp(
        self,
        aug: AugmentedSystem,
        pi1: DemandProbabilities,
        objective: np.ndarray,
        sense: Sense,
        extra_eqs: Sequence[EqualityConstraint] = (),
        extra_ineqs: Sequence[InequalityConstraint] = (),
    ) -> LinearProgram:
        """LP over {ν ≥ 0 : Σν = 1, A*_1ν = π*_1} plus optional extra rows."""
        h = aug.matrix.n_columns
        eqs = [
            EqualityConstraint(coefficients=tuple(row), rhs=value)
            for row, value in zip(aug.observed_block.astype(float).tolist(), pi1.values, strict=True)
        ]
        eqs.append(EqualityConstraint(coefficients=(1.0,) * h, rhs=1.0))
        return LinearProgram(
            objective=tuple(float(c) for c in objective),
            sense=sense,
            eq_constraints=(*eqs, *extra_eqs),
            ineq_constraints=tuple(extra_ineqs),
        )

    def _bound_pair(
        self, aug: AugmentedSystem, pi1: DemandProbabilities, g_lo: np.ndarray, g_hi: np.ndarray
    ) -> BoundResult:
        """min g_lo·A*_0ν and max g_hi·A*_0ν over the feasible mixtures."""
        pi1 = self._observed(aug, pi1)
        low = self.solver.solve(self._region_lp(aug, pi1, aug.column_objective(g_lo), Sense.MIN))
        if not low.optimal:
            residual = self._residual(aug, pi1)
            logger.warning(f"⚠️  Observed demand is not rationalizable (l1 residual {residual:.3e})")
            return BoundResult(status=BoundStatus.INFEASIBLE_OBSERVABLES, l1_residual=residual)
        high = self.solver.solve(self._region_lp(aug, pi1, aug.column_objective(g_hi), Sense.MAX))
        lower, upper = low.value, high.value
        if lower > upper:
            # only rounding can order them this way; g_lo ≤ g_hi
            lower = upper = (lower + upper) / 2
        logger.info(f"✅ Bounds: [{lower:.12g}, {upper:.12g}]")
        return BoundResult(
            lower=lower,
            upper=upper,
            witness_lower=low.solution,
            witness_upper=high.solution,
        )

    def _attainability(
        self, aug: AugmentedSystem, witness: Sequence[float], attained: Sequence[bool] | None
    ) -> Attainability:
        """Attained when every patch carrying mass under ``witness`` attains its extremum."""
        if attained is None:
            return Attainability.UNKNOWN
        mass = aug.counterfactual_block.astype(float) @ np.asarray(witness, dtype=float)
        carried = [i for i, m in enumerate(mass) if m > self.tolerance]
        return Attainability.ATTAINED if all(attained[i] for i in carried) else Attainability.UNKNOWN

    def _halfspace_coefficients(
        self, aug: AugmentedSystem, extrema: Sequence[ExtremizationResult], z: Sequence[float], t: float
    ) -> tuple[np.ndarray, np.ndarray, bool]:
        """Indicators of patches inside and meeting {z·y ≤ t}, plus a near-tie flag."""
        tau = self.tolerance
        inner = np.zeros(len(extrema))
        outer = np.zeros(len(extrema))
        near_tie = False
        for i, (patch, e) in enumerate(zip(aug.counterfactual_patches, extrema, strict=True)):
            if e.sup_value <= t + tau:
                inner[i] = 1.0
            if e.inf_value < t - tau:
                outer[i] = 1.0
            elif e.inf_value <= t + tau:
                outer[i] = 1.0 if self.geometry.hyperplane_meets_patch(patch, z, t) else 0.0
            if abs(e.inf_value - t) <= NEAR_TIE_FACTOR * tau:
                near_tie = True
        return inner, np.maximum(outer, inner), near_tie

    def _cached_extremum(
        self,
        aug: AugmentedSystem,
        pi1: DemandProbabilities,
        coefficients: np.ndarray,
        sense: Sense,
        cache: dict[tuple[tuple[float, ...], Sense], float],
    ) -> float:
        if not coefficients.any():
            return 0.0
        if coefficients.all():
            return 1.0
        key = (tuple(coefficients.tolist()), sense)
        if key not in cache:
            cache[key] = self.solver.solve(self._region_lp(aug, pi1, aug.column_objective(coefficients), sense)).value
        return cache[key]


def expenditure_share_vector(p0: Sequence[float], goods: Sequence[int]) -> tuple[float, ...]:
    """z with z_k = p0_k on the chosen goods and 0 elsewhere (joint expenditure on those goods)."""
    chosen = set(goods)
    if not chosen or any(not 0 <= k < len(p0) for k in chosen):
        raise InputError(f"goods {sorted(chosen)} must be nonempty indices into {len(p0)} prices")
    return tuple(float(p) if k in chosen else 0.0 for k, p in enumerate(p0))

