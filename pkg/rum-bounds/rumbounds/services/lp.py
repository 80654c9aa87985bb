"""Deterministic two-phase simplex solver used by every other service."""

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rumbounds.config import get_settings
from rumbounds.errors import SolverError
from rumbounds.models.results import SlackResult

logger = logging.getLogger(__name__)


class Sense(StrEnum):
    MIN = "min"
    MAX = "max"


class Direction(StrEnum):
    LE = "<="
    GE = ">="


class Arithmetic(StrEnum):
    FLOAT = "float"
    EXACT = "exact"


class LpStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class EqualityConstraint(BaseModel):
    """a·v = b"""

    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]
    rhs: float


class InequalityConstraint(BaseModel):
    """a·v ≤ b or a·v ≥ b. Passed as strict to ``max_slack_feasible`` only."""

    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]
    rhs: float
    direction: Direction


class VariableBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float = 0.0
    upper: float = math.inf

    @model_validator(mode="after")
    def _ordered(self) -> "VariableBound":
        if math.isnan(self.lower) or math.isnan(self.upper) or self.lower == math.inf or self.upper == -math.inf:
            raise ValueError(f"invalid variable bounds [{self.lower}, {self.upper}]")
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        return self


FREE = VariableBound(lower=-math.inf)


class LinearProgram(BaseModel):
    """Optimize c·v subject to equalities, weak inequalities and variable bounds."""

    model_config = ConfigDict(frozen=True)

    objective: tuple[float, ...]
    sense: Sense = Sense.MIN
    eq_constraints: tuple[EqualityConstraint, ...] = ()
    ineq_constraints: tuple[InequalityConstraint, ...] = ()
    var_bounds: tuple[VariableBound, ...] | None = Field(None, description="Defaults to v ≥ 0 for every variable")

    @model_validator(mode="after")
    def _well_formed(self) -> "LinearProgram":
        n = len(self.objective)
        _require_finite("objective", self.objective)
        for i, row in enumerate((*self.eq_constraints, *self.ineq_constraints)):
            if len(row.coefficients) != n:
                raise ValueError(f"constraint {i} has {len(row.coefficients)} coefficients for {n} variables")
            _require_finite(f"constraint {i}", (*row.coefficients, row.rhs))
        if self.var_bounds is not None and len(self.var_bounds) != n:
            raise ValueError(f"{len(self.var_bounds)} variable bounds for {n} variables")
        return self

    @property
    def n_variables(self) -> int:
        return len(self.objective)

    def bounds(self) -> tuple[VariableBound, ...]:
        return self.var_bounds if self.var_bounds is not None else (VariableBound(),) * self.n_variables

    def max_violation(self, solution: Sequence[float]) -> float:
        """Largest violation of any constraint or bound at ``solution``."""
        v = np.asarray(solution, dtype=float)
        worst = 0.0
        for row in self.eq_constraints:
            worst = max(worst, abs(float(np.dot(row.coefficients, v)) - row.rhs))
        for row in self.ineq_constraints:
            gap = float(np.dot(row.coefficients, v)) - row.rhs
            worst = max(worst, gap if row.direction is Direction.LE else -gap)
        for value, bound in zip(v, self.bounds(), strict=True):
            worst = max(worst, bound.lower - value, value - bound.upper)
        return worst


def _require_finite(where: str, values: Sequence[float]) -> None:
    for value in values:
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value} in {where}")


class LpOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: LpStatus
    value: float | None = None
    solution: tuple[float, ...] | None = None
    exact_value: str | None = Field(None, description="Objective as a reduced fraction in exact mode")
    max_violation: float | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(1e-9, gt=0)
    arithmetic: Arithmetic = Arithmetic.FLOAT
    max_iterations: int = Field(100_000, ge=1)
    verify: bool = False

    @classmethod
    def from_settings(cls) -> "SolverConfig":
        settings = get_settings()
        return cls(
            tolerance=settings.lp_tolerance,
            arithmetic=Arithmetic(settings.arithmetic),
            max_iterations=settings.max_iterations,
            verify=settings.verify_solutions,
        )


Number = float | Fraction


def _to_fraction(value: float) -> Fraction:
    # repr gives the shortest decimal that round-trips, so 0.1 becomes 1/10
    return Fraction(repr(float(value)))


@dataclass
class _StandardForm:
    """min cost·x s.t. matrix·x = rhs, x ≥ 0, with the map back to the original variables."""

    matrix: list[list[Number]]
    rhs: list[Number]
    cost: list[Number]
    offsets: list[Number]
    columns: list[list[tuple[int, int]]]


def _standard_form(lp: LinearProgram, convert: Callable[[float], Number]) -> _StandardForm:
    zero = convert(0.0)
    offsets: list[Number] = []
    columns: list[list[tuple[int, int]]] = []
    upper_rows: list[tuple[int, Number]] = []
    n_cols = 0
    for bound in lp.bounds():
        if math.isfinite(bound.lower):
            offsets.append(convert(bound.lower))
            columns.append([(n_cols, 1)])
            if math.isfinite(bound.upper):
                upper_rows.append((n_cols, convert(bound.upper) - convert(bound.lower)))
            n_cols += 1
        elif math.isfinite(bound.upper):
            offsets.append(convert(bound.upper))
            columns.append([(n_cols, -1)])
            n_cols += 1
        else:
            offsets.append(zero)
            columns.append([(n_cols, 1), (n_cols + 1, -1)])
            n_cols += 2

    width = n_cols + len(lp.ineq_constraints) + len(upper_rows)

    def substitute(coefficients: Sequence[float], rhs: float) -> tuple[list[Number], Number]:
        row = [zero] * width
        b = convert(rhs)
        for a, offset, parts in zip(coefficients, offsets, columns, strict=True):
            if a == 0:
                continue
            a = convert(a)
            b -= a * offset
            for col, sign in parts:
                row[col] += a * sign
        return row, b

    matrix, rhs = [], []
    for eq in lp.eq_constraints:
        row, b = substitute(eq.coefficients, eq.rhs)
        matrix.append(row)
        rhs.append(b)
    slack = n_cols
    for ineq in lp.ineq_constraints:
        row, b = substitute(ineq.coefficients, ineq.rhs)
        row[slack] = convert(1.0 if ineq.direction is Direction.LE else -1.0)
        matrix.append(row)
        rhs.append(b)
        slack += 1
    for col, span in upper_rows:
        row = [zero] * width
        row[col] = convert(1.0)
        row[slack] = convert(1.0)
        matrix.append(row)
        rhs.append(span)
        slack += 1

    sign = 1 if lp.sense is Sense.MIN else -1
    cost = [zero] * width
    for c, parts in zip(lp.objective, columns, strict=True):
        for col, s in parts:
            cost[col] += sign * s * convert(c)
    return _StandardForm(matrix=matrix, rhs=rhs, cost=cost, offsets=offsets, columns=columns)


class _Tableau:
    """Dense simplex tableau with Bland's rule; the last row holds reduced costs."""

    def __init__(self, form: _StandardForm, exact: bool, tolerance: float, max_iterations: int):
        self.exact = exact
        self.eps = 0 if exact else tolerance
        self.zero, self.one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
        self.max_iterations = max_iterations
        self.iterations = 0
        m = len(form.matrix)
        n = len(form.cost)
        self.m, self.n = m, n

        dtype = object if exact else float
        self.table = np.empty((m + 1, n + m + 1), dtype=dtype)
        self.table[:] = self.zero
        for i in range(m):
            flip = -1 if form.rhs[i] < 0 else 1
            self.table[i, :n] = [flip * a for a in form.matrix[i]]
            self.table[i, n + i] = self.one
            self.table[i, -1] = flip * form.rhs[i]
        self.cost = np.empty(n, dtype=dtype)
        self.cost[:] = form.cost
        self.basis = list(range(n, n + m))

    def _pivot(self, row: int, col: int) -> None:
        t = self.table
        t[row] = t[row] / t[row, col]
        factors = t[:, col].copy()
        factors[row] = self.zero
        t -= np.outer(factors, t[row])
        t[:, col] = self.zero
        t[row, col] = self.one
        self.basis[row] = col
        self.iterations += 1

    def _iterate(self, allowed: int) -> LpStatus:
        """Primal simplex over columns [0, allowed) until optimal or unbounded."""
        m = len(self.basis)
        while True:
            if self.iterations >= self.max_iterations:
                raise SolverError(f"simplex did not terminate within {self.max_iterations} pivots")
            reduced = self.table[-1, :allowed]
            candidates = [j for j in range(allowed) if reduced[j] < -self.eps]
            if not candidates:
                return LpStatus.OPTIMAL
            entering = candidates[0]
            column = self.table[:m, entering]
            rows = [i for i in range(m) if column[i] > self.eps]
            if not rows:
                return LpStatus.UNBOUNDED
            ratios = [(self.table[i, -1] / column[i], i) for i in rows]
            best = min(r for r, _ in ratios)
            leaving = min((self.basis[i], i) for r, i in ratios if r - best <= self.eps)[1]
            self._pivot(leaving, entering)

    def phase_one(self) -> bool:
        """Minimize the artificial sum; returns whether the system is feasible."""
        m, n = self.m, self.n
        for i in range(m):
            self.table[-1, :n] -= self.table[i, :n]
            self.table[-1, -1] -= self.table[i, -1]
        self._iterate(n + m)
        infeasibility = -self.table[-1, -1]
        scale = max([1.0, *(abs(float(v)) for v in self.table[:m, -1])])
        if infeasibility > self.eps * scale:
            return False

        redundant = []
        for i in range(m):
            if self.basis[i] < n:
                continue
            magnitudes = [(abs(self.table[i, j]), -j) for j in range(n) if abs(self.table[i, j]) > self.eps]
            if magnitudes:
                self._pivot(i, -max(magnitudes)[1])
            else:
                redundant.append(i)
        keep = [i for i in range(m) if i not in redundant]
        self.table = np.delete(self.table, redundant, axis=0)
        self.table = np.delete(self.table, list(range(n, n + m)), axis=1)
        self.basis = [self.basis[i] for i in keep]
        return True

    def phase_two(self) -> LpStatus:
        n = self.n
        self.table[-1, :] = self.zero
        self.table[-1, :n] = self.cost
        for i, col in enumerate(self.basis):
            if self.cost[col] != 0:
                self.table[-1] -= self.cost[col] * self.table[i]
        return self._iterate(n)

    def solution(self) -> list[Number]:
        x = [self.zero] * self.n
        for i, col in enumerate(self.basis):
            x[col] = self.table[i, -1]
        return x


class LpSolver:
    """Deterministic primal simplex (Bland's rule) in float or exact rational arithmetic."""

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig.from_settings()
        logger.debug(
            f"🔧 LP solver ready (arithmetic={self.config.arithmetic}, τ_lp={self.config.tolerance}, "
            f"verify={self.config.verify})"
        )

    def solve(self, lp: LinearProgram) -> LpOutcome:
        """Solve ``lp``.

        Args:
            lp: The linear program.

        Returns:
            LpOutcome with status, value and solution in the original variables.

        Raises:
            SolverError: If the pivot cap is hit or, with verification on, an
                optimal solution violates the constraints by more than τ_lp.
        """
        start = time.time()
        exact = self.config.arithmetic is Arithmetic.EXACT
        convert: Callable[[float], Number] = _to_fraction if exact else float
        form = _standard_form(lp, convert)
        tableau = _Tableau(form, exact, self.config.tolerance, self.config.max_iterations)

        if not tableau.phase_one():
            logger.debug(f"🧮 LP infeasible after {tableau.iterations} pivots")
            return LpOutcome(status=LpStatus.INFEASIBLE, iterations=tableau.iterations)
        status = tableau.phase_two()
        if status is LpStatus.UNBOUNDED:
            logger.debug(f"🧮 LP unbounded after {tableau.iterations} pivots")
            return LpOutcome(status=status, iterations=tableau.iterations)

        x = tableau.solution()
        values = [
            offset + sum((s * x[col] for col, s in parts), start=tableau.zero)
            for offset, parts in zip(form.offsets, form.columns, strict=True)
        ]
        solution = tuple(float(v) for v in values)
        if exact:
            exact_value = sum((convert(c) * v for c, v in zip(lp.objective, values, strict=True)), start=Fraction(0))
            value = float(exact_value)
        else:
            exact_value = None
            value = math.fsum(c * v for c, v in zip(lp.objective, solution, strict=True))

        violation = lp.max_violation(solution) if solution else 0.0
        if self.config.verify and violation > self.config.tolerance * max(1.0, _scale(lp)):
            raise SolverError(
                f"optimal solution violates constraints by {violation:.3e}",
                detail=f"tolerance {self.config.tolerance}",
            )

        logger.debug(
            f"🧮 LP optimal: value={value:.12g} after {tableau.iterations} pivots ({time.time() - start:.3f}s)"
        )
        return LpOutcome(
            status=LpStatus.OPTIMAL,
            value=value,
            solution=solution,
            exact_value=None if exact_value is None else str(exact_value),
            max_violation=violation,
            iterations=tableau.iterations,
        )

    def max_slack_feasible(
        self,
        eqs: Sequence[EqualityConstraint] = (),
        strict_ineqs: Sequence[InequalityConstraint] = (),
        weak_ineqs: Sequence[InequalityConstraint] = (),
        var_bounds: Sequence[VariableBound] | None = None,
        n_variables: int | None = None,
    ) -> SlackResult:
        """Decide whether a system with strict inequalities has a solution.

        Each strict a·v < b becomes a·v + ε ≤ b (and a·v > b becomes
        a·v − ε ≥ b); ε ∈ [0, 1] is maximized. The system is feasible with
        interior when the optimal ε exceeds τ_lp.

        Args:
            eqs: Equalities a·v = b.
            strict_ineqs: Inequalities whose direction is read as strict.
            weak_ineqs: Ordinary weak inequalities.
            var_bounds: Bounds on v; v ≥ 0 when omitted.
            n_variables: Needed only when no constraint fixes the dimension.

        Returns:
            SlackResult with the decision, the witness point and optimal ε.
        """
        rows = (*eqs, *strict_ineqs, *weak_ineqs)
        if n_variables is None:
            if rows:
                n_variables = len(rows[0].coefficients)
            elif var_bounds is not None:
                n_variables = len(var_bounds)
            else:
                raise ValueError("cannot infer the number of variables")
        bounds = tuple(var_bounds) if var_bounds is not None else (VariableBound(),) * n_variables

        lifted_eqs = tuple(
            EqualityConstraint(coefficients=(*row.coefficients, 0.0), rhs=row.rhs) for row in eqs
        )
        lifted = [
            InequalityConstraint(
                coefficients=(*row.coefficients, 1.0 if row.direction is Direction.LE else -1.0),
                rhs=row.rhs,
                direction=row.direction,
            )
            for row in strict_ineqs
        ]
        lifted += [
            InequalityConstraint(coefficients=(*row.coefficients, 0.0), rhs=row.rhs, direction=row.direction)
            for row in weak_ineqs
        ]
        lp = LinearProgram(
            objective=(0.0,) * n_variables + (1.0,),
            sense=Sense.MAX,
            eq_constraints=lifted_eqs,
            ineq_constraints=tuple(lifted),
            var_bounds=(*bounds, VariableBound(lower=0.0, upper=1.0)),
        )
        outcome = self.solve(lp)
        if not outcome.optimal:
            return SlackResult(feasible_with_interior=False)
        slack = outcome.value
        return SlackResult(
            feasible_with_interior=slack > self.config.tolerance,
            witness=outcome.solution[:n_variables],
            slack=slack,
        )


def _scale(lp: LinearProgram) -> float:
    magnitudes = [abs(row.rhs) for row in (*lp.eq_constraints, *lp.ineq_constraints)]
    return max(magnitudes, default=1.0)
