"""Result models returned by the geometry, bounds and oracle services."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ExtremizationResult(BaseModel):
    """Infimum and supremum of a linear functional over one patch."""

    model_config = ConfigDict(frozen=True)

    inf_value: float
    sup_value: float
    inf_attained: bool
    sup_attained: bool
    inf_witness: tuple[float, ...]
    sup_witness: tuple[float, ...]

    @model_validator(mode="after")
    def _ordered(self) -> "ExtremizationResult":
        if self.inf_value > self.sup_value + 1e-7 * max(1.0, abs(self.sup_value)):
            raise ValueError(f"inf {self.inf_value} exceeds sup {self.sup_value}")
        return self


class SlackResult(BaseModel):
    """Outcome of the maximum-slack test for a system with strict inequalities."""

    model_config = ConfigDict(frozen=True)

    feasible_with_interior: bool
    witness: tuple[float, ...] | None = None
    slack: float | None = Field(None, description="Optimal ε; None when even the closed system is infeasible")


class RationalizabilityResult(BaseModel):
    """Verdict of the π = Aν test."""

    model_config = ConfigDict(frozen=True)

    rationalizable: bool
    witness: tuple[float, ...] | None = Field(None, description="Mixing weights ν over the matrix columns")
    l1_residual: float = Field(0.0, description="min ‖Aν − π‖₁ over the simplex; zero when rationalizable")
    n_columns: int


class Attainability(StrEnum):
    ATTAINED = "attained"
    NOT_ATTAINED = "not_attained"
    UNKNOWN = "unknown"


class BoundStatus(StrEnum):
    OK = "ok"
    INFEASIBLE_OBSERVABLES = "infeasible_observables"


class BoundResult(BaseModel):
    """Sharp lower/upper bound pair with LP witnesses over the columns of A*."""

    model_config = ConfigDict(frozen=True)

    status: BoundStatus = BoundStatus.OK
    lower: float | None = None
    upper: float | None = None
    lower_attainable: Attainability = Attainability.UNKNOWN
    upper_attainable: Attainability = Attainability.UNKNOWN
    witness_lower: tuple[float, ...] | None = None
    witness_upper: tuple[float, ...] | None = None
    l1_residual: float | None = None

    @model_validator(mode="after")
    def _status_matches_values(self) -> "BoundResult":
        if self.status is BoundStatus.OK and (self.lower is None or self.upper is None):
            raise ValueError("an ok bound result needs both values")
        if self.status is BoundStatus.INFEASIBLE_OBSERVABLES and (self.lower is not None or self.upper is not None):
            raise ValueError("infeasible observables never carry a numeric interval")
        return self

    @property
    def ok(self) -> bool:
        return self.status is BoundStatus.OK

    @property
    def width(self) -> float | None:
        return None if not self.ok else self.upper - self.lower

    def contains(self, other: "BoundResult", tolerance: float = 1e-9) -> bool:
        """Whether this interval contains ``other``'s interval."""
        return self.lower <= other.lower + tolerance and other.upper <= self.upper + tolerance


class CdfEnvelope(BaseModel):
    """Pointwise sharp bounds on Pr(z·y(p_0) ≤ t) along a grid of t values."""

    model_config = ConfigDict(frozen=True)

    status: BoundStatus = BoundStatus.OK
    grid: tuple[float, ...]
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    near_ties: tuple[float, ...] = Field((), description="Grid points where some patch infimum is within 10τ of t")
    l1_residual: float | None = None


class BudgetCover(BaseModel):
    """Sampling coverage of one budget plane."""

    model_config = ConfigDict(frozen=True)

    budget_id: str
    samples: int
    near_ties: int = Field(0, description="Samples within 10τ of another plane, skipped")
    hits: dict[str, int]
    missing: tuple[str, ...] = Field((), description="Enumerated full-dimensional patches never sampled")
    extraneous: tuple[str, ...] = Field((), description="Sampled sign vectors absent from the enumeration")


class CoverReport(BaseModel):
    """Result of the sampling check of the patch partition."""

    model_config = ConfigDict(frozen=True)

    seed: int
    budgets: tuple[BudgetCover, ...]

    @property
    def clean(self) -> bool:
        return all(not b.missing and not b.extraneous for b in self.budgets)
