"""Budgets, sign vectors and patches."""

import math
from enum import IntEnum, StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Sign(IntEnum):
    """Position of a bundle relative to one budget plane, sg(p·y − 1).

    The integer values give the canonical order Below < On < Above.
    """

    BELOW = -1
    ON = 0
    ABOVE = 1

    @property
    def symbol(self) -> str:
        return {Sign.BELOW: "-", Sign.ON: "0", Sign.ABOVE: "+"}[self]

    @classmethod
    def from_symbol(cls, symbol: str) -> "Sign":
        try:
            return {"-": cls.BELOW, "0": cls.ON, "+": cls.ABOVE}[symbol]
        except KeyError:
            raise ValueError(f"Unknown sign symbol {symbol!r}; expected one of '-', '0', '+'") from None


class Budget(BaseModel):
    """A budget plane {y ≥ 0 : p·y = 1}."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Opaque budget label")
    p: tuple[float, ...] = Field(..., min_length=1, description="Strictly positive prices, expenditure normalized to 1")

    @field_validator("p")
    @classmethod
    def _positive_prices(cls, p: tuple[float, ...]) -> tuple[float, ...]:
        for k, price in enumerate(p):
            if not math.isfinite(price) or price <= 0:
                raise ValueError(f"price {k} must be finite and strictly positive, got {price}")
        return p

    @property
    def dimension(self) -> int:
        return len(self.p)


class BudgetSystem(BaseModel):
    """Ordered observed budgets plus an optional counterfactual budget.

    ``planes`` lists the counterfactual first when present, so position 0 is
    B_0 in an augmented system and B_1 otherwise. Every sign vector and patch
    built for this system indexes budgets by that position.
    """

    model_config = ConfigDict(frozen=True)

    budgets: tuple[Budget, ...] = ()
    counterfactual: Budget | None = None
    tolerance: float = Field(1e-9, gt=0)
    keep_null_patches: bool = False

    @model_validator(mode="after")
    def _consistent_dimensions(self) -> "BudgetSystem":
        planes = self.planes
        if not planes:
            raise ValueError("a budget system needs at least one budget")
        dims = {b.dimension for b in planes}
        if len(dims) != 1:
            raise ValueError(f"all budgets must share the same number of goods, got {sorted(dims)}")
        ids = [b.id for b in planes]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ValueError(f"duplicate budget ids: {duplicates}")
        return self

    @property
    def planes(self) -> tuple[Budget, ...]:
        if self.counterfactual is None:
            return self.budgets
        return (self.counterfactual, *self.budgets)

    @property
    def is_augmented(self) -> bool:
        return self.counterfactual is not None

    @property
    def dimension(self) -> int:
        return self.planes[0].dimension

    @property
    def n_planes(self) -> int:
        return len(self.planes)

    def price_matrix(self) -> np.ndarray:
        """Prices as an (n_planes × K) array, rows in plane order."""
        return np.array([b.p for b in self.planes], dtype=float)

    def position_of(self, budget_id: str) -> int:
        for position, budget in enumerate(self.planes):
            if budget.id == budget_id:
                return position
        raise KeyError(budget_id)

    def observed(self) -> "BudgetSystem":
        """The same system with the counterfactual removed (needs J ≥ 1)."""
        return BudgetSystem(budgets=self.budgets, tolerance=self.tolerance, keep_null_patches=self.keep_null_patches)

    def without_budget(self, budget_id: str) -> "BudgetSystem":
        """The same system with one observed budget dropped."""
        remaining = tuple(b for b in self.budgets if b.id != budget_id)
        if len(remaining) == len(self.budgets):
            raise KeyError(budget_id)
        return BudgetSystem(
            budgets=remaining,
            counterfactual=self.counterfactual,
            tolerance=self.tolerance,
            keep_null_patches=self.keep_null_patches,
        )


class SignVector(BaseModel):
    """Per-plane classification shared by every point of a patch."""

    model_config = ConfigDict(frozen=True)

    signs: tuple[Sign, ...] = Field(..., min_length=1)

    @field_validator("signs")
    @classmethod
    def _on_some_plane(cls, signs: tuple[Sign, ...]) -> tuple[Sign, ...]:
        if Sign.ON not in signs:
            raise ValueError("a patch lies on at least one budget plane")
        return signs

    @classmethod
    def from_string(cls, text: str) -> "SignVector":
        return cls(signs=tuple(Sign.from_symbol(c) for c in text))

    def __str__(self) -> str:
        return "".join(s.symbol for s in self.signs)

    def __len__(self) -> int:
        return len(self.signs)

    def __getitem__(self, position: int) -> Sign:
        return self.signs[position]

    @property
    def key(self) -> tuple[int, ...]:
        """Sort key for the canonical Below < On < Above order."""
        return tuple(int(s) for s in self.signs)

    @property
    def on_planes(self) -> tuple[int, ...]:
        return tuple(k for k, s in enumerate(self.signs) if s is Sign.ON)


class Relation(StrEnum):
    EQ = "=="
    LE = "<="
    GE = ">="


class PlaneConstraint(BaseModel):
    """One budget plane's constraint p·y ⋈ 1 on a patch closure.

    ``strict`` marks constraints that hold strictly on the patch itself
    (Below / Above signs); the closure uses the weak version.
    """

    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]
    relation: Relation
    strict: bool = False
    rhs: float = 1.0


class Patch(BaseModel):
    """One cell of the budget arrangement, listed under ``home_budget``.

    The closure is ``closure`` together with y ≥ 0.
    """

    model_config = ConfigDict(frozen=True)

    home_budget: int = Field(..., ge=0)
    sign: SignVector
    dimension: int = Field(..., ge=0)
    closure: tuple[PlaneConstraint, ...]
    interior_point: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _home_is_on(self) -> "Patch":
        if self.home_budget >= len(self.sign):
            raise ValueError(f"home budget {self.home_budget} outside sign vector of length {len(self.sign)}")
        if self.sign[self.home_budget] is not Sign.ON:
            raise ValueError("a patch must lie on its home budget plane")
        return self

    @property
    def label(self) -> str:
        return str(self.sign)

    @property
    def n_goods(self) -> int:
        return len(self.closure[0].coefficients)

    @property
    def equalities(self) -> tuple[PlaneConstraint, ...]:
        return tuple(c for c in self.closure if c.relation is Relation.EQ)

    @property
    def inequalities(self) -> tuple[PlaneConstraint, ...]:
        return tuple(c for c in self.closure if c.relation is not Relation.EQ)

    @property
    def strict_inequalities(self) -> tuple[PlaneConstraint, ...]:
        return tuple(c for c in self.inequalities if c.strict)


def plane_constraints(system: BudgetSystem, sign: SignVector) -> tuple[PlaneConstraint, ...]:
    """Closure constraints of the region carrying ``sign`` in ``system``."""
    constraints = []
    for budget, s in zip(system.planes, sign.signs, strict=True):
        if s is Sign.ON:
            constraints.append(PlaneConstraint(coefficients=budget.p, relation=Relation.EQ))
        elif s is Sign.BELOW:
            constraints.append(PlaneConstraint(coefficients=budget.p, relation=Relation.LE, strict=True))
        else:
            constraints.append(PlaneConstraint(coefficients=budget.p, relation=Relation.GE, strict=True))
    return tuple(constraints)
