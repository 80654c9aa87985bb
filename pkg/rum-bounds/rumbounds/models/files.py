"""Input and output file formats: system files, probability files and observation tables."""

import json
import logging
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rumbounds.errors import InputError, ProbabilityError
from rumbounds.models.representation import DemandProbabilities, VectorRepresentation
from rumbounds.models.system import Budget, BudgetSystem

logger = logging.getLogger(__name__)


def _read_json(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}", detail=str(e)) from e


class BudgetEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    p: list[float] = Field(..., min_length=1)


class CounterfactualEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field("b0", min_length=1)
    p: list[float] = Field(..., min_length=1)


class SystemOptions(BaseModel):
    """Per-file overrides of the environment settings."""

    model_config = ConfigDict(extra="forbid")

    tolerance: float | None = Field(None, gt=0)
    keep_null_patches: bool | None = None
    arithmetic: Literal["float", "exact"] | None = None
    max_types: int | None = Field(None, ge=1)


class SystemFile(BaseModel):
    """JSON description of observed budgets and an optional counterfactual budget.

    Example:
        {"K": 2, "budgets": [{"id": "b1", "p": [1, 2]}, {"id": "b2", "p": [2, 1]}],
         "counterfactual": {"p": [1.2, 1.2]}, "options": {"tolerance": 1e-9}}
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    goods: int = Field(..., alias="K", ge=1, description="Number of goods")
    budgets: list[BudgetEntry] = Field(default_factory=list)
    counterfactual: CounterfactualEntry | None = None
    options: SystemOptions = Field(default_factory=SystemOptions)

    @model_validator(mode="after")
    def _dimensions_match(self) -> "SystemFile":
        entries = [*self.budgets, *([self.counterfactual] if self.counterfactual else [])]
        if not entries:
            raise ValueError("the file lists no budgets")
        for entry in entries:
            if len(entry.p) != self.goods:
                raise ValueError(f"budget {entry.id} has {len(entry.p)} prices, K={self.goods}")
        return self

    @classmethod
    def load(cls, path: str | Path) -> "SystemFile":
        path = Path(path)
        logger.debug(f"📂 Reading system file {path}")
        return cls.model_validate_json(_read_json(path))

    def to_system(self, tolerance: float | None = None, keep_null_patches: bool | None = None) -> BudgetSystem:
        """Build the BudgetSystem; explicit arguments override the file's options."""
        counterfactual = None
        if self.counterfactual is not None:
            counterfactual = Budget(id=self.counterfactual.id, p=tuple(self.counterfactual.p))
        kwargs = {}
        tolerance = tolerance if tolerance is not None else self.options.tolerance
        keep = keep_null_patches if keep_null_patches is not None else self.options.keep_null_patches
        if tolerance is not None:
            kwargs["tolerance"] = tolerance
        if keep is not None:
            kwargs["keep_null_patches"] = keep
        return BudgetSystem(
            budgets=tuple(Budget(id=b.id, p=tuple(b.p)) for b in self.budgets),
            counterfactual=counterfactual,
            **kwargs,
        )


class TieEntry(BaseModel):
    """An observation on a second budget plane; counted only when null patches are kept."""

    line: int
    budget_id: str
    y: tuple[float, ...]
    sign: str


class PiFile(BaseModel):
    """Choice probabilities keyed by budget id, then by patch sign string.

    Sign strings run over the system's planes with the counterfactual first,
    so with a counterfactual present they name refined patches. Patches left
    out of a budget's map carry probability zero.
    """

    model_config = ConfigDict(extra="forbid")

    budgets: dict[str, dict[str, float]]
    source: Literal["exact", "empirical"] = "exact"
    counts: dict[str, int] | None = None
    ties: list[TieEntry] = Field(default_factory=list)

    @classmethod
    def load(cls, path: str | Path) -> "PiFile":
        path = Path(path)
        logger.debug(f"📂 Reading probability file {path}")
        return cls.model_validate_json(_read_json(path))

    def to_probabilities(self, rep: VectorRepresentation, augmented: bool = False) -> DemandProbabilities:
        """Align the file with ``rep``, the (refined, when ``augmented``) observed patches.

        Raises:
            ProbabilityError: On unknown budgets, missing budgets or sign
                strings that name no patch of their budget. Coarse sign strings
                (one sign short) are reported with the refined patches required.
        """
        unknown = sorted(set(self.budgets) - set(rep.budget_ids))
        if unknown:
            raise ProbabilityError(f"probability file names unknown budgets {unknown}; expected {list(rep.budget_ids)}")

        values: list[float] = []
        for b, budget_id in enumerate(rep.budget_ids):
            if budget_id not in self.budgets:
                raise ProbabilityError(f"no probabilities for budget {budget_id}", block=b, budget_id=budget_id)
            entries = self.budgets[budget_id]
            labels = [patch.label for patch in rep.block(b)]
            width = len(labels[0])
            for key in entries:
                if key in labels:
                    continue
                if augmented and len(key) == width - 1:
                    raise ProbabilityError(
                        f"budget {budget_id}: sign string {key!r} names an observed-only patch; "
                        f"with a counterfactual present give probabilities for the refined patches {labels}",
                        block=b,
                        budget_id=budget_id,
                    )
                raise ProbabilityError(
                    f"budget {budget_id}: {key!r} is not a patch of this budget; patches are {labels}",
                    block=b,
                    budget_id=budget_id,
                )
            values.extend(float(entries.get(label, 0.0)) for label in labels)

        counts = None
        if self.counts is not None:
            counts = tuple(int(self.counts.get(budget_id, 0)) for budget_id in rep.budget_ids)
        return DemandProbabilities(values=tuple(values), source=self.source, counts=counts)

    @classmethod
    def from_probabilities(
        cls, pi: DemandProbabilities, rep: VectorRepresentation, ties: list[TieEntry] | None = None
    ) -> "PiFile":
        budgets = {
            budget_id: {rep.entries[r].label: pi.values[r] for r in rep.block_rows(b)}
            for b, budget_id in enumerate(rep.budget_ids)
        }
        counts = None if pi.counts is None else dict(zip(rep.budget_ids, pi.counts, strict=True))
        return cls(budgets=budgets, source=pi.source, counts=counts, ties=ties or [])


class Observation(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int
    budget_id: str
    y: tuple[float, ...]


class ObservationsFile(BaseModel):
    """Observed bundles, one per row: budget_id, y_1, …, y_K."""

    observations: tuple[Observation, ...]

    @classmethod
    def read_csv(cls, path: str | Path, goods: int) -> "ObservationsFile":
        """Read a comma-separated table with a header row.

        Raises:
            InputError: If the file is unreadable, a column is missing or a
                quantity is not numeric (the message names the line).
        """
        path = Path(path)
        try:
            frame = pd.read_csv(path, dtype={"budget_id": str}, skipinitialspace=True)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise InputError(f"cannot read observations from {path}", detail=str(e)) from e

        columns = ["budget_id", *(f"y_{k}" for k in range(1, goods + 1))]
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise InputError(f"{path}: missing columns {missing}; expected header {','.join(columns)}")

        quantities = frame[columns[1:]].apply(pd.to_numeric, errors="coerce")
        bad = quantities.isna().any(axis=1) | frame["budget_id"].isna()
        if bad.any():
            # header is line 1
            lines = [int(i) + 2 for i in frame.index[bad]]
            raise InputError(f"{path}: non-numeric or empty fields on lines {lines}")

        observations = tuple(
            Observation(line=int(i) + 2, budget_id=str(budget_id).strip(), y=tuple(float(v) for v in row))
            for i, budget_id, row in zip(frame.index, frame["budget_id"], quantities.to_numpy(), strict=True)
        )
        logger.info(f"📂 Read {len(observations)} observations from {path}")
        return cls(observations=observations)


def read_vector_file(path: str | Path) -> list[float]:
    """A JSON list of numbers, used for per-patch functional bounds."""
    try:
        data = json.loads(_read_json(Path(path)))
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON", detail=str(e)) from e
    if not isinstance(data, list) or not all(isinstance(v, int | float) and not isinstance(v, bool) for v in data):
        raise InputError(f"{path} must hold a JSON list of numbers")
    return [float(v) for v in data]
