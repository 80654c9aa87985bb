"""Vector representations, demand probabilities and rational demand matrices."""

import logging
import math
from collections.abc import Iterable, Sequence
from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rumbounds.errors import InputError, ProbabilityError
from rumbounds.models.system import BudgetSystem, Patch

logger = logging.getLogger(__name__)


class VectorRepresentation(BaseModel):
    """Patches listed budget by budget, each block in canonical sign order.

    ``homes[b]`` is the plane position of block ``b`` in the system the
    patches were built for and ``offsets[b]`` its first row.
    """

    model_config = ConfigDict(frozen=True)

    entries: tuple[Patch, ...]
    offsets: tuple[int, ...]
    homes: tuple[int, ...]
    budget_ids: tuple[str, ...]

    @model_validator(mode="after")
    def _blocks_are_consistent(self) -> "VectorRepresentation":
        if not (len(self.offsets) == len(self.homes) == len(self.budget_ids)):
            raise ValueError("offsets, homes and budget_ids must have one entry per block")
        bounds = [*self.offsets, len(self.entries)]
        if self.offsets and self.offsets[0] != 0:
            raise ValueError("the first block must start at row 0")
        for b in range(self.n_blocks):
            if bounds[b + 1] <= bounds[b]:
                raise ValueError(f"block {b} ({self.budget_ids[b]}) has no patches")
            for patch in self.entries[bounds[b] : bounds[b + 1]]:
                if patch.home_budget != self.homes[b]:
                    raise ValueError(f"patch {patch.label} listed under the wrong budget block {b}")
        return self

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n_blocks(self) -> int:
        return len(self.offsets)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        bounds = [*self.offsets, len(self.entries)]
        return tuple(bounds[b + 1] - bounds[b] for b in range(self.n_blocks))

    def block_rows(self, block: int) -> range:
        return range(self.offsets[block], self.offsets[block] + self.block_sizes[block])

    def block(self, block: int) -> tuple[Patch, ...]:
        rows = self.block_rows(block)
        return self.entries[rows.start : rows.stop]

    def block_of_row(self, row: int) -> int:
        for b in reversed(range(self.n_blocks)):
            if row >= self.offsets[b]:
                return b
        raise IndexError(row)

    def row_labels(self) -> list[str]:
        """``budget_id:sign`` label of every row."""
        return [f"{self.budget_ids[self.block_of_row(r)]}:{patch.label}" for r, patch in enumerate(self.entries)]

    def index_in_block(self, block: int, label: str) -> int:
        for i, patch in enumerate(self.block(block)):
            if patch.label == label:
                return i
        raise KeyError(label)

    def subset(self, blocks: Iterable[int]) -> "VectorRepresentation":
        """Representation made of the given blocks, in the given order."""
        entries: list[Patch] = []
        offsets, homes, ids = [], [], []
        for b in blocks:
            offsets.append(len(entries))
            homes.append(self.homes[b])
            ids.append(self.budget_ids[b])
            entries.extend(self.block(b))
        return VectorRepresentation(
            entries=tuple(entries), offsets=tuple(offsets), homes=tuple(homes), budget_ids=tuple(ids)
        )


class DemandProbabilities(BaseModel):
    """Choice probabilities π aligned with a vector representation."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...]
    source: Literal["exact", "empirical"] = "exact"
    counts: tuple[int, ...] | None = Field(None, description="Observations per budget block for empirical π")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class RationalMatrix(BaseModel):
    """Binary matrix whose columns are rational patch selections.

    Column ``h`` is stored as ``selections[h]``: the chosen patch index within
    each block of ``rows``. Columns are kept in canonical (lexicographic) order.
    """

    model_config = ConfigDict(frozen=True)

    rows: VectorRepresentation
    selections: tuple[tuple[int, ...], ...]

    @model_validator(mode="after")
    def _valid_columns(self) -> "RationalMatrix":
        sizes = self.rows.block_sizes
        for h, chosen in enumerate(self.selections):
            if len(chosen) != len(sizes):
                raise ValueError(f"column {h} selects {len(chosen)} patches for {len(sizes)} budgets")
            if any(not 0 <= i < size for i, size in zip(chosen, sizes, strict=True)):
                raise ValueError(f"column {h} selects a patch outside its budget block")
        if any(a >= b for a, b in zip(self.selections, self.selections[1:])):
            raise ValueError("columns must be unique and in canonical order")
        return self

    @property
    def n_columns(self) -> int:
        return len(self.selections)

    @cached_property
    def array(self) -> np.ndarray:
        """The matrix as a (rows × H) 0/1 array."""
        matrix = np.zeros((len(self.rows), self.n_columns), dtype=np.int8)
        offsets = np.asarray(self.rows.offsets, dtype=int)
        for h, chosen in enumerate(self.selections):
            matrix[offsets + np.asarray(chosen, dtype=int), h] = 1
        return matrix

    def column_rows(self, h: int) -> tuple[int, ...]:
        """Row indices set to one in column ``h``."""
        return tuple(o + i for o, i in zip(self.rows.offsets, self.selections[h], strict=True))


class AugmentedSystem(BaseModel):
    """Rational demand matrix A* over (B_0, B_1, …, B_J) with its row split.

    ``rows_0`` is block 0 (counterfactual rows, A*_0); ``rows_1`` are the
    observed blocks (A*_1). ``refinement_map[i]`` lists the augmented rows
    that refine entry ``i`` of ``original``, the observed-only representation.
    """

    model_config = ConfigDict(frozen=True)

    system: BudgetSystem
    matrix: RationalMatrix
    rows_0: tuple[int, ...]
    rows_1: tuple[int, ...]
    original: VectorRepresentation | None = None
    refinement_map: tuple[tuple[int, ...], ...] = ()

    @model_validator(mode="after")
    def _row_split(self) -> "AugmentedSystem":
        if not self.system.is_augmented:
            raise ValueError("an augmented system needs a counterfactual budget")
        rep = self.matrix.rows
        if tuple(rep.block_rows(0)) != self.rows_0:
            raise ValueError("rows_0 must be exactly the counterfactual block")
        if sorted(self.rows_0 + self.rows_1) != list(range(len(rep))):
            raise ValueError("rows_0 and rows_1 must partition the rows")
        if self.original is not None and len(self.refinement_map) != len(self.original):
            raise ValueError("refinement_map needs one entry per original patch")
        return self

    @property
    def representation(self) -> VectorRepresentation:
        return self.matrix.rows

    @property
    def counterfactual_patches(self) -> tuple[Patch, ...]:
        return self.representation.block(0)

    @property
    def n_counterfactual(self) -> int:
        return len(self.rows_0)

    @cached_property
    def observed_representation(self) -> VectorRepresentation:
        """Refined observed blocks 1..J (the rows of A*_1)."""
        return self.representation.subset(range(1, self.representation.n_blocks))

    @cached_property
    def counterfactual_choice(self) -> np.ndarray:
        """Block-0 patch index selected by every column."""
        return np.asarray([chosen[0] for chosen in self.matrix.selections], dtype=int)

    @cached_property
    def observed_block(self) -> np.ndarray:
        """A*_1 as a (len(rows_1) × H*) array."""
        return self.matrix.array[list(self.rows_1), :]

    @cached_property
    def counterfactual_block(self) -> np.ndarray:
        """A*_0 as a (len(rows_0) × H*) array."""
        return self.matrix.array[list(self.rows_0), :]

    def column_objective(self, coefficients: Sequence[float]) -> np.ndarray:
        """Per-column value of γ'A*_0 for a coefficient vector γ over rows_0."""
        gamma = np.asarray(coefficients, dtype=float)
        if gamma.shape != (self.n_counterfactual,):
            raise InputError(f"expected {self.n_counterfactual} counterfactual coefficients, got {gamma.shape[0]}")
        return gamma[self.counterfactual_choice]


def build_vector_representation(patches: Sequence[Patch], system: BudgetSystem) -> VectorRepresentation:
    """Group patches by home budget in plane order, canonically sorted.

    Raises:
        InputError: If a patch does not match the system's plane count or a
            budget ends up with no patches.
    """
    n = system.n_planes
    blocks: list[list[Patch]] = [[] for _ in range(n)]
    for patch in patches:
        if len(patch.sign) != n:
            raise InputError(f"patch {patch.label} has {len(patch.sign)} signs for {n} budgets")
        if patch.n_goods != system.dimension:
            raise InputError(f"patch {patch.label} lives in {patch.n_goods} goods, system has {system.dimension}")
        blocks[patch.home_budget].append(patch)

    entries: list[Patch] = []
    offsets: list[int] = []
    for position, block in enumerate(blocks):
        if not block:
            raise InputError(f"budget {system.planes[position].id} has no patches")
        offsets.append(len(entries))
        entries.extend(sorted(block, key=lambda patch: patch.sign.key))

    logger.debug(f"📋 Vector representation built: {len(entries)} rows over {n} budgets")
    return VectorRepresentation(
        entries=tuple(entries),
        offsets=tuple(offsets),
        homes=tuple(range(n)),
        budget_ids=tuple(b.id for b in system.planes),
    )


def validate_probabilities(
    pi: DemandProbabilities,
    rep: VectorRepresentation,
    tolerance: float = 1e-9,
) -> DemandProbabilities:
    """Check π against ``rep`` and return a copy renormalized per block.

    Raises:
        ProbabilityError: On a length mismatch, a non-finite, negative or
            above-one entry, or a block whose sum deviates from 1 by more than
            ``tolerance``. The error names the offending block and budget.
    """
    if len(pi.values) != len(rep):
        raise ProbabilityError(f"probability vector has {len(pi.values)} entries, representation has {len(rep)} rows")
    if pi.counts is not None and len(pi.counts) != rep.n_blocks:
        raise ProbabilityError(f"counts list {len(pi.counts)} budgets, representation has {rep.n_blocks}")

    normalized: list[float] = []
    for b in range(rep.n_blocks):
        budget_id = rep.budget_ids[b]
        block = [pi.values[r] for r in rep.block_rows(b)]
        for value in block:
            if not math.isfinite(value):
                raise ProbabilityError(f"non-finite probability on budget {budget_id}", block=b, budget_id=budget_id)
            if value < -tolerance:
                raise ProbabilityError(
                    f"negative probability {value} on budget {budget_id}", block=b, budget_id=budget_id
                )
            if value > 1 + tolerance:
                raise ProbabilityError(
                    f"probability {value} above one on budget {budget_id}", block=b, budget_id=budget_id
                )
        total = math.fsum(block)
        if abs(total - 1.0) > tolerance:
            raise ProbabilityError(
                f"probabilities on budget {budget_id} (block {b}) sum to {total:.12g}, not 1",
                block=b,
                budget_id=budget_id,
            )
        clipped = [min(max(v, 0.0), 1.0) for v in block]
        scale = math.fsum(clipped)
        normalized.extend(v / scale for v in clipped)

    return pi.model_copy(update={"values": tuple(normalized)})
