"""Rational demand types: revealed-preference graphs and column enumeration."""

import logging
import time
from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict

from rumbounds.config import get_settings
from rumbounds.errors import ColumnLimitExceeded, IncompleteAssignment, InputError
from rumbounds.models.representation import (
    AugmentedSystem,
    RationalMatrix,
    VectorRepresentation,
    build_vector_representation,
)
from rumbounds.models.system import BudgetSystem, Sign
from rumbounds.services.geometry import PatchGeometry

logger = logging.getLogger(__name__)


class PatchAssignment(BaseModel):
    """One patch index per budget block; ``None`` marks a block not yet chosen."""

    model_config = ConfigDict(frozen=True)

    chosen: tuple[int | None, ...]

    @property
    def complete(self) -> bool:
        return all(i is not None for i in self.chosen)

    def assigned_blocks(self) -> list[int]:
        return [b for b, i in enumerate(self.chosen) if i is not None]


def strongly_connected_components(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> dict[int, int]:
    """Tarjan's algorithm, iterative. Maps every node to a component id."""
    successors: dict[int, list[int]] = {v: [] for v in nodes}
    for u, v in edges:
        successors[u].append(v)

    index: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    component: dict[int, int] = {}
    counter = 0

    for root in successors:
        if root in index:
            continue
        work = [(root, iter(successors[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, children = work[-1]
            advanced = False
            for w in children:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors[w])))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component[w] = v
                    if w == v:
                        break
    return component


class PreferenceGraph(BaseModel):
    """Revealed-preference relations among the chosen patches.

    Edge j→k means the bundle chosen on budget k was affordable on budget j:
    weak when it lies on plane j, strict when strictly inside it.
    """

    model_config = ConfigDict(frozen=True)

    nodes: tuple[int, ...]
    weak_edges: frozenset[tuple[int, int]]
    strict_edges: frozenset[tuple[int, int]]

    @classmethod
    def from_assignment(cls, assignment: PatchAssignment, rep: VectorRepresentation) -> "PreferenceGraph":
        nodes = assignment.assigned_blocks()
        weak, strict = set(), set()
        for k in nodes:
            sign = rep.block(k)[assignment.chosen[k]].sign
            for j in nodes:
                if j == k:
                    continue
                s = sign[rep.homes[j]]
                if s is Sign.ON:
                    weak.add((j, k))
                elif s is Sign.BELOW:
                    strict.add((j, k))
        return cls(nodes=tuple(nodes), weak_edges=frozenset(weak), strict_edges=frozenset(strict))

    def has_strict_cycle(self) -> bool:
        """Whether some strongly connected component contains a strict edge."""
        if not self.strict_edges:
            return False
        component = strongly_connected_components(self.nodes, self.weak_edges | self.strict_edges)
        return any(component[u] == component[v] for u, v in self.strict_edges)


class TypeEnumerator:
    """Enumerates the rational columns of A (or A*) by pruned depth-first search."""

    def __init__(self, geometry: PatchGeometry | None = None, max_types: int | None = None):
        self.geometry = geometry or PatchGeometry()
        self.max_types = max_types if max_types is not None else get_settings().max_types

    def is_rational(self, assignment: PatchAssignment, rep: VectorRepresentation) -> bool:
        """GARP with indifference: only cycles through a strict edge are fatal.

        Raises:
            IncompleteAssignment: If some block has no chosen patch.
            InputError: If the assignment does not match ``rep``.
        """
        if len(assignment.chosen) != rep.n_blocks:
            raise InputError(f"assignment covers {len(assignment.chosen)} budgets, representation has {rep.n_blocks}")
        if not assignment.complete:
            missing = [rep.budget_ids[b] for b, i in enumerate(assignment.chosen) if i is None]
            raise IncompleteAssignment(f"no patch chosen on budgets {missing}")
        for b, i in enumerate(assignment.chosen):
            if not 0 <= i < rep.block_sizes[b]:
                raise InputError(f"patch index {i} outside block {b} ({rep.budget_ids[b]})")
        return not PreferenceGraph.from_assignment(assignment, rep).has_strict_cycle()

    def enumerate_types(self, rep: VectorRepresentation) -> RationalMatrix:
        """Every rational patch selection, as columns in canonical order.

        Budgets are filled in block order and patches in canonical order, so
        surviving columns come out lexicographically sorted. A partial
        selection whose induced graph already has a strict cycle is pruned.

        Raises:
            ColumnLimitExceeded: When the column count would exceed ``max_types``.
        """
        start = time.time()
        n_blocks = rep.n_blocks
        logger.info(f"🔍 Enumerating rational types over {n_blocks} budgets, sizes {list(rep.block_sizes)}")

        columns: list[tuple[int, ...]] = []
        visited = 0
        chosen: list[int | None] = [None] * n_blocks

        def descend(block: int) -> None:
            nonlocal visited
            if block == n_blocks:
                if len(columns) >= self.max_types:
                    raise ColumnLimitExceeded(self.max_types)
                columns.append(tuple(chosen))
                return
            for i in range(rep.block_sizes[block]):
                chosen[block] = i
                visited += 1
                graph = PreferenceGraph.from_assignment(PatchAssignment(chosen=tuple(chosen)), rep)
                if not graph.has_strict_cycle():
                    descend(block + 1)
            chosen[block] = None

        descend(0)
        logger.info(f"✅ H={len(columns)} rational types ({visited} partial selections, {time.time() - start:.3f}s)")
        return RationalMatrix(rows=rep, selections=tuple(columns))

    def build_augmented(self, system: BudgetSystem) -> AugmentedSystem:
        """Patches, rational types and row split for (B_0, B_1, …, B_J).

        Raises:
            InputError: If ``system`` has no counterfactual budget.
        """
        if not system.is_augmented:
            raise InputError("the system has no counterfactual budget")

        logger.info("=" * 60)
        logger.info("🚀 BUILDING AUGMENTED SYSTEM")
        logger.info(f"   Counterfactual: {system.counterfactual.id} p={system.counterfactual.p}")
        logger.info(f"   Observed budgets: {[b.id for b in system.budgets]}")
        logger.info("=" * 60)
        start = time.time()

        rep = build_vector_representation(self.geometry.enumerate_patches(system), system)
        matrix = self.enumerate_types(rep)
        rows_0 = tuple(rep.block_rows(0))
        rows_1 = tuple(range(len(rows_0), len(rep)))

        original, refinement = None, ()
        if system.budgets:
            observed = system.observed()
            original = build_vector_representation(self.geometry.enumerate_patches(observed), observed)
            refinement = self._refinement_map(original, rep)

        logger.info(
            f"✅ Augmented system ready: {len(rows_0)} counterfactual patches, {len(rows_1)} observed rows, "
            f"H*={matrix.n_columns} ({time.time() - start:.2f}s)"
        )
        return AugmentedSystem(
            system=system,
            matrix=matrix,
            rows_0=rows_0,
            rows_1=rows_1,
            original=original,
            refinement_map=refinement,
        )

    @staticmethod
    def _refinement_map(original: VectorRepresentation, refined: VectorRepresentation) -> tuple[tuple[int, ...], ...]:
        """Augmented rows whose signs on the observed budgets equal each original patch's signs."""
        mapping = []
        for b in range(original.n_blocks):
            for patch in original.block(b):
                children = tuple(
                    r for r in refined.block_rows(b + 1) if refined.entries[r].sign.signs[1:] == patch.sign.signs
                )
                if not children:
                    logger.warning(f"⚠️  Original patch {original.budget_ids[b]}:{patch.label} has no refinement")
                mapping.append(children)
        return tuple(mapping)
