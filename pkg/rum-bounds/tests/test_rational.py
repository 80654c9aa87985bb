"""Tests for revealed-preference graphs, type enumeration and the augmented system."""

import numpy as np
import pytest

from rumbounds.errors import ColumnLimitExceeded, IncompleteAssignment, InputError
from rumbounds.models.representation import build_vector_representation
from rumbounds.models.system import Budget, BudgetSystem
from rumbounds.services.rational import (
    PatchAssignment,
    PreferenceGraph,
    TypeEnumerator,
    strongly_connected_components,
)

# Rational patch selections over (b0, b1, b2) for the augmented worked example.
AUGMENTED_COLUMNS = (
    (0, 2, 0),
    (0, 2, 1),
    (0, 2, 2),
    (1, 0, 2),
    (1, 1, 2),
    (1, 2, 2),
    (2, 0, 1),
    (2, 0, 2),
    (2, 1, 0),
    (2, 1, 1),
    (2, 1, 2),
    (2, 2, 0),
    (2, 2, 1),
    (2, 2, 2),
)


def _groups(component: dict[int, int]) -> set[frozenset[int]]:
    groups: dict[int, set[int]] = {}
    for node, root in component.items():
        groups.setdefault(root, set()).add(node)
    return {frozenset(g) for g in groups.values()}


class TestStronglyConnectedComponents:
    """Test cases for the iterative Tarjan search."""

    def test_textbook_graph(self):
        """Test the classic eight-node example splits into four components."""
        edges = [(0, 1), (1, 2), (2, 0), (3, 1), (3, 2), (3, 4), (4, 3), (4, 5), (5, 2), (5, 6), (6, 5), (7, 4), (7, 6)]
        edges.append((7, 7))

        component = strongly_connected_components(range(8), edges)

        assert _groups(component) == {
            frozenset({0, 1, 2}),
            frozenset({3, 4}),
            frozenset({5, 6}),
            frozenset({7}),
        }

    def test_isolated_nodes(self):
        """Test nodes without edges are their own components."""
        assert _groups(strongly_connected_components([4, 9], [])) == {frozenset({4}), frozenset({9})}

    def test_long_chain(self):
        """Test a long cycle does not hit the recursion limit."""
        n = 5000
        edges = [(i, (i + 1) % n) for i in range(n)]

        assert len(_groups(strongly_connected_components(range(n), edges))) == 1


class TestPreferenceGraph:
    """Test cases for PreferenceGraph."""

    def test_strict_two_cycle(self, two_budget_rep):
        """Test choosing (0,−) and (−,0) reveals each bundle strictly preferred to the other."""
        graph = PreferenceGraph.from_assignment(PatchAssignment(chosen=(0, 0)), two_budget_rep)

        assert graph.strict_edges == frozenset({(1, 0), (0, 1)})
        assert graph.has_strict_cycle()

    def test_one_way_relation(self, two_budget_rep):
        """Test (0,−) with (+,0) gives a single strict edge and no cycle."""
        graph = PreferenceGraph.from_assignment(PatchAssignment(chosen=(0, 1)), two_budget_rep)

        assert graph.strict_edges == frozenset({(1, 0)})
        assert not graph.has_strict_cycle()

    def test_weak_cycle_is_allowed(self, geometry):
        """Test a cycle through weak edges only is rational."""
        system = BudgetSystem(
            budgets=(Budget(id="b1", p=(1.0, 2.0)), Budget(id="b2", p=(2.0, 1.0))), keep_null_patches=True
        )
        rep = build_vector_representation(geometry.enumerate_patches(system), system)
        crossing = rep.index_in_block(0, "00"), rep.index_in_block(1, "00")

        graph = PreferenceGraph.from_assignment(PatchAssignment(chosen=crossing), rep)

        assert graph.weak_edges == frozenset({(0, 1), (1, 0)})
        assert not graph.has_strict_cycle()

    def test_partial_assignment_ignores_unchosen(self, two_budget_rep):
        """Test only assigned blocks become nodes."""
        graph = PreferenceGraph.from_assignment(PatchAssignment(chosen=(0, None)), two_budget_rep)

        assert graph.nodes == (0,)
        assert not graph.strict_edges


class TestTypeEnumerator:
    """Test cases for TypeEnumerator."""

    def test_is_rational(self, enumerator, two_budget_rep):
        """Test the four patch pairs of the worked example."""
        assert not enumerator.is_rational(PatchAssignment(chosen=(0, 0)), two_budget_rep)
        assert enumerator.is_rational(PatchAssignment(chosen=(0, 1)), two_budget_rep)
        assert enumerator.is_rational(PatchAssignment(chosen=(1, 0)), two_budget_rep)
        assert enumerator.is_rational(PatchAssignment(chosen=(1, 1)), two_budget_rep)

    def test_is_rational_incomplete(self, enumerator, two_budget_rep):
        """Test an unassigned budget raises IncompleteAssignment."""
        with pytest.raises(IncompleteAssignment, match="b2"):
            enumerator.is_rational(PatchAssignment(chosen=(0, None)), two_budget_rep)

    def test_is_rational_misaligned(self, enumerator, two_budget_rep):
        """Test assignments of the wrong length or out of range are rejected."""
        with pytest.raises(InputError, match="covers"):
            enumerator.is_rational(PatchAssignment(chosen=(0,)), two_budget_rep)
        with pytest.raises(InputError, match="outside"):
            enumerator.is_rational(PatchAssignment(chosen=(0, 2)), two_budget_rep)

    def test_enumerate_two_budgets(self, enumerator, two_budget_rep):
        """Test the worked example has three rational types."""
        matrix = enumerator.enumerate_types(two_budget_rep)

        assert matrix.selections == ((0, 1), (1, 0), (1, 1))
        np.testing.assert_array_equal(matrix.array, [[1, 0, 0], [0, 1, 1], [0, 1, 0], [1, 0, 1]])

    def test_single_budget(self, enumerator, geometry):
        """Test one budget gives one column per patch."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 1.0)),))
        rep = build_vector_representation(geometry.enumerate_patches(system), system)

        assert enumerator.enumerate_types(rep).selections == ((0,),)

    def test_column_cap(self, geometry, two_budget_rep):
        """Test exceeding max_types raises ColumnLimitExceeded."""
        with pytest.raises(ColumnLimitExceeded) as exc_info:
            TypeEnumerator(geometry, max_types=2).enumerate_types(two_budget_rep)

        assert exc_info.value.cap == 2
        assert exc_info.value.code == "column_limit_exceeded"

    def test_columns_are_rational_and_canonical(self, enumerator, augmented):
        """Test every enumerated column passes is_rational and columns are sorted."""
        rep = augmented.representation
        selections = augmented.matrix.selections

        assert list(selections) == sorted(selections)
        assert all(enumerator.is_rational(PatchAssignment(chosen=c), rep) for c in selections)

    def test_matches_brute_force_on_random_systems(self, enumerator, geometry, oracle, random_system):
        """Test the pruned search agrees with the exhaustive one."""
        rng = np.random.default_rng(5)
        for goods, n_budgets in ((2, 3), (3, 3), (2, 4), (3, 2)):
            system = random_system(rng, goods=goods, n_budgets=n_budgets)
            rep = build_vector_representation(geometry.enumerate_patches(system), system)

            assert enumerator.enumerate_types(rep).selections == oracle.brute_force_types(rep).selections


class TestBuildAugmented:
    """Test cases for TypeEnumerator.build_augmented."""

    def test_worked_example(self, augmented):
        """Test patches, row split and columns of the augmented worked example."""
        rep = augmented.representation

        assert rep.row_labels() == [
            "b0:0-+",
            "b0:0+-",
            "b0:0++",
            "b1:-0-",
            "b1:-0+",
            "b1:+0+",
            "b2:--0",
            "b2:-+0",
            "b2:++0",
        ]
        assert augmented.rows_0 == (0, 1, 2)
        assert augmented.rows_1 == (3, 4, 5, 6, 7, 8)
        assert augmented.matrix.selections == AUGMENTED_COLUMNS

    def test_refinement_map(self, augmented):
        """Test each original observed patch maps to the augmented rows refining it."""
        assert [p.label for p in augmented.original.entries] == ["0-", "0+", "-0", "+0"]
        assert augmented.refinement_map == ((3,), (4, 5), (6,), (7, 8))

    def test_projection_recovers_observed_types(self, augmented, enumerator, two_budget_rep, bounds):
        """Test dropping the counterfactual block and coarsening gives back A."""
        rep = augmented.representation
        coarse = {
            tuple(two_budget_rep.index_in_block(b - 1, rep.block(b)[chosen[b]].label[1:]) for b in (1, 2))
            for chosen in augmented.matrix.selections
        }

        assert sorted(coarse) == list(enumerator.enumerate_types(two_budget_rep).selections)
        assert bounds.observed_matrix(augmented).n_columns == 8

    def test_counterfactual_only(self, enumerator):
        """Test a system with no observed budgets still builds."""
        aug = enumerator.build_augmented(BudgetSystem(counterfactual=Budget(id="b0", p=(1.0, 2.0))))

        assert aug.original is None
        assert aug.refinement_map == ()
        assert aug.matrix.selections == ((0,),)
        assert aug.rows_1 == ()

    def test_requires_counterfactual(self, enumerator, two_budgets):
        """Test build_augmented rejects systems without B_0."""
        with pytest.raises(InputError, match="counterfactual"):
            enumerator.build_augmented(two_budgets)

    def test_matches_brute_force(self, augmented, oracle):
        """Test the augmented columns agree with the exhaustive search."""
        assert oracle.brute_force_types(augmented.representation).selections == AUGMENTED_COLUMNS
