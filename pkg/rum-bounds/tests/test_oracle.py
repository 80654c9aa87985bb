"""Tests for the brute-force reference computations."""

import pytest

from rumbounds.errors import InfeasibleObservables, InputError, SizeCapExceeded
from rumbounds.models.representation import DemandProbabilities
from rumbounds.models.system import Budget, BudgetSystem
from rumbounds.services.lp import Sense
from rumbounds.services.oracle import BruteForceOracle


class TestBruteForceTypes:
    """Test cases for BruteForceOracle.brute_force_types."""

    def test_worked_example(self, oracle, two_budget_rep):
        """Test exhaustive search finds the three rational types."""
        assert oracle.brute_force_types(two_budget_rep).selections == ((0, 1), (1, 0), (1, 1))

    def test_combination_cap(self, two_budget_rep):
        """Test the product of block sizes is capped."""
        with pytest.raises(SizeCapExceeded, match="combinations"):
            BruteForceOracle(max_combinations=3).brute_force_types(two_budget_rep)


class TestVertexEnumerateBounds:
    """Test cases for BruteForceOracle.vertex_enumerate_bounds."""

    def test_middle_patch(self, oracle, augmented, refined_pi):
        """Test vertex enumeration reproduces Pr(middle patch) ∈ [0.5, 1]."""
        indicator = (0.0, 0.0, 1.0)

        assert oracle.vertex_enumerate_bounds(augmented, refined_pi, indicator, Sense.MIN) == pytest.approx(0.5)
        assert oracle.vertex_enumerate_bounds(augmented, refined_pi, indicator, Sense.MAX) == pytest.approx(1.0)

    def test_column_cap(self, augmented, refined_pi):
        """Test systems with too many columns are refused."""
        with pytest.raises(SizeCapExceeded, match="H\\*=14"):
            BruteForceOracle(max_columns=10).vertex_enumerate_bounds(augmented, refined_pi, (1.0, 0.0, 0.0), Sense.MIN)

    def test_objective_length(self, oracle, augmented, refined_pi):
        """Test the objective needs one coefficient per counterfactual patch."""
        with pytest.raises(InputError, match="coefficients"):
            oracle.vertex_enumerate_bounds(augmented, refined_pi, (1.0, 0.0), Sense.MIN)

    def test_infeasible(self, oracle, augmented):
        """Test irrational observed demand has no feasible vertex."""
        pi1 = DemandProbabilities(values=(0.6, 0.2, 0.2, 0.5, 0.3, 0.2))

        with pytest.raises(InfeasibleObservables):
            oracle.vertex_enumerate_bounds(augmented, pi1, (0.0, 0.0, 1.0), Sense.MIN)


class TestSamplePatchCover:
    """Test cases for BruteForceOracle.sample_patch_cover."""

    def test_worked_example_is_clean(self, oracle, geometry, augmented_system):
        """Test every sampled sign vector is enumerated and every segment is sampled."""
        patches = geometry.enumerate_patches(augmented_system)

        report = oracle.sample_patch_cover(augmented_system, patches, 2000, seed=7)

        assert report.clean
        assert [cover.budget_id for cover in report.budgets] == ["b0", "b1", "b2"]
        assert set(report.budgets[0].hits) == {"0-+", "0+-", "0++"}
        assert all(sum(cover.hits.values()) + cover.near_ties == 2000 for cover in report.budgets)

    def test_reproducible(self, oracle, geometry, two_budgets):
        """Test the same seed gives the same report."""
        patches = geometry.enumerate_patches(two_budgets)

        first = oracle.sample_patch_cover(two_budgets, patches, 500, seed=1)
        second = oracle.sample_patch_cover(two_budgets, patches, 500, seed=1)

        assert first == second

    def test_missing_patch_reported(self, oracle, geometry, two_budgets):
        """Test a dropped patch shows up as an extraneous sample."""
        patches = [p for p in geometry.enumerate_patches(two_budgets) if p.label != "0+"]

        report = oracle.sample_patch_cover(two_budgets, patches, 500, seed=2)

        assert not report.clean
        assert report.budgets[0].extraneous == ("0+",)

    def test_single_budget(self, oracle, geometry):
        """Test a lone budget lands every sample in its only patch."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 3.0, 2.0)),))

        report = oracle.sample_patch_cover(system, geometry.enumerate_patches(system), 100)

        assert report.budgets[0].hits == {"0": 100}

    def test_sample_size(self, oracle, two_budgets):
        """Test the sample size must be positive."""
        with pytest.raises(InputError, match="at least 1"):
            oracle.sample_patch_cover(two_budgets, [], 0)
