"""Tests for patch enumeration, point classification and patch polytope queries."""

import numpy as np
import pytest

from rumbounds.errors import InputError, NotOnAnyBudget
from rumbounds.models.representation import build_vector_representation
from rumbounds.models.system import Budget, BudgetSystem, Patch, Sign, SignVector, plane_constraints
from rumbounds.services.geometry import PatchGeometry
from rumbounds.services.oracle import BruteForceOracle


def _labels(patches):
    return [(p.home_budget, p.label) for p in patches]


def _patch(patches, home, label) -> Patch:
    return next(p for p in patches if p.home_budget == home and p.label == label)


class TestEnumeratePatches:
    """Test cases for PatchGeometry.enumerate_patches."""

    def test_two_crossing_budgets(self, geometry, two_budgets):
        """Test the crossing lines split into two segments each."""
        patches = geometry.enumerate_patches(two_budgets)

        assert _labels(patches) == [(0, "0-"), (0, "0+"), (1, "-0"), (1, "+0")]
        assert all(p.dimension == 1 for p in patches)

    def test_keep_null_patches(self, geometry):
        """Test the crossing point is listed under each budget when null patches are kept."""
        system = BudgetSystem(
            budgets=(Budget(id="b1", p=(1.0, 2.0)), Budget(id="b2", p=(2.0, 1.0))), keep_null_patches=True
        )

        patches = geometry.enumerate_patches(system)

        assert _labels(patches) == [(0, "0-"), (0, "00"), (0, "0+"), (1, "-0"), (1, "00"), (1, "+0")]
        assert _patch(patches, 0, "00").dimension == 0
        assert _patch(patches, 0, "00").interior_point == pytest.approx((1 / 3, 1 / 3))

    def test_single_budget(self, geometry):
        """Test one budget yields a single full patch."""
        system = BudgetSystem(budgets=(Budget(id="only", p=(1.0, 1.0, 1.0)),))

        patches = geometry.enumerate_patches(system)

        assert _labels(patches) == [(0, "0")]
        assert patches[0].dimension == 2

    def test_nested_budgets(self, geometry):
        """Test a budget strictly inside another yields one patch per budget."""
        system = BudgetSystem(budgets=(Budget(id="low", p=(2.0, 2.0)), Budget(id="high", p=(1.0, 1.0))))

        patches = geometry.enumerate_patches(system)

        assert _labels(patches) == [(0, "0-"), (1, "+0")]

    def test_augmented_counterfactual_block(self, geometry, augmented_system):
        """Test the counterfactual plane is cut into three segments, listed first."""
        patches = geometry.enumerate_patches(augmented_system)

        assert [p.label for p in patches if p.home_budget == 0] == ["0-+", "0+-", "0++"]
        assert [p.label for p in patches if p.home_budget == 1] == ["-0-", "-0+", "+0+"]
        assert [p.label for p in patches if p.home_budget == 2] == ["--0", "-+0", "++0"]

    def test_interior_points_carry_their_sign(self, geometry, augmented_system):
        """Test every interior point reclassifies to its own patch."""
        for patch in geometry.enumerate_patches(augmented_system):
            classified = geometry.classify_point(patch.interior_point, augmented_system)
            assert classified.sign == patch.sign

    def test_patch_order_ignores_budget_permutation(self, geometry):
        """Test permuting the observed budgets permutes the patch sets and nothing more."""
        b = [Budget(id="a", p=(1.0, 2.0, 1.0)), Budget(id="b", p=(2.0, 1.0, 1.0)), Budget(id="c", p=(1.0, 1.0, 2.0))]
        forward = geometry.enumerate_patches(BudgetSystem(budgets=(b[0], b[1], b[2])))
        backward = geometry.enumerate_patches(BudgetSystem(budgets=(b[2], b[1], b[0])))

        forward_sets = {(["a", "b", "c"][p.home_budget], p.label) for p in forward}
        backward_sets = {(["c", "b", "a"][p.home_budget], p.label[::-1]) for p in backward}
        assert forward_sets == backward_sets

    def test_random_arrangements_pass_the_cover_check(self, geometry, random_system):
        """Test sampled points only ever land in enumerated patches."""
        rng = np.random.default_rng(11)
        oracle = BruteForceOracle()
        for _ in range(4):
            system = random_system(rng, goods=3, n_budgets=3)
            patches = geometry.enumerate_patches(system)
            report = oracle.sample_patch_cover(system, patches, 400, seed=3)
            assert not any(cover.extraneous for cover in report.budgets)


class TestClassifyPoint:
    """Test cases for PatchGeometry.classify_point."""

    def test_on_one_budget(self, geometry, two_budgets):
        """Test (1, 0) lies on b1 and above b2."""
        classified = geometry.classify_point((1.0, 0.0), two_budgets)

        assert str(classified.sign) == "0+"
        assert classified.homes == (0,)

    def test_crossing_point(self, geometry, two_budgets):
        """Test the crossing point lies on both budgets."""
        classified = geometry.classify_point((1 / 3, 1 / 3), two_budgets)

        assert str(classified.sign) == "00"
        assert classified.homes == (0, 1)

    def test_off_every_budget(self, geometry, two_budgets):
        """Test (1, 1) raises NotOnAnyBudget."""
        with pytest.raises(NotOnAnyBudget):
            geometry.classify_point((1.0, 1.0), two_budgets)

    def test_wrong_length(self, geometry, two_budgets):
        """Test a bundle of the wrong dimension is rejected."""
        with pytest.raises(InputError, match="goods"):
            geometry.classify_point((1.0, 0.0, 0.0), two_budgets)

    def test_negative_quantity(self, geometry, two_budgets):
        """Test negative quantities are rejected."""
        with pytest.raises(InputError, match="negative"):
            geometry.classify_point((1.5, -0.25), two_budgets)

    def test_tolerance(self, geometry):
        """Test a gap within τ counts as on the plane."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 1.0)),), tolerance=1e-6)

        assert str(geometry.classify_point((0.5, 0.5 + 1e-7), system).sign) == "0"


class TestExtremizeLinear:
    """Test cases for PatchGeometry.extremize_linear."""

    @pytest.fixture
    def lower_segment(self, geometry, two_budgets):
        """Patch (0,−) of b1: from (0, 1/2) to the crossing point, crossing excluded."""
        return _patch(geometry.enumerate_patches(two_budgets), 0, "0-")

    def test_open_endpoint(self, geometry, lower_segment):
        """Test inf 0 is attained and sup 1/3 is not."""
        result = geometry.extremize_linear((1.0, 0.0), lower_segment)

        assert result.inf_value == pytest.approx(0.0, abs=1e-12)
        assert result.sup_value == pytest.approx(1 / 3)
        assert result.inf_attained
        assert not result.sup_attained
        assert result.inf_witness == pytest.approx((0.0, 0.5), abs=1e-9)
        assert result.sup_witness == pytest.approx((1 / 3, 1 / 3))

    def test_constant_functional(self, geometry, lower_segment):
        """Test z = p gives the constant 1, attained on both sides."""
        result = geometry.extremize_linear((1.0, 2.0), lower_segment)

        assert result.inf_value == pytest.approx(1.0)
        assert result.sup_value == pytest.approx(1.0)
        assert result.inf_attained and result.sup_attained

    def test_points_of_the_patch_lie_between_the_extrema(self, geometry, random_system):
        """Test z·w stays within [inf, sup] for mixtures w of closure vertices."""
        rng = np.random.default_rng(31)
        for _ in range(3):
            system = random_system(rng, goods=3, n_budgets=3)
            for patch in geometry.enumerate_patches(system):
                z = rng.normal(size=3)
                result = geometry.extremize_linear(z, patch)
                vertices = np.array(PatchGeometry.closure_vertices(patch))

                for w in rng.dirichlet(np.ones(len(vertices)), size=20) @ vertices:
                    assert result.inf_value - 1e-7 <= float(z @ w) <= result.sup_value + 1e-7
                assert float(z @ np.asarray(result.inf_witness)) == pytest.approx(result.inf_value, abs=1e-7)
                assert float(z @ np.asarray(result.sup_witness)) == pytest.approx(result.sup_value, abs=1e-7)

    def test_axis_permutation(self, geometry, random_system):
        """Test permuting the goods permutes the witnesses and keeps the values."""
        rng = np.random.default_rng(32)
        order = [2, 0, 1]
        for _ in range(3):
            system = random_system(rng, goods=3, n_budgets=3)
            permuted = BudgetSystem(
                budgets=tuple(Budget(id=b.id, p=tuple(b.p[k] for k in order)) for b in system.budgets)
            )
            z = rng.normal(size=3)

            for patch, moved in zip(
                geometry.enumerate_patches(system), geometry.enumerate_patches(permuted), strict=True
            ):
                assert (moved.home_budget, moved.label) == (patch.home_budget, patch.label)
                result = geometry.extremize_linear(z, patch)
                shifted = geometry.extremize_linear(z[order], moved)

                assert shifted.inf_value == pytest.approx(result.inf_value, abs=1e-7)
                assert shifted.sup_value == pytest.approx(result.sup_value, abs=1e-7)
                assert (shifted.inf_attained, shifted.sup_attained) == (result.inf_attained, result.sup_attained)
                assert shifted.inf_witness == pytest.approx(tuple(np.asarray(result.inf_witness)[order]), abs=1e-6)
                assert shifted.sup_witness == pytest.approx(tuple(np.asarray(result.sup_witness)[order]), abs=1e-6)

    def test_wrong_length(self, geometry, lower_segment):
        """Test a functional of the wrong length is rejected."""
        with pytest.raises(InputError, match="coefficients"):
            geometry.extremize_linear((1.0,), lower_segment)


class TestHyperplaneMeetsPatch:
    """Test cases for PatchGeometry.hyperplane_meets_patch."""

    def test_excluded_endpoint(self, geometry, two_budgets):
        """Test x = 1/3 touches only the excluded crossing point of (0,−)."""
        patch = _patch(geometry.enumerate_patches(two_budgets), 0, "0-")

        assert not geometry.hyperplane_meets_patch(patch, (1.0, 0.0), 1 / 3)
        assert geometry.hyperplane_meets_patch(patch, (1.0, 0.0), 0.2)

    def test_whole_budget(self, geometry):
        """Test a lone budget p = (1, 1) meets x = 0.5 but not x = 2."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 1.0)),))
        patch = geometry.enumerate_patches(system)[0]

        assert geometry.hyperplane_meets_patch(patch, (1.0, 0.0), 0.5)
        assert not geometry.hyperplane_meets_patch(patch, (1.0, 0.0), 2.0)


class TestClosureVertices:
    """Test cases for PatchGeometry.closure_vertices."""

    def test_segment_endpoints(self, geometry, two_budgets):
        """Test the closure of (0,−) runs from (0, 1/2) to the crossing point."""
        patch = _patch(geometry.enumerate_patches(two_budgets), 0, "0-")

        vertices = geometry.closure_vertices(patch)

        assert len(vertices) == 2
        assert vertices[0] == pytest.approx((0.0, 0.5))
        assert vertices[1] == pytest.approx((1 / 3, 1 / 3))

    def test_simplex(self, geometry):
        """Test a lone budget in three goods has the three axis intercepts as vertices."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 2.0, 4.0)),))
        patch = geometry.enumerate_patches(system)[0]

        assert geometry.closure_vertices(patch) == [(0.0, 0.0, 0.25), (0.0, 0.5, 0.0), (1.0, 0.0, 0.0)]

    def test_high_dimension_rejected(self):
        """Test vertex listing is limited to three goods."""
        system = BudgetSystem(budgets=(Budget(id="b", p=(1.0, 1.0, 1.0, 1.0)),))
        sign = SignVector(signs=(Sign.ON,))
        patch = Patch(home_budget=0, sign=sign, dimension=3, closure=plane_constraints(system, sign))

        with pytest.raises(InputError, match="K ≤ 3"):
            PatchGeometry.closure_vertices(patch)


class TestVectorRepresentation:
    """Test cases for build_vector_representation on enumerated patches."""

    def test_blocks(self, geometry, two_budgets):
        """Test rows are grouped by budget with offsets and labels."""
        rep = build_vector_representation(geometry.enumerate_patches(two_budgets), two_budgets)

        assert rep.offsets == (0, 2)
        assert rep.block_sizes == (2, 2)
        assert rep.row_labels() == ["b1:0-", "b1:0+", "b2:-0", "b2:+0"]
        assert rep.index_in_block(1, "+0") == 1
