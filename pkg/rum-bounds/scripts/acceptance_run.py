#!/usr/bin/env python3
"""Acceptance run at full scale.

Checks type enumeration, the rationalizability test and the counterfactual
bounds against the brute-force oracle on seeded random systems, plus the
worked example and the trivial limits. The unit tests run the same checks
on a handful of instances; this script runs all of them and prints a report.

Usage:
    python scripts/acceptance_run.py
    OR
    uv run python scripts/acceptance_run.py
"""

import itertools
import logging
import sys
import time
from pathlib import Path

import numpy as np

# Add the package directory to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from rumbounds.models.representation import AugmentedSystem, DemandProbabilities, build_vector_representation
from rumbounds.models.results import BoundResult
from rumbounds.models.system import Budget, BudgetSystem
from rumbounds.services.bounds import CounterfactualBounds, EventSpec
from rumbounds.services.geometry import PatchGeometry
from rumbounds.services.lp import LpSolver, Sense, SolverConfig
from rumbounds.services.oracle import BruteForceOracle
from rumbounds.services.rational import PatchAssignment, TypeEnumerator

TOL = 1e-7

solver = LpSolver(SolverConfig(verify=True))
geometry = PatchGeometry(solver)
enumerator = TypeEnumerator(geometry, max_types=1_000_000)
bounds = CounterfactualBounds(solver, geometry)
oracle = BruteForceOracle(max_columns=20, max_combinations=10_000_000)


def random_system(rng: np.random.Generator, goods: int, n_budgets: int, counterfactual: bool = False) -> BudgetSystem:
    """Prices on the {0.5, 1, …, 3} grid, resampled until no two budgets coincide."""
    grid = np.arange(1, 7) * 0.5
    while True:
        prices = rng.choice(grid, size=(n_budgets + int(counterfactual), goods))
        if len({tuple(row) for row in prices}) == len(prices):
            break
    budgets = [Budget(id=f"b{j + 1}", p=tuple(float(v) for v in row)) for j, row in enumerate(prices[:n_budgets])]
    cf = Budget(id="b0", p=tuple(float(v) for v in prices[-1])) if counterfactual else None
    return BudgetSystem(budgets=tuple(budgets), counterfactual=cf)


def enumeration_instances(count: int = 100) -> list[BudgetSystem]:
    rng = np.random.default_rng(1)
    shapes = list(itertools.product((2, 3), (2, 3, 4)))
    return [random_system(rng, *shapes[i % len(shapes)]) for i in range(count)]


def bound_instances(count: int, seed: int) -> list[tuple[AugmentedSystem, DemandProbabilities]]:
    """Augmented systems with H* ≤ 20 and observed demand drawn from a random mixture of types."""
    rng = np.random.default_rng(seed)
    instances = []
    while len(instances) < count:
        system = random_system(rng, int(rng.choice([2, 3])), int(rng.choice([1, 2, 3])), counterfactual=True)
        aug = enumerator.build_augmented(system)
        if aug.matrix.n_columns > 20:
            continue
        nu = rng.dirichlet(np.ones(aug.matrix.n_columns))
        pi1 = DemandProbabilities(values=tuple(float(v) for v in aug.observed_block @ nu))
        instances.append((aug, pi1))
    return instances


def matches(result: BoundResult, lower: float, upper: float) -> bool:
    return result.ok and abs(result.lower - lower) <= TOL and abs(result.upper - upper) <= TOL


def check_enumeration() -> bool:
    """Type enumeration equals the exhaustive search on every instance."""
    print("🔧 Criterion 1: Type enumeration vs brute force")
    print("=" * 50)
    start_time = time.time()

    failures = 0
    systems = enumeration_instances()
    for i, system in enumerate(systems):
        rep = build_vector_representation(geometry.enumerate_patches(system), system)
        if enumerator.enumerate_types(rep).selections != oracle.brute_force_types(rep).selections:
            print(f"❌ Instance {i}: column sets differ ({[b.p for b in system.budgets]})")
            failures += 1

    duration = time.time() - start_time
    status = "✅" if not failures else "❌"
    print(f"{status} {len(systems) - failures}/{len(systems)} instances agree in {duration:.2f}s")
    return failures == 0


def check_round_trip() -> bool:
    """Mixtures of types are accepted; a cyclic pattern is rejected."""
    print("\n🔁 Criterion 2: Rationalizability round trip")
    print("=" * 50)
    start_time = time.time()

    rng = np.random.default_rng(2)
    accepted = rejected = checked_rejections = 0
    systems = enumeration_instances()
    for i, system in enumerate(systems):
        rep = build_vector_representation(geometry.enumerate_patches(system), system)
        matrix = enumerator.enumerate_types(rep)
        nu = rng.dirichlet(np.ones(matrix.n_columns))
        pi = DemandProbabilities(values=tuple(float(v) for v in matrix.array @ nu))
        verdict = bounds.test_rationalizable(matrix, pi)
        if verdict.rationalizable and bounds.l1_residual(matrix, pi) <= TOL:
            accepted += 1
        else:
            print(f"❌ Instance {i}: a mixture of rational types was rejected")

        cyclic = next(
            (
                chosen
                for chosen in itertools.product(*(range(size) for size in rep.block_sizes))
                if not enumerator.is_rational(PatchAssignment(chosen=chosen), rep)
            ),
            None,
        )
        if cyclic is None:
            continue
        # a 0/1 demand vector is a mixture only if it is itself a column
        checked_rejections += 1
        if cyclic in oracle.brute_force_types(rep).selections:
            print(f"❌ Instance {i}: the oracle accepts the cyclic pattern {cyclic}")
            continue
        indicator = np.zeros(len(rep))
        for block, k in enumerate(cyclic):
            indicator[rep.offsets[block] + k] = 1.0
        if not bounds.test_rationalizable(matrix, DemandProbabilities(values=tuple(indicator))).rationalizable:
            rejected += 1
        else:
            print(f"❌ Instance {i}: the cyclic pattern {cyclic} was accepted")

    duration = time.time() - start_time
    ok = accepted == len(systems) and rejected == checked_rejections
    print(f"{'✅' if ok else '❌'} Accepted {accepted}/{len(systems)} mixtures in {duration:.2f}s")
    print(f"   Rejected {rejected}/{checked_rejections} cyclic patterns")
    return ok


def check_sharpness_and_attainability() -> bool:
    """Event, mean and c.d.f. bounds match vertex enumeration; midpoints are certified."""
    print("\n📊 Criteria 3, 5 and 7: Sharpness, midpoint certificates and c.d.f. sanity")
    print("=" * 50)
    start_time = time.time()

    rng = np.random.default_rng(3)
    compared = certified = needing_certificate = envelopes = 0
    failures = 0
    for i, (aug, pi1) in enumerate(bound_instances(50, seed=3)):
        n0 = aug.n_counterfactual
        checks: list[tuple[str, BoundResult, np.ndarray, np.ndarray]] = []

        events = [(k,) for k in range(n0)]
        if n0 > 1:
            events.append(tuple(sorted(rng.choice(n0, size=2, replace=False).tolist())))
        for patches in events:
            g = np.zeros(n0)
            g[list(patches)] = 1.0
            result = bounds.counterfactual_event_bounds(aug, pi1, EventSpec.union(patches))
            checks.append((f"event {list(patches)}", result, g, g))

        z = tuple(float(v) for v in rng.uniform(0.0, 1.0, size=aug.system.dimension))
        extrema = bounds.patch_extrema(aug, z)
        g_lo = np.asarray([e.inf_value for e in extrema])
        g_hi = np.asarray([e.sup_value for e in extrema])
        checks.append(("mean", bounds.counterfactual_mean_bounds(aug, pi1, z), g_lo, g_hi))

        grid = tuple(np.linspace(g_lo.min() - 0.1, g_hi.max() + 0.1, 7).tolist())
        envelope = bounds.counterfactual_cdf_bounds(aug, pi1, z, grid)
        for t, lo, hi in zip(grid, envelope.lower, envelope.upper, strict=True):
            event = bounds.halfspace_event(aug, z, t)
            inner = np.zeros(n0)
            inner[list(event.inner)] = 1.0
            outer = np.zeros(n0)
            outer[list(event.outer)] = 1.0
            checks.append((f"cdf t={t:.4f}", BoundResult(lower=lo, upper=hi), inner, outer))

        for name, result, lo_coef, hi_coef in checks:
            compared += 1
            lower = oracle.vertex_enumerate_bounds(aug, pi1, lo_coef, Sense.MIN)
            upper = oracle.vertex_enumerate_bounds(aug, pi1, hi_coef, Sense.MAX)
            if not matches(result, lower, upper):
                print(f"❌ Instance {i} {name}: [{result.lower}, {result.upper}] vs oracle [{lower}, {upper}]")
                failures += 1
            if name.startswith("cdf") or result.width <= 1e-6:
                continue
            needing_certificate += 1
            midpoint = (result.lower + result.upper) / 2
            if bounds.certify_value(aug, pi1, lo_coef, hi_coef, midpoint) is not None:
                certified += 1
            else:
                print(f"❌ Instance {i} {name}: midpoint {midpoint} has no certificate")
                failures += 1

        envelopes += 1
        lower, upper = np.asarray(envelope.lower), np.asarray(envelope.upper)
        sane = (
            np.all((lower >= -TOL) & (upper <= 1 + TOL))
            and np.all(np.diff(lower) >= -TOL)
            and np.all(np.diff(upper) >= -TOL)
            and np.all(lower <= upper + TOL)
            and abs(upper[0]) <= TOL
            and abs(lower[-1] - 1.0) <= TOL
        )
        if not sane:
            print(f"❌ Instance {i}: c.d.f. envelope fails the sanity checks")
            failures += 1

    duration = time.time() - start_time
    print(f"{'✅' if not failures else '❌'} {compared} bounds compared with the oracle in {duration:.2f}s")
    print(f"   Midpoints certified: {certified}/{needing_certificate}")
    print(f"   C.d.f. envelopes checked: {envelopes}")
    return failures == 0


def check_worked_example() -> bool:
    """The two-budget example reproduces its patches, verdicts and bounds on repeated runs."""
    print("\n📐 Criterion 4: Worked example regression")
    print("=" * 50)

    b1, b2, b0 = Budget(id="b1", p=(1.0, 2.0)), Budget(id="b2", p=(2.0, 1.0)), Budget(id="b0", p=(1.2, 1.2))
    runs = []
    for _ in range(2):
        observed = BudgetSystem(budgets=(b1, b2))
        rep = build_vector_representation(geometry.enumerate_patches(observed), observed)
        matrix = enumerator.enumerate_types(rep)
        good = bounds.test_rationalizable(matrix, DemandProbabilities(values=(0.5, 0.5, 0.3, 0.7)))
        bad = bounds.test_rationalizable(matrix, DemandProbabilities(values=(0.6, 0.4, 0.5, 0.5)))
        aug = enumerator.build_augmented(BudgetSystem(budgets=(b1, b2), counterfactual=b0))
        event = bounds.counterfactual_event_bounds(
            aug, DemandProbabilities(values=(0.5, 0.3, 0.2, 0.3, 0.4, 0.3)), EventSpec.union((2,))
        )
        runs.append((rep.block_sizes, aug.representation.block_sizes, matrix.n_columns, good, bad, event))

    blocks, augmented_blocks, h, good, bad, event = runs[0]
    ok = (
        augmented_blocks == (3, 3, 3)
        and blocks == (2, 2)
        and h == 3
        and good.rationalizable
        and np.allclose(good.witness, (0.5, 0.3, 0.2), atol=TOL)
        and not bad.rationalizable
        and matches(event, 0.5, 1.0)
    )
    print(f"{'✅' if ok else '❌'} Patches per augmented budget: {augmented_blocks}, H={h}")
    print(f"   π=(0.5,0.5,0.3,0.7): rationalizable={good.rationalizable}, ν={good.witness}")
    print(f"   π=(0.6,0.4,0.5,0.5): rationalizable={bad.rationalizable}, l1 residual={bad.l1_residual:.6g}")
    print(f"   Pr(middle patch) ∈ [{event.lower:.6g}, {event.upper:.6g}]")
    identical = runs[0] == runs[1]
    print(f"{'✅' if identical else '❌'} Repeated runs identical: {identical}")
    return ok and identical


def check_monotonicity() -> bool:
    """Dropping an observed budget widens the mean and c.d.f. intervals."""
    print("\n🔍 Criterion 6: Information monotonicity")
    print("=" * 50)
    start_time = time.time()

    rng = np.random.default_rng(6)
    compared = failures = 0
    instances = bound_instances(50, seed=6)
    for i, (aug, pi1) in enumerate(instances):
        dropped = aug.system.budgets[int(rng.integers(len(aug.system.budgets)))]
        reduced = enumerator.build_augmented(aug.system.without_budget(dropped.id))
        reduced_pi1 = marginal_demand(aug, pi1, reduced, aug.system.position_of(dropped.id))

        z = tuple(float(v) for v in rng.uniform(0.0, 1.0, size=aug.system.dimension))
        pairs = [
            (bounds.counterfactual_mean_bounds(aug, pi1, z), bounds.counterfactual_mean_bounds(reduced, reduced_pi1, z))
        ]
        grid = (0.25, 0.5, 0.75)
        full = bounds.counterfactual_cdf_bounds(aug, pi1, z, grid)
        coarse = bounds.counterfactual_cdf_bounds(reduced, reduced_pi1, z, grid)
        pairs.extend(
            (BoundResult(lower=a, upper=b), BoundResult(lower=c, upper=d))
            for a, b, c, d in zip(full.lower, full.upper, coarse.lower, coarse.upper, strict=True)
        )
        for inner, outer in pairs:
            compared += 1
            if not outer.contains(inner, tolerance=1e-9):
                print(f"❌ Instance {i}: [{outer.lower}, {outer.upper}] misses [{inner.lower}, {inner.upper}]")
                failures += 1

    duration = time.time() - start_time
    print(f"{'✅' if not failures else '❌'} {compared - failures}/{compared} intervals contained in {duration:.2f}s")
    return failures == 0


def marginal_demand(
    aug: AugmentedSystem, pi1: DemandProbabilities, reduced: AugmentedSystem, position: int
) -> DemandProbabilities:
    """Observed demand on the reduced system implied by the same population.

    Full-dimensional patches of the full system lie inside the reduced patch
    obtained by deleting the dropped budget's sign.
    """
    reduced_rows = {label: r for r, label in enumerate(reduced.observed_representation.row_labels())}
    values = np.zeros(len(reduced_rows))
    for label, mass in zip(aug.observed_representation.row_labels(), pi1.values, strict=True):
        budget_id, sign = label.split(":")
        if budget_id == aug.system.planes[position].id:
            continue
        values[reduced_rows[f"{budget_id}:{sign[:position]}{sign[position + 1 :]}"]] += mass
    return DemandProbabilities(values=tuple(float(v) for v in values))


def check_trivial_limits() -> bool:
    """With no observed budgets the bounds are the extremes over B_0; z = p_0 pins the mean to one."""
    print("\n🧮 Criterion 8: Trivial limits")
    print("=" * 50)

    empty = DemandProbabilities(values=())
    failures = 0
    rng = np.random.default_rng(8)
    for goods in (2, 3, 4):
        p0 = tuple(float(v) for v in rng.choice(np.arange(1, 7) * 0.5, size=goods))
        bare = enumerator.build_augmented(BudgetSystem(counterfactual=Budget(id="b0", p=p0)))
        for k in range(goods):
            z = tuple(1.0 if i == k else 0.0 for i in range(goods))
            if not matches(bounds.counterfactual_mean_bounds(bare, empty, z), 0.0, 1.0 / p0[k]):
                print(f"❌ K={goods}: mean of good {k + 1} is not [0, 1/p0_{k + 1}]")
                failures += 1
        if not matches(bounds.counterfactual_event_bounds(bare, empty, EventSpec.union((0,))), 1.0, 1.0):
            print(f"❌ K={goods}: the whole budget does not have probability one")
            failures += 1
        if not matches(bounds.counterfactual_mean_bounds(bare, empty, p0), 1.0, 1.0):
            print(f"❌ K={goods}: expenditure is not pinned to one")
            failures += 1

    for aug, pi1 in bound_instances(20, seed=8):
        p0 = aug.system.counterfactual.p
        if not matches(bounds.counterfactual_mean_bounds(aug, pi1, p0), 1.0, 1.0):
            print(f"❌ Expenditure at p0={p0} is not pinned to one")
            failures += 1

    print(f"{'✅' if not failures else '❌'} Trivial limits: {failures} failures")
    return failures == 0


def check_patch_cover() -> bool:
    """Sampling each plane finds exactly the enumerated sign vectors."""
    print("\n🗺️  Criterion 9: Patch coverage by sampling")
    print("=" * 50)
    start_time = time.time()

    failures = 0
    systems = enumeration_instances()
    for i, system in enumerate(systems):
        report = oracle.sample_patch_cover(system, geometry.enumerate_patches(system), 10_000, seed=i)
        if not report.clean:
            print(f"❌ Instance {i}: {[(b.budget_id, b.missing, b.extraneous) for b in report.budgets]}")
            failures += 1

    duration = time.time() - start_time
    status = "✅" if not failures else "❌"
    print(f"{status} {len(systems) - failures}/{len(systems)} covers clean in {duration:.2f}s")
    return failures == 0


def main():
    """Run every acceptance suite."""
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    print("🧪 ACCEPTANCE RUN - Oracle and property checks")
    print("=" * 60)
    print("Every suite is seeded; repeated runs print the same report.")
    print()

    start_total = time.time()

    results = []

    try:
        results.append(check_enumeration())
        results.append(check_round_trip())
        results.append(check_sharpness_and_attainability())
        results.append(check_worked_example())
        results.append(check_monotonicity())
        results.append(check_trivial_limits())
        results.append(check_patch_cover())
    except KeyboardInterrupt:
        print("\n⚠️  Run interrupted by user")
        return 1

    total_duration = time.time() - start_total

    # Summary
    print("\n" + "=" * 60)
    print("📊 ACCEPTANCE SUMMARY")
    print("=" * 60)

    passed = sum(results)
    total = len(results)

    print(f"✅ Passed: {passed}/{total} suites")
    print(f"⏱️  Total time: {total_duration:.2f} seconds")

    if all(results):
        print("🎉 All acceptance checks passed!")
        return 0
    print("⚠️  Some checks failed. See the report above.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
