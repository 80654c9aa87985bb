"""Shared fixtures: the two-budget worked example, its augmented version and configured services."""

import json

import numpy as np
import pytest

from rumbounds.models.representation import DemandProbabilities, build_vector_representation
from rumbounds.models.system import Budget, BudgetSystem
from rumbounds.services.bounds import CounterfactualBounds
from rumbounds.services.geometry import PatchGeometry
from rumbounds.services.lp import LpSolver, SolverConfig
from rumbounds.services.oracle import BruteForceOracle
from rumbounds.services.rational import TypeEnumerator

B1 = Budget(id="b1", p=(1.0, 2.0))
B2 = Budget(id="b2", p=(2.0, 1.0))
B0 = Budget(id="b0", p=(1.2, 1.2))

# Refined observed demand over b1 ("-0-", "-0+", "+0+") and b2 ("--0", "-+0", "++0").
REFINED_PI = (0.5, 0.3, 0.2, 0.3, 0.4, 0.3)


@pytest.fixture(autouse=True)
def verify_solutions(monkeypatch):
    """Check every optimal LP outcome against its constraints."""
    monkeypatch.setenv("RUMBOUNDS_VERIFY_SOLUTIONS", "true")


@pytest.fixture
def solver():
    return LpSolver(SolverConfig(verify=True))


@pytest.fixture
def geometry(solver):
    return PatchGeometry(solver)


@pytest.fixture
def enumerator(geometry):
    return TypeEnumerator(geometry, max_types=1_000_000)


@pytest.fixture
def bounds(solver, geometry):
    return CounterfactualBounds(solver, geometry)


@pytest.fixture
def oracle():
    return BruteForceOracle(max_columns=20, max_combinations=10_000_000)


@pytest.fixture
def two_budgets():
    """p₁=(1,2), p₂=(2,1): the budgets cross at (1/3, 1/3)."""
    return BudgetSystem(budgets=(B1, B2))


@pytest.fixture
def augmented_system():
    """The two budgets plus the counterfactual p₀=(1.2, 1.2)."""
    return BudgetSystem(budgets=(B1, B2), counterfactual=B0)


@pytest.fixture
def two_budget_rep(geometry, two_budgets):
    return build_vector_representation(geometry.enumerate_patches(two_budgets), two_budgets)


@pytest.fixture
def augmented(enumerator, augmented_system):
    return enumerator.build_augmented(augmented_system)


@pytest.fixture
def refined_pi():
    return DemandProbabilities(values=REFINED_PI)


def _random_system(rng: np.random.Generator, goods: int, n_budgets: int, counterfactual: bool = False) -> BudgetSystem:
    grid = np.arange(1, 7) * 0.5
    while True:
        prices = rng.choice(grid, size=(n_budgets + int(counterfactual), goods))
        if len({tuple(row) for row in prices}) == len(prices):
            break
    budgets = [Budget(id=f"b{j + 1}", p=tuple(float(v) for v in row)) for j, row in enumerate(prices[:n_budgets])]
    cf = Budget(id="b0", p=tuple(float(v) for v in prices[-1])) if counterfactual else None
    return BudgetSystem(budgets=tuple(budgets), counterfactual=cf)


@pytest.fixture
def random_system():
    """Factory for systems with prices on the {0.5, 1, …, 3} grid, no two budgets identical."""
    return _random_system


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path as a string."""

    def write(name: str, data: dict | list) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return write
