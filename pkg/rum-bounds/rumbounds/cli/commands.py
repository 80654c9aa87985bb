"""Command handlers behind the ``rumbounds`` subcommands."""

import argparse
import logging
import time
from dataclasses import dataclass

import pandas as pd

from rumbounds.cli.output import CommandResult, write_tsv
from rumbounds.config import get_settings
from rumbounds.errors import (
    EXIT_INFEASIBLE_OBSERVABLES,
    EXIT_NOT_RATIONALIZABLE,
    EXIT_OK,
    InputError,
    NotOnAnyBudget,
)
from rumbounds.models.files import ObservationsFile, PiFile, SystemFile, TieEntry, read_vector_file
from rumbounds.models.representation import (
    AugmentedSystem,
    DemandProbabilities,
    RationalMatrix,
    VectorRepresentation,
    build_vector_representation,
)
from rumbounds.models.results import BoundResult, BoundStatus
from rumbounds.models.system import BudgetSystem
from rumbounds.services.bounds import CounterfactualBounds, EventSpec, expenditure_share_vector
from rumbounds.services.geometry import PatchGeometry
from rumbounds.services.lp import Arithmetic, LpSolver, Sense, SolverConfig
from rumbounds.services.oracle import BruteForceOracle
from rumbounds.services.rational import TypeEnumerator

logger = logging.getLogger(__name__)

# Decision quantities this close to a threshold prompt a suggestion to rerun with --exact.
NEAR_THRESHOLD_FACTOR = 10.0


@dataclass
class Context:
    """Services configured from flags, the system file's options and the settings, in that order."""

    system: BudgetSystem
    solver: LpSolver
    geometry: PatchGeometry
    enumerator: TypeEnumerator
    bounds: CounterfactualBounds

    @property
    def lp_tolerance(self) -> float:
        return self.solver.config.tolerance


def build_context(args: argparse.Namespace) -> Context:
    settings = get_settings()
    system_file = SystemFile.load(args.system)
    options = system_file.options

    tolerance = args.tolerance or options.tolerance or settings.tolerance
    keep_null = args.keep_null_patches or (
        options.keep_null_patches if options.keep_null_patches is not None else settings.keep_null_patches
    )
    system = system_file.to_system(tolerance=tolerance, keep_null_patches=keep_null)

    arithmetic = "exact" if args.exact else (options.arithmetic or settings.arithmetic)
    max_types = args.max_types or options.max_types or settings.max_types
    config = SolverConfig(
        tolerance=settings.lp_tolerance,
        arithmetic=Arithmetic(arithmetic),
        max_iterations=settings.max_iterations,
        verify=settings.verify_solutions,
    )
    solver = LpSolver(config)
    geometry = PatchGeometry(solver)
    logger.info(
        f"🔧 System: {len(system.budgets)} observed budgets, counterfactual={system.is_augmented}, "
        f"K={system.dimension}, τ={system.tolerance}, arithmetic={arithmetic}"
    )
    return Context(
        system=system,
        solver=solver,
        geometry=geometry,
        enumerator=TypeEnumerator(geometry, max_types=max_types),
        bounds=CounterfactualBounds(solver, geometry),
    )


def _observed_system(ctx: Context) -> BudgetSystem:
    if not ctx.system.budgets:
        raise InputError("the system has no observed budgets")
    return ctx.system.observed() if ctx.system.is_augmented else ctx.system


def _require_counterfactual(ctx: Context) -> None:
    if not ctx.system.is_augmented:
        raise InputError("this command needs a counterfactual budget in the system file")


def _column_labels(matrix: RationalMatrix) -> list[list[str]]:
    rep = matrix.rows
    return [[rep.entries[r].label for r in matrix.column_rows(h)] for h in range(matrix.n_columns)]


# ----------------------------------------------------------------------
# patches
# ----------------------------------------------------------------------


def cmd_patches(args: argparse.Namespace) -> CommandResult:
    """List every patch with its home budget, sign string, dimension and (K ≤ 3) closure vertices."""
    ctx = build_context(args)
    patches = ctx.geometry.enumerate_patches(ctx.system)
    rep = build_vector_representation(patches, ctx.system)
    rows = []
    for label, patch in zip(rep.row_labels(), rep.entries, strict=True):
        entry = {
            "id": label,
            "budget": ctx.system.planes[patch.home_budget].id,
            "sign": patch.label,
            "dimension": patch.dimension,
        }
        if ctx.system.dimension <= 3:
            entry["vertices"] = [list(v) for v in ctx.geometry.closure_vertices(patch, ctx.system.tolerance)]
        rows.append(entry)
    return CommandResult(
        payload={
            "K": ctx.system.dimension,
            "budget_order": [b.id for b in ctx.system.planes],
            "n_patches": len(rows),
            "patches": rows,
        }
    )


# ----------------------------------------------------------------------
# matrix
# ----------------------------------------------------------------------


def cmd_matrix(args: argparse.Namespace) -> CommandResult:
    """Dump A (or A* with its row split) in sparse triplet form."""
    ctx = build_context(args)
    if ctx.system.is_augmented:
        aug = ctx.enumerator.build_augmented(ctx.system)
        matrix = aug.matrix
    else:
        aug = None
        rep = build_vector_representation(ctx.geometry.enumerate_patches(ctx.system), ctx.system)
        matrix = ctx.enumerator.enumerate_types(rep)

    labels = matrix.rows.row_labels()
    payload = {
        "augmented": aug is not None,
        "rows": labels,
        "n_columns": matrix.n_columns,
        "columns": _column_labels(matrix),
        "entries": [[r, h, 1] for h in range(matrix.n_columns) for r in matrix.column_rows(h)],
    }
    if aug is not None:
        payload["rows_0"] = [labels[r] for r in aug.rows_0]
        payload["rows_1"] = [labels[r] for r in aug.rows_1]
        if aug.original is not None:
            payload["refinement_map"] = {
                original: [labels[r] for r in children]
                for original, children in zip(aug.original.row_labels(), aug.refinement_map, strict=True)
            }
    return CommandResult(payload=payload)


# ----------------------------------------------------------------------
# ingest
# ----------------------------------------------------------------------


def _observed_representation(ctx: Context) -> VectorRepresentation:
    """Patches of the observed budgets, refined by the counterfactual when one is present."""
    if ctx.system.is_augmented:
        if not ctx.system.budgets:
            raise InputError("the system has no observed budgets")
        rep = build_vector_representation(ctx.geometry.enumerate_patches(ctx.system), ctx.system)
        return rep.subset(range(1, rep.n_blocks))
    system = _observed_system(ctx)
    return build_vector_representation(ctx.geometry.enumerate_patches(system), system)


def cmd_ingest(args: argparse.Namespace) -> CommandResult:
    """Empirical choice frequencies per (refined) patch from raw observed bundles."""
    ctx = build_context(args)
    observations = ObservationsFile.read_csv(args.observations, ctx.system.dimension)
    rep = _observed_representation(ctx)
    counts = [0] * len(rep)
    ties: list[TieEntry] = []

    for obs in observations.observations:
        try:
            block = rep.budget_ids.index(obs.budget_id)
        except ValueError:
            raise InputError(f"line {obs.line}: unknown observed budget {obs.budget_id!r}") from None
        home = rep.homes[block]
        try:
            classified = PatchGeometry.classify_point(obs.y, ctx.system)
        except NotOnAnyBudget:
            raise InputError(f"line {obs.line}: bundle {obs.y} lies on no budget plane") from None
        if home not in classified.homes:
            raise InputError(f"line {obs.line}: bundle {obs.y} does not lie on its budget {obs.budget_id}")
        label = str(classified.sign)
        try:
            index = rep.index_in_block(block, label)
        except KeyError:
            index = None
        if len(classified.homes) > 1 or index is None:
            logger.warning(f"⚠️  line {obs.line}: bundle {obs.y} sits on a second budget plane ({label})")
            ties.append(TieEntry(line=obs.line, budget_id=obs.budget_id, y=obs.y, sign=label))
        if index is not None:
            counts[rep.offsets[block] + index] += 1

    values, per_budget = [], []
    for b, budget_id in enumerate(rep.budget_ids):
        block_counts = [counts[r] for r in rep.block_rows(b)]
        total = sum(block_counts)
        if total == 0:
            raise InputError(f"budget {budget_id} has no usable observations")
        per_budget.append(total)
        values.extend(c / total for c in block_counts)

    pi = DemandProbabilities(values=tuple(values), source="empirical", counts=tuple(per_budget))
    logger.info(f"✅ Ingested {sum(per_budget)} observations, {len(ties)} ties flagged")
    return CommandResult(payload=PiFile.from_probabilities(pi, rep, ties).model_dump(mode="json"))


# ----------------------------------------------------------------------
# test
# ----------------------------------------------------------------------


def _load_observed(
    ctx: Context, args: argparse.Namespace
) -> tuple[RationalMatrix, DemandProbabilities, AugmentedSystem | None]:
    pi_file = PiFile.load(args.pi)
    if ctx.system.is_augmented:
        aug = ctx.enumerator.build_augmented(ctx.system)
        pi = pi_file.to_probabilities(aug.observed_representation, augmented=True)
        return ctx.bounds.observed_matrix(aug), pi, aug
    system = _observed_system(ctx)
    rep = build_vector_representation(ctx.geometry.enumerate_patches(system), system)
    return ctx.enumerator.enumerate_types(rep), pi_file.to_probabilities(rep), None


def cmd_test(args: argparse.Namespace) -> CommandResult:
    """Rationalizability verdict; exit code 0 when rationalizable, 1 otherwise."""
    ctx = build_context(args)
    matrix, pi, _ = _load_observed(ctx, args)
    result = ctx.bounds.test_rationalizable(matrix, pi)
    payload = {
        "rationalizable": result.rationalizable,
        "n_columns": result.n_columns,
        "columns": _column_labels(matrix),
        "witness": list(result.witness) if result.witness is not None else None,
        "l1_residual": result.l1_residual,
    }
    if not result.rationalizable and result.l1_residual <= NEAR_THRESHOLD_FACTOR * ctx.lp_tolerance:
        logger.warning("⚠️  Residual is within rounding distance of zero; consider rerunning with --exact")
        payload["suggest_exact"] = True
    return CommandResult(payload=payload, exit_code=EXIT_OK if result.rationalizable else EXIT_NOT_RATIONALIZABLE)


# ----------------------------------------------------------------------
# bounds
# ----------------------------------------------------------------------


def _functional(ctx: Context, args: argparse.Namespace) -> tuple[float, ...]:
    if args.expenditure:
        goods = [k - 1 for k in args.expenditure]
        return expenditure_share_vector(ctx.system.counterfactual.p, goods)
    if args.z is None:
        raise InputError("give a functional with --z or --expenditure")
    if len(args.z) != ctx.system.dimension:
        raise InputError(f"--z has {len(args.z)} entries, the system has {ctx.system.dimension} goods")
    return tuple(args.z)


def _resolve_patches(aug: AugmentedSystem, names: list[str]) -> list[int]:
    """Block-0 indices for sign strings, optionally prefixed with the counterfactual id."""
    prefix = f"{aug.system.counterfactual.id}:"
    labels = [patch.label for patch in aug.counterfactual_patches]
    indices = []
    for name in names:
        label = name.removeprefix(prefix)
        if label not in labels:
            raise InputError(f"unknown counterfactual patch {name!r}; patches are {labels}")
        indices.append(labels.index(label))
    return indices


def _bound_payload(result: BoundResult, witness: bool) -> dict:
    payload = {
        "status": str(result.status),
        "lower": result.lower,
        "upper": result.upper,
        "lower_attainable": str(result.lower_attainable),
        "upper_attainable": str(result.upper_attainable),
        "l1_residual": result.l1_residual,
    }
    if witness and result.ok:
        payload["witness_lower"] = list(result.witness_lower)
        payload["witness_upper"] = list(result.witness_upper)
    return payload


def cmd_bounds(args: argparse.Namespace) -> CommandResult:
    """Sharp counterfactual bounds: prob, mean, cdf or functional."""
    ctx = build_context(args)
    _require_counterfactual(ctx)
    _, pi1, aug = _load_observed(ctx, args)
    start = time.time()

    if args.query == "cdf":
        z = _functional(ctx, args)
        envelope = ctx.bounds.counterfactual_cdf_bounds(aug, pi1, z, args.grid)
        table = None
        payload = {"query": "cdf", "z": list(z), "status": str(envelope.status), "l1_residual": envelope.l1_residual}
        if envelope.status is BoundStatus.OK:
            table = pd.DataFrame({"t": envelope.grid, "lower": envelope.lower, "upper": envelope.upper})
            payload["grid"] = list(envelope.grid)
            payload["lower"] = list(envelope.lower)
            payload["upper"] = list(envelope.upper)
            payload["near_ties"] = list(envelope.near_ties)
            if envelope.near_ties:
                logger.warning("⚠️  Some grid points tie with a patch infimum; consider rerunning with --exact")
                payload["suggest_exact"] = True
            if args.table:
                write_tsv(table, args.table)
        exit_code = EXIT_OK if envelope.status is BoundStatus.OK else EXIT_INFEASIBLE_OBSERVABLES
        logger.info(f"✅ Query finished in {time.time() - start:.2f}s")
        return CommandResult(payload=payload, exit_code=exit_code, table=table)

    if args.query == "prob":
        event = EventSpec.union(_resolve_patches(aug, args.patches))
        result = ctx.bounds.counterfactual_event_bounds(aug, pi1, event)
        payload = {"query": "prob", "patches": [aug.counterfactual_patches[i].label for i in event.inner]}
    elif args.query == "mean":
        z = _functional(ctx, args)
        result = ctx.bounds.counterfactual_mean_bounds(aug, pi1, z)
        extrema = ctx.bounds.patch_extrema(aug, z)
        payload = {
            "query": "mean",
            "z": list(z),
            "patch_extrema": [
                {
                    "patch": patch.label,
                    "inf": e.inf_value,
                    "sup": e.sup_value,
                    "inf_attained": e.inf_attained,
                    "sup_attained": e.sup_attained,
                }
                for patch, e in zip(aug.counterfactual_patches, extrema, strict=True)
            ],
        }
    else:
        result = ctx.bounds.counterfactual_functional_bounds(
            aug, pi1, read_vector_file(args.glo), read_vector_file(args.ghi)
        )
        payload = {"query": "functional"}

    payload.update(_bound_payload(result, args.witness))
    logger.info(f"✅ Query finished in {time.time() - start:.2f}s")
    return CommandResult(payload=payload, exit_code=EXIT_OK if result.ok else EXIT_INFEASIBLE_OBSERVABLES)


# ----------------------------------------------------------------------
# oracle
# ----------------------------------------------------------------------


def cmd_oracle(args: argparse.Namespace) -> CommandResult:
    """Brute-force reference computations: types, vertex or cover."""
    ctx = build_context(args)
    oracle = BruteForceOracle()

    if args.check == "types":
        system = ctx.system
        rep = build_vector_representation(ctx.geometry.enumerate_patches(system), system)
        brute = oracle.brute_force_types(rep)
        fast = ctx.enumerator.enumerate_types(rep)
        return CommandResult(
            payload={
                "check": "types",
                "n_columns": brute.n_columns,
                "columns": _column_labels(brute),
                "agrees_with_enumeration": brute.selections == fast.selections,
            }
        )

    if args.check == "vertex":
        _require_counterfactual(ctx)
        _, pi1, aug = _load_observed(ctx, args)
        event = EventSpec.union(_resolve_patches(aug, args.patches))
        indicator = [1.0 if i in event.inner else 0.0 for i in range(aug.n_counterfactual)]
        return CommandResult(
            payload={
                "check": "vertex",
                "patches": [aug.counterfactual_patches[i].label for i in event.inner],
                "lower": oracle.vertex_enumerate_bounds(aug, pi1, indicator, Sense.MIN),
                "upper": oracle.vertex_enumerate_bounds(aug, pi1, indicator, Sense.MAX),
            }
        )

    patches = ctx.geometry.enumerate_patches(ctx.system)
    report = oracle.sample_patch_cover(ctx.system, patches, args.n, seed=args.seed)
    return CommandResult(
        payload={"check": "cover", "clean": report.clean, **report.model_dump(mode="json")},
    )
