"""Command-line entry point for ``rumbounds``."""

import argparse
import logging
import sys
import traceback

from pydantic import ValidationError

from rumbounds import __version__
from rumbounds.cli import commands
from rumbounds.cli.output import CommandResult, emit, render_json, render_text
from rumbounds.config import get_settings, setup_logging
from rumbounds.errors import EXIT_INPUT_ERROR, RumBoundsError

logger = logging.getLogger(__name__)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("system", help="System file (JSON)")
    common.add_argument("--tolerance", type=float, default=None, help="Sign classification tolerance τ")
    common.add_argument(
        "--keep-null-patches", action="store_true", help="Keep lower-dimensional patches such as crossing points"
    )
    common.add_argument("--exact", action="store_true", help="Solve every LP in exact rational arithmetic")
    common.add_argument("--max-types", type=int, default=None, help="Cap on the number of rational types")
    common.add_argument("--out", default=None, help="Write the result here instead of standard output")
    common.add_argument("--format", choices=["json", "text"], default="json", help="Output format")
    common.add_argument("--log-level", default=None, help="Logging level (default from RUMBOUNDS_LOG_LEVEL)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="rumbounds",
        description="Test random utility rationalizability and bound counterfactual demand.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    patches = sub.add_parser("patches", parents=[common], help="List the patches of every budget")
    patches.set_defaults(handler=commands.cmd_patches)

    matrix = sub.add_parser("matrix", parents=[common], help="Dump the rational demand matrix A or A*")
    matrix.set_defaults(handler=commands.cmd_matrix)

    ingest = sub.add_parser("ingest", parents=[common], help="Choice frequencies from observed bundles")
    ingest.add_argument("observations", help="CSV with columns budget_id,y_1,...,y_K")
    ingest.set_defaults(handler=commands.cmd_ingest)

    test = sub.add_parser("test", parents=[common], help="Rationalizability test")
    test.add_argument("pi", help="Probability file (JSON)")
    test.set_defaults(handler=commands.cmd_test)

    bounds = sub.add_parser("bounds", help="Sharp counterfactual bounds")
    queries = bounds.add_subparsers(dest="query", required=True)

    def query(name: str, help_text: str) -> argparse.ArgumentParser:
        q = queries.add_parser(name, parents=[common], help=help_text)
        q.add_argument("pi", help="Probability file over the refined observed patches (JSON)")
        q.add_argument("--witness", action="store_true", help="Include the mixing weights of both optima")
        q.set_defaults(handler=commands.cmd_bounds)
        return q

    prob = query("prob", "Probability of a union of counterfactual patches")
    prob.add_argument("--patches", nargs="+", required=True, help="Counterfactual patch sign strings")

    for name, help_text in (("mean", "Mean of z·y"), ("cdf", "Pointwise c.d.f. envelope of z·y")):
        q = query(name, help_text)
        q.add_argument("--z", nargs="+", type=float, default=None, help="Linear functional coefficients")
        q.add_argument(
            "--expenditure", nargs="+", type=int, default=None, help="Goods (1-based) for joint expenditure at p_0"
        )
        if name == "cdf":
            q.add_argument("--grid", nargs="+", type=float, required=True, help="Increasing thresholds t")
            q.add_argument("--table", default=None, help="Also write the envelope as TSV here")

    functional = query("functional", "Mean of g from per-patch bounds of g")
    functional.add_argument("--glo", required=True, help="JSON list: inf of g on each counterfactual patch")
    functional.add_argument("--ghi", required=True, help="JSON list: sup of g on each counterfactual patch")

    oracle = sub.add_parser("oracle", help="Brute-force reference checks")
    checks = oracle.add_subparsers(dest="check", required=True)
    types = checks.add_parser("types", parents=[common], help="All rational types by exhaustive search")
    types.set_defaults(handler=commands.cmd_oracle)
    vertex = checks.add_parser("vertex", parents=[common], help="Event bounds by vertex enumeration")
    vertex.add_argument("pi", help="Probability file (JSON)")
    vertex.add_argument("--patches", nargs="+", required=True, help="Counterfactual patch sign strings")
    vertex.set_defaults(handler=commands.cmd_oracle)
    cover = checks.add_parser("cover", parents=[common], help="Sampling check of the patch partition")
    cover.add_argument("--n", type=int, default=10_000, help="Samples per budget")
    cover.add_argument("--seed", type=int, default=0, help="Random seed")
    cover.set_defaults(handler=commands.cmd_oracle)

    return parser


def _error(payload: dict, args: argparse.Namespace) -> None:
    emit(render_json(payload), getattr(args, "out", None))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    setup_logging(args.log_level or settings.log_level)

    logger.info(f"🚀 rumbounds {args.command}{' ' + args.query if getattr(args, 'query', None) else ''}")
    try:
        result: CommandResult = args.handler(args)
    except RumBoundsError as e:
        logger.error(f"❌ {type(e).__name__}: {e.message}")
        if e.detail:
            logger.error(f"   {e.detail}")
        _error(e.to_payload(), args)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ Invalid input: {e.error_count()} validation errors")
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'value'}: {err['msg']}" for err in e.errors())
        _error({"error": "Invalid input", "detail": details, "code": "validation_error"}, args)
        return EXIT_INPUT_ERROR
    except Exception as e:
        logger.error(f"💥 Unhandled {type(e).__name__}: {e}")
        if settings.debug:
            for line in traceback.format_exc().split("\n"):
                if line.strip():
                    logger.error(f"     {line}")
        _error({"error": "Internal error", "detail": str(e), "code": "internal_error"}, args)
        return EXIT_INPUT_ERROR

    text = render_text(result) if args.format == "text" else render_json(result.payload)
    emit(text, args.out)
    logger.info(f"✅ Done (exit code {result.exit_code})")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
