"""
answercheck command line.

Exit codes: 0 correct/success, 1 incorrect, 2 inconclusive, 64 usage error,
65 unparseable input expression.
"""
import argparse
import logging
import math
import sys
from typing import Callable, Optional

import numpy as np
import orjson
from pydantic import ValidationError

from answercheck import settings
from answercheck.core.exceptions import AnswerCheckError, ParseError, VariableMismatchError
from answercheck.core.parser import parse
from answercheck.schemas import (
    AutoSegmentSpec,
    CheckConfig,
    CheckReport,
    EvalBudget,
    FinalVerdict,
    GridMode,
    InconclusivePolicy,
    ProbParams,
    Segment,
    ToleranceSpec,
    ZeroUniverse,
)
from answercheck.services.checker import compare_answers
from answercheck.services.grid import build_grid, decade_table, grid_curve
from answercheck.services.harness import compare_simulation
from answercheck.services.probability import error_probability, log_probability_table, min_points_for_target

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INCORRECT = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_PARSE = 65

_VERDICT_EXIT = {
    FinalVerdict.CORRECT: EXIT_OK,
    FinalVerdict.CORRECT_WITH_BOUND: EXIT_OK,
    FinalVerdict.INCORRECT: EXIT_INCORRECT,
    FinalVerdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


class UsageError(Exception):
    """Invalid command line."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# =============================================================================
# Argument helpers
# =============================================================================

def _int_list(text: str) -> list[int]:
    try:
        return [int(float(part)) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _big_int(text: str) -> int:
    """Integers, also written as 1e6 or 2^52."""
    text = text.strip()
    try:
        if "^" in text:
            base, exponent = text.split("^", 1)
            return int(base) ** int(exponent)
        if any(c in text for c in ".eE"):
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")


def _segment(text: str) -> Segment:
    try:
        return Segment.parse(text)
    except (ValueError, ValidationError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _emit(payload: dict) -> None:
    sys.stdout.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY).decode() + "\n")


def _emit_csv(frame, out: Optional[str] = None) -> None:
    if out:
        frame.to_csv(out, index=False)
        print(f"✅ Wrote {len(frame)} rows to {out}", file=sys.stderr)
    else:
        sys.stdout.write(frame.to_csv(index=False))


def _finite(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


# =============================================================================
# Subcommands
# =============================================================================

def _check_config(args) -> CheckConfig:
    fields = {}
    if args.segment:
        fields["segments"] = args.segment

    auto = {}
    if args.segments is not None:
        auto["count"] = args.segments
    if args.seg_len is not None:
        auto["length"] = args.seg_len
    if args.range is not None:
        auto["placement"] = args.range
    fields["auto"] = AutoSegmentSpec(**auto)

    tolerance = {}
    if args.tol_abs is not None:
        tolerance["absolute"] = args.tol_abs
    if args.tol_rel is not None:
        tolerance["relative"] = args.tol_rel
    fields["tolerance"] = ToleranceSpec(**tolerance)

    budget = {}
    if args.max_visits is not None:
        budget["max_node_visits"] = args.max_visits
    if args.time_limit_ms is not None:
        budget["wall_clock_limit_ms"] = args.time_limit_ms
    fields["budget"] = EvalBudget(**budget)

    if args.points is not None:
        fields["points"] = args.points
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.k is not None:
        fields["assumed_k"] = args.k[0] if len(args.k) == 1 else args.k
    if args.grid is not None:
        fields["grid_mode"] = args.grid
    if args.strict:
        fields["inconclusive_policy"] = InconclusivePolicy.REJECT
    fields["variable"] = args.var
    return CheckConfig(**fields)


def _print_report(report: CheckReport) -> None:
    icon = {
        FinalVerdict.CORRECT: "✅",
        FinalVerdict.CORRECT_WITH_BOUND: "✅",
        FinalVerdict.INCORRECT: "❌",
        FinalVerdict.INCONCLUSIVE: "⚠️",
    }[report.verdict]
    print(f"{icon} {report.verdict.value} ({report.stage.value} stage)")
    print(f"   difference: {report.difference}")
    for segment in report.segments:
        line = (
            f"   [{segment.a:g}, {segment.b:g}] M={segment.M} "
            f"points={segment.points_tested} resampled={segment.resampled} -> {segment.outcome.value}"
        )
        if segment.error_probability is not None:
            line += f" P_err={segment.error_probability:.3g}"
        print(line)
    if report.witness:
        print(f"   witness: f({report.witness.x!r}) = {report.witness.fx!r}")
    if report.verdict is FinalVerdict.CORRECT_WITH_BOUND:
        log_text = "-inf" if report.log_error_bound is None else f"{report.log_error_bound:.4f}"
        print(f"   error bound: {report.error_bound:.3g} (log {log_text})")
    if report.verdict is FinalVerdict.INCONCLUSIVE:
        print(f"   accepted: {report.accepted}")


def cmd_check(args) -> int:
    cfg = _check_config(args)
    f_real = parse(args.expr1.lstrip(), variable=args.var)
    f_user = parse(args.expr2.lstrip(), variable=args.var)
    report = compare_answers(f_real, f_user, cfg)
    if args.format == "json":
        sys.stdout.write(report.to_json().decode() + "\n")
    else:
        _print_report(report)
    return _VERDICT_EXIT[report.verdict]


def cmd_prob(args) -> int:
    result = error_probability(ProbParams(M=args.M, m=args.m, k=args.k), exact=args.exact)
    if args.format == "json":
        _emit({"M": args.M, "m": args.m, "k": args.k, **result.model_dump(mode="json")})
    elif args.log:
        print("-inf" if not math.isfinite(result.log_value) else f"{result.log_value!r}")
    else:
        print(f"p = {result.value!r}")
        if result.exact is not None and args.exact:
            print(f"exact = {result.exact}")
        print(f"log p = {'-inf' if _finite(result.log_value) is None else repr(result.log_value)}")
    return EXIT_OK


def cmd_grid(args) -> int:
    grid = build_grid(Segment(a=args.a, b=args.b), args.mode)
    if args.format == "json":
        _emit({"a": args.a, "b": args.b, "mode": grid.mode.value, "epsilon_b": grid.epsilon_b, "M": grid.M})
    else:
        print(f"M = {grid.M}")
        print(f"eps_B = {grid.epsilon_b!r}")
    return EXIT_OK


def cmd_decades(args) -> int:
    frame = decade_table(args.mode)
    if args.format == "json":
        _emit({"rows": frame.to_dict(orient="records")})
    else:
        _emit_csv(frame)
    return EXIT_OK


def _k_values(args) -> list[int]:
    values = np.linspace(args.k_from, args.k_to, args.steps)
    return sorted({int(round(v)) for v in values})


def cmd_curves(args) -> int:
    M = build_grid(Segment(a=args.a, b=args.b), args.mode).M
    if args.axis == "k":
        if args.k_from is None or args.k_to is None:
            raise UsageError("--k-from and --k-to are required with --axis k")
        frame = log_probability_table(M, args.m_list, _k_values(args))
    else:
        if not args.k_list:
            raise UsageError("--k-list is required with --axis m")
        m_values = range(args.m_from, args.m_to + 1)
        frame = log_probability_table(M, m_values, args.k_list)
    if args.format == "json":
        _emit({"rows": frame.to_dict(orient="records")})
    else:
        _emit_csv(frame, args.out)
    return EXIT_OK


def cmd_grid_curve(args) -> int:
    if args.a_list:
        a_values = args.a_list
    else:
        a_values = np.logspace(args.exp_from, args.exp_to, args.steps).tolist()
    frame = grid_curve(a_values, args.length, args.mode)
    if args.format == "json":
        _emit({"rows": frame.to_dict(orient="records")})
    else:
        _emit_csv(frame, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    universe = ZeroUniverse.first_k(args.M, args.k)
    result = compare_simulation(universe, args.m, args.trials, args.seed, workers=args.workers)
    if args.format == "json":
        _emit(result.model_dump(mode="json"))
    else:
        print(f"rate    = {result.rate!r} ({result.hits}/{result.trials})")
        print(f"stderr  = {result.stderr!r}")
        print(f"formula = {result.formula!r}")
        print(f"z-score = {result.z_score!r}")
    return EXIT_OK


def cmd_min_points(args) -> int:
    m = min_points_for_target(args.M, args.k, args.target)
    if args.format == "json":
        _emit({"M": args.M, "k": args.k, "target": args.target, "m": m})
    else:
        print(m)
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="answercheck",
        allow_abbrev=False,
        description="Compare answer expressions and compute pointwise-check error bounds",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def add(name: str, handler: Callable[..., int], help_text: str, formats=("human", "json"), aliases=()):
        command = sub.add_parser(name, help=help_text, allow_abbrev=False, aliases=list(aliases))
        command.set_defaults(handler=handler)
        command.add_argument("--format", choices=formats, default=formats[0])
        return command

    check = add("check", cmd_check, "Compare a reference answer with a user answer")
    check.add_argument("expr1", help="Reference answer")
    check.add_argument("expr2", help="User answer")
    check.add_argument("--json", dest="format", action="store_const", const="json")
    check.add_argument("--var", default=settings.CHECK_CONFIG["variable"])
    check.add_argument("--segments", type=int, help="Number of auto-placed segments")
    check.add_argument("--seg-len", type=float, help="Length of each auto-placed segment")
    check.add_argument("--range", type=_segment, help="Placement range A:B for auto segments")
    check.add_argument("--segment", type=_segment, action="append", help="Explicit segment A:B (repeatable)")
    check.add_argument("--points", type=int, help="Check points per segment (m)")
    check.add_argument("--k", type=_int_list, help="Assumed zero count per segment, or a comma list")
    check.add_argument("--tol-abs", type=float)
    check.add_argument("--tol-rel", type=float)
    check.add_argument("--seed", type=int)
    check.add_argument("--grid", choices=[mode.value for mode in GridMode])
    check.add_argument("--max-visits", type=int, help="Node visits per evaluation")
    check.add_argument("--time-limit-ms", type=float, help="Wall-clock limit per evaluation")
    check.add_argument("--strict", action="store_true", help="Reject inconclusive outcomes")

    prob = add("prob", cmd_prob, "Error probability for (M, m, k)")
    prob.add_argument("--M", type=_big_int, required=True)
    prob.add_argument("--m", type=_big_int, required=True)
    prob.add_argument("--k", type=_big_int, required=True)
    prob.add_argument("--log", action="store_true", help="Print only the natural log")
    prob.add_argument("--exact", action="store_true", help="Force the exact rational path")

    grid = add("grid", cmd_grid, "Grid size M and spacing eps_B of [A, B]")
    grid.add_argument("--a", type=float, required=True)
    grid.add_argument("--b", type=float, required=True)
    grid.add_argument("--mode", choices=[mode.value for mode in GridMode], default=GridMode.RELATIVE.value)

    decades = add(
        "table1", cmd_decades, "Grid sizes of [10^j, 10^j + 5]", formats=("csv", "json"), aliases=["decades"]
    )
    decades.add_argument("--mode", choices=[mode.value for mode in GridMode], default=GridMode.RELATIVE.value)

    curves = add("curves", cmd_curves, "log p(M, m, k) curves as CSV", formats=("csv", "json"))
    curves.add_argument("--a", type=float, required=True)
    curves.add_argument("--b", type=float, required=True)
    curves.add_argument("--mode", choices=[mode.value for mode in GridMode], default=GridMode.RELATIVE.value)
    curves.add_argument("--axis", choices=["k", "m"], default="k")
    curves.add_argument("--m-list", type=_int_list, default=[10, 20, 25, 50, 100])
    curves.add_argument("--k-from", type=_big_int)
    curves.add_argument("--k-to", type=_big_int)
    curves.add_argument("--steps", type=int, default=50)
    curves.add_argument("--k-list", type=_int_list)
    curves.add_argument("--m-from", type=int, default=1)
    curves.add_argument("--m-to", type=int, default=100)
    curves.add_argument("--out", help="Write CSV to this file instead of stdout")

    gcurve = add("grid-curve", cmd_grid_curve, "M of [A, A + L] against A", formats=("csv", "json"))
    gcurve.add_argument("--a-list", type=_float_list)
    gcurve.add_argument("--exp-from", type=float, default=1.0, help="log10 of the first A")
    gcurve.add_argument("--exp-to", type=float, default=9.0, help="log10 of the last A")
    gcurve.add_argument("--steps", type=int, default=9)
    gcurve.add_argument("--length", type=float, default=5.0)
    gcurve.add_argument("--mode", choices=[mode.value for mode in GridMode], default=GridMode.RELATIVE.value)
    gcurve.add_argument("--out")

    simulate = add("simulate", cmd_simulate, "Monte Carlo estimate of p(M, m, k)")
    simulate.add_argument("--M", type=_big_int, required=True)
    simulate.add_argument("--m", type=_big_int, required=True)
    simulate.add_argument("--k", type=_big_int, required=True)
    simulate.add_argument("--trials", type=_big_int, default=10**6)
    simulate.add_argument("--seed", type=int, default=settings.CHECK_CONFIG["seed"])
    simulate.add_argument("--workers", type=int, default=1)

    min_points = add("min-points", cmd_min_points, "Smallest m reaching a target error probability")
    min_points.add_argument("--M", type=_big_int, required=True)
    min_points.add_argument("--k", type=_big_int, required=True)
    min_points.add_argument("--target", type=float, required=True)

    return parser


def _option_strings(parser: argparse.ArgumentParser) -> set[str]:
    names = set(parser._option_string_actions)
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                names |= set(child._option_string_actions)
    return names


def _shield_leading_minus(argv: list[str], options: set[str]) -> list[str]:
    """
    Keep arguments such as -sin(x) or -20:-10 from being read as options.

    A leading space makes argparse treat them as values; the expression parser
    and float() both skip it.
    """
    shielded = []
    for arg in argv:
        if arg.startswith("-") and not arg.startswith("--") and len(arg) > 1 and arg.split("=", 1)[0] not in options:
            arg = " " + arg
        shielded.append(arg)
    return shielded


def _report_error(code: int, message: str, as_json: bool) -> int:
    if as_json:
        sys.stderr.write(
            orjson.dumps({"status": "error", "code": code, "message": message}).decode() + "\n"
        )
    else:
        print(f"❌ {message}", file=sys.stderr)
    return code


def run(argv: Optional[list[str]] = None) -> int:
    """Run one CLI invocation and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "json" in argv or "--json" in argv
    try:
        parser = build_parser()
        args = parser.parse_args(_shield_leading_minus(argv, _option_strings(parser)))
    except UsageError as e:
        return _report_error(EXIT_USAGE, f"usage: {e}", as_json)
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    settings.configure_logging("DEBUG" if args.verbose else None)
    as_json = getattr(args, "format", None) == "json"

    try:
        return args.handler(args)
    except (ParseError, VariableMismatchError) as e:
        return _report_error(EXIT_PARSE, f"invalid expression: {e}", as_json)
    except (UsageError, ValidationError, AnswerCheckError, ValueError) as e:
        return _report_error(EXIT_USAGE, str(e), as_json)


def main() -> None:
    sys.exit(run())
