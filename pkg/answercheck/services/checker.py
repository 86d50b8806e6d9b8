"""
Checker Service - Two-stage comparison of a reference answer and a user answer.

Stage one is the symbolic comparator. When it cannot decide, the difference
f = f_real - f_user is evaluated at distinct random grid points of one or more
disjoint segments: any point with |f| above tolerance refutes equality, and
otherwise the report carries an upper bound on the chance that f is not
identically zero.
"""
import asyncio
import functools
import logging
import math
from typing import Optional

import numpy as np

from answercheck.core.exceptions import GridExhaustedError, InfeasiblePackingError, VariableMismatchError
from answercheck.core.expr import Expr, difference, free_variables
from answercheck.schemas import (
    CheckConfig,
    CheckReport,
    FinalVerdict,
    InconclusivePolicy,
    PointwiseResult,
    ProbParams,
    Segment,
    SegmentReport,
    Stage,
    Verdict,
    Witness,
)
from answercheck.services.evaluation import evaluate_at, is_zero
from answercheck.services.grid import build_grid, point_at, split_segment
from answercheck.services.probability import error_probability
from answercheck.services.symbolic import normalize, symbolic_compare

logger = logging.getLogger(__name__)

# Stream tags mixed into the seed so placement and per-segment sampling never share a stream
_PLACEMENT_STREAM = 0
_SAMPLING_STREAM = 1


# =============================================================================
# Sampling without replacement
# =============================================================================

class SampleState:
    """Generator plus the grid indices already drawn on one segment."""

    def __init__(self, rng: np.random.Generator, used: Optional[set[int]] = None):
        self.rng = rng
        self.used: set[int] = set(used or ())

    @classmethod
    def for_segment(cls, seed: int, segment_index: int) -> "SampleState":
        sequence = np.random.SeedSequence([seed, _SAMPLING_STREAM, segment_index])
        return cls(np.random.default_rng(sequence))


def sample_next(state: SampleState, M: int) -> int:
    """Draw an index uniformly from the unused part of [0, M) and mark it used."""
    used = state.used
    if len(used) >= M:
        raise GridExhaustedError(f"All {M} grid indices have been drawn")

    if 2 * len(used) >= M:
        # dense: pick directly among the few remaining indices
        remaining = sorted(set(range(M)) - used)
        index = remaining[int(state.rng.integers(len(remaining)))]
    else:
        index = int(state.rng.integers(M))
        while index in used:
            index = int(state.rng.integers(M))

    used.add(index)
    return index


# =============================================================================
# Segments
# =============================================================================

def auto_segments(count: int, length: float, placement: Segment, seed: int) -> list[Segment]:
    """
    count segments of the given length with disjoint interiors, uniformly
    placed inside placement; deterministic under seed.
    """
    if count < 1 or length <= 0:
        raise ValueError("count must be >= 1 and length > 0")
    slack = placement.width - count * length
    if slack < 0:
        raise InfeasiblePackingError(
            f"{count} segments of length {length} do not fit in {placement}"
        )

    rng = np.random.default_rng(np.random.SeedSequence([seed, _PLACEMENT_STREAM]))
    offsets = np.sort(rng.uniform(0.0, slack, size=count)) if slack > 0 else np.zeros(count)

    segments = []
    for i, offset in enumerate(offsets.tolist()):
        a = placement.a + offset + i * length
        b = min(a + length, placement.b)
        segments.append(Segment(a=a, b=b))
    return segments


def prepare_segments(cfg: CheckConfig) -> list[Segment]:
    """Configured (or auto-generated) segments, with zero-straddling ones split."""
    if cfg.segments:
        base = cfg.segments
    else:
        base = auto_segments(cfg.auto.count, cfg.auto.length, cfg.auto.placement, cfg.seed)
    return [part for segment in base for part in split_segment(segment)]


# =============================================================================
# Pointwise stage
# =============================================================================

def pointwise_check(
    f: Expr,
    s: Segment,
    cfg: Optional[CheckConfig] = None,
    segment_index: int = 0,
) -> tuple[PointwiseResult, SegmentReport]:
    """
    Test f == 0 at up to m distinct random grid points of s.

    Undefined points are redrawn without counting toward m; redraws plus
    duplicate points are capped at resample_factor * m, after which the
    segment is INCONCLUSIVE.
    """
    cfg = cfg or CheckConfig()
    grid = build_grid(s, cfg.grid_mode)
    assumed_k = cfg.assumed_k_for(segment_index)
    state = SampleState.for_segment(cfg.seed, segment_index)
    target = min(cfg.points, grid.M)

    tested: set[float] = set()
    passed = resampled = duplicates = 0
    outcome = PointwiseResult.PASS
    witness = None

    while passed < target:
        if resampled + duplicates >= cfg.resample_cap:
            logger.warning(f"Segment {s}: resample cap {cfg.resample_cap} reached, inconclusive")
            outcome = PointwiseResult.INCONCLUSIVE
            break
        try:
            index = sample_next(state, grid.M)
        except GridExhaustedError:
            logger.warning(f"Segment {s}: grid exhausted after {passed} defined points")
            break

        x = point_at(grid, index)
        if x in tested:
            # distinct index, same binary64 value
            duplicates += 1
            continue
        tested.add(x)

        value = evaluate_at(f, x, cfg.budget)
        if not value.is_value:
            resampled += 1
            logger.debug(f"f({x!r}) undefined ({value.reason.value}), redrawing")
            continue

        if not is_zero(value, value.scale, cfg.tolerance):
            outcome = PointwiseResult.FAIL
            witness = Witness(x=x, fx=value.value)
            passed += 1
            break
        passed += 1

    if outcome is PointwiseResult.PASS and passed == 0:
        outcome = PointwiseResult.INCONCLUSIVE

    bound = None
    if outcome is PointwiseResult.PASS:
        bound = error_probability(ProbParams(M=grid.M, m=passed, k=assumed_k)).value

    report = SegmentReport(
        a=s.a,
        b=s.b,
        M=grid.M,
        points_tested=passed,
        resampled=resampled,
        duplicates=duplicates,
        outcome=outcome,
        assumed_k=assumed_k,
        error_probability=bound,
        witness=witness,
    )
    logger.info(f"Segment {s}: {outcome.value} after {passed} points (M={grid.M})")
    return outcome, report


# =============================================================================
# Pipeline
# =============================================================================

def _check_variables(f_real: Expr, f_user: Expr, cfg: CheckConfig) -> Expr:
    diff = difference(f_real, f_user)
    names = free_variables(diff)
    if names and names != {cfg.variable}:
        raise VariableMismatchError(
            f"Expressions use {', '.join(sorted(names))}, configured variable is {cfg.variable}"
        )
    return diff


def _find_witness(diff: Expr, segments: list[Segment], cfg: CheckConfig) -> Optional[Witness]:
    """Look for a point certifying a symbolic NOT_EQUAL at a few fixed grid points."""
    for segment in segments:
        grid = build_grid(segment, cfg.grid_mode)
        if grid.M == 0:
            continue
        for index in sorted({0, grid.M // 2, grid.M - 1}):
            x = point_at(grid, index)
            value = evaluate_at(diff, x, cfg.budget)
            if value.is_value and not is_zero(value, value.scale, cfg.tolerance):
                return Witness(x=x, fx=value.value)
    return None


def _symbolic_report(
    verdict: Verdict, diff: Expr, segments: list[Segment], cfg: CheckConfig
) -> Optional[CheckReport]:
    if verdict is Verdict.UNKNOWN:
        return None
    correct = verdict is Verdict.EQUAL
    return CheckReport(
        verdict=FinalVerdict.CORRECT if correct else FinalVerdict.INCORRECT,
        stage=Stage.SYMBOLIC,
        accepted=correct,
        symbolic_verdict=verdict,
        difference=str(normalize(diff)),
        witness=None if correct else _find_witness(diff, segments, cfg),
        error_bound=0.0,
        seed=cfg.seed,
    )


def _merge_segments(
    results: list[tuple[PointwiseResult, SegmentReport]],
    diff: Expr,
    cfg: CheckConfig,
) -> CheckReport:
    """Deterministic merge, ordered by segment index."""
    reports = [report for _, report in results]
    outcomes = [outcome for outcome, _ in results]
    common = dict(
        stage=Stage.POINTWISE,
        symbolic_verdict=Verdict.UNKNOWN,
        difference=str(normalize(diff)),
        segments=reports,
        seed=cfg.seed,
    )

    if PointwiseResult.FAIL in outcomes:
        failing = reports[outcomes.index(PointwiseResult.FAIL)]
        return CheckReport(
            verdict=FinalVerdict.INCORRECT, accepted=False,
            witness=failing.witness, error_bound=0.0, **common,
        )

    passing = [r for r in reports if r.outcome is PointwiseResult.PASS]
    if not passing:
        accepted = cfg.inconclusive_policy is InconclusivePolicy.ACCEPT
        logger.warning(f"All segments inconclusive; policy {cfg.inconclusive_policy.value}")
        return CheckReport(
            verdict=FinalVerdict.INCONCLUSIVE, accepted=accepted,
            error_bound=1.0, log_error_bound=0.0, **common,
        )

    logs = []
    for r in passing:
        prob = error_probability(ProbParams(M=r.M, m=r.points_tested, k=r.assumed_k))
        logs.append(prob.log_value)
    # 1 - prod(1 - P_i); log side is the union bound sum P_i
    bound = -math.expm1(math.fsum(
        math.log1p(-r.error_probability) if r.error_probability < 1 else -math.inf
        for r in passing
    ))
    log_bound = float(np.logaddexp.reduce(logs)) if len(logs) > 1 else logs[0]
    return CheckReport(
        verdict=FinalVerdict.CORRECT_WITH_BOUND,
        accepted=True,
        error_bound=min(max(bound, 0.0), 1.0),
        log_error_bound=log_bound if math.isfinite(log_bound) else None,
        **common,
    )


def compare_answers(f_real: Expr, f_user: Expr, cfg: Optional[CheckConfig] = None) -> CheckReport:
    """
    Symbolic stage first; on UNKNOWN, pointwise checks on every segment.

    Raises VariableMismatchError when the expressions disagree on the variable.
    """
    cfg = cfg or CheckConfig()
    diff = _check_variables(f_real, f_user, cfg)
    segments = prepare_segments(cfg)

    report = _symbolic_report(symbolic_compare(f_real, f_user), diff, segments, cfg)
    if report is not None:
        return report

    results = [pointwise_check(diff, s, cfg, segment_index=i) for i, s in enumerate(segments)]
    return _merge_segments(results, diff, cfg)


async def compare_answers_async(
    f_real: Expr, f_user: Expr, cfg: Optional[CheckConfig] = None
) -> CheckReport:
    """compare_answers with the per-segment checks run concurrently."""
    cfg = cfg or CheckConfig()
    diff = _check_variables(f_real, f_user, cfg)
    segments = prepare_segments(cfg)

    report = _symbolic_report(symbolic_compare(f_real, f_user), diff, segments, cfg)
    if report is not None:
        return report

    loop = asyncio.get_running_loop()
    results = await asyncio.gather(*[
        loop.run_in_executor(None, functools.partial(pointwise_check, diff, s, cfg, segment_index=i))
        for i, s in enumerate(segments)
    ])
    return _merge_segments(list(results), diff, cfg)
