"""
Grid Service - Discrete floating-point view of a segment [A, B].

The grid spacing at x is eps_x; spacing never decreases with |x|, so the
spacing at the far end B gives a lower bound M = floor((B - A) / eps_B) on the
number of binary64 values inside the segment.
"""
import logging
import math
import sys
from fractions import Fraction
from typing import Iterable, Union

import pandas as pd

from answercheck.core.exceptions import SegmentError
from answercheck.schemas import GridMode, GridModel, Segment

logger = logging.getLogger(__name__)

TWO_POW_53 = 2**53

# Smallest positive normal binary64; replaces A = 0
SMALLEST_NORMAL = sys.float_info.min

# [10^j, 10^j + 5] for j = 1..9
DECADE_SEGMENTS = [(10.0**j, 10.0**j + 5.0) for j in range(1, 10)]


def epsilon_for(x: float, mode: Union[GridMode, str] = GridMode.RELATIVE) -> float:
    """Grid spacing at x: |x| * 2^-53 (relative) or the spacing above |x| (ulp)."""
    if not math.isfinite(x):
        raise ValueError(f"Grid spacing needs a finite point, got {x}")
    mode = GridMode(mode)
    if mode is GridMode.RELATIVE:
        if x == 0:
            raise ValueError("Relative grid spacing is undefined at 0")
        return abs(x) / TWO_POW_53
    return math.ulp(abs(x))


def normalize_segment(s: Segment) -> Segment:
    """
    Map a segment onto the positive axis.

    [A, B] with B <= 0 becomes [-B, -A]; a zero left end becomes the smallest
    positive normal. Segments straddling zero must be split first.
    """
    a, b = s.a, s.b
    if a < 0 < b:
        raise SegmentError(f"Segment {s} straddles zero; split it with split_segment")
    if b <= 0:
        a, b = -b, -a
    if a == 0:
        a = SMALLEST_NORMAL
    if not a < b:
        raise SegmentError(f"Segment {s} lies below the smallest normal number")
    return s if (a, b) == (s.a, s.b) else Segment(a=a, b=b)


def split_segment(s: Segment) -> list[Segment]:
    """Split a zero-straddling segment into [A, 0] and [0, B]."""
    if s.a < 0 < s.b:
        return [Segment(a=s.a, b=0.0), Segment(a=0.0, b=s.b)]
    return [s]


def _count(normalized: Segment, eps: float) -> int:
    return math.floor((Fraction(normalized.b) - Fraction(normalized.a)) / Fraction(eps))


def estimate_grid_points(s: Segment, mode: Union[GridMode, str] = GridMode.RELATIVE) -> int:
    """M = floor((B - A) / eps_B), a guaranteed lower bound on the grid size."""
    normalized = normalize_segment(s)
    return _count(normalized, epsilon_for(normalized.b, mode))


def build_grid(s: Segment, mode: Union[GridMode, str] = GridMode.RELATIVE) -> GridModel:
    normalized = normalize_segment(s)
    eps = epsilon_for(normalized.b, mode)
    grid = GridModel(
        segment=s,
        normalized=normalized,
        mode=GridMode(mode),
        mirrored=s.b <= 0,
        epsilon_b=eps,
        M=_count(normalized, eps),
    )
    logger.debug(f"Grid {s} ({grid.mode.value}): eps_B={eps:.6e}, M={grid.M}")
    return grid


def _point(normalized: Segment, eps: float, index: int) -> float:
    # exact A + index * eps, rounded once
    return float(Fraction(normalized.a) + index * Fraction(eps))


def grid_point(s: Segment, index: int, mode: Union[GridMode, str] = GridMode.RELATIVE) -> float:
    """
    Point number index of the normalized segment: A + index * eps_B in binary64.

    Non-decreasing in index, strictly increasing whenever eps_B >= ulp(B).
    """
    grid = build_grid(s, mode)
    if not 0 <= index < grid.M:
        raise IndexError(f"Grid index {index} outside [0, {grid.M})")
    return _point(grid.normalized, grid.epsilon_b, index)


def point_at(grid: GridModel, index: int) -> float:
    """Signed grid point: mirrored grids map back onto the original segment."""
    if not 0 <= index < grid.M:
        raise IndexError(f"Grid index {index} outside [0, {grid.M})")
    value = _point(grid.normalized, grid.epsilon_b, index)
    return -value if grid.mirrored else value


def decade_table(mode: Union[GridMode, str] = GridMode.RELATIVE) -> pd.DataFrame:
    """Grid sizes of [10^j, 10^j + 5], j = 1..9."""
    rows = []
    for a, b in DECADE_SEGMENTS:
        rows.append({
            "segment": f"[{int(a)}, {int(b)}]",
            "M": estimate_grid_points(Segment(a=a, b=b), mode),
        })
    return pd.DataFrame(rows, columns=["segment", "M"])


def grid_curve(
    a_values: Iterable[float],
    length: float = 5.0,
    mode: Union[GridMode, str] = GridMode.RELATIVE,
) -> pd.DataFrame:
    """M of [A, A + length] as the segment moves away from zero."""
    rows = []
    for a in a_values:
        segment = Segment(a=a, b=a + length)
        rows.append({"A": a, "B": segment.b, "M": estimate_grid_points(segment, mode)})
    return pd.DataFrame(rows, columns=["A", "B", "M"])
