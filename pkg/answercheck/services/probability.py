"""
Probability Service - Failure probability of the pointwise check.

For a grid of M points, m distinct uniformly drawn check points and a zero
locus of at most k points:

    p(M, m, k) = prod_{i=0}^{m-1} (k - i) / (M - i)

is the chance that every check point lands on a zero. The total error
probability is 0 for k < m, p(M, m, k) for m <= k <= M and 1 for k > M.
"""
import logging
import math
import sys
from fractions import Fraction
from typing import Iterable

import numpy as np
import pandas as pd

from answercheck import settings
from answercheck.core.exceptions import ProbabilityDomainError
from answercheck.schemas import ProbParams, ProbResult

logger = logging.getLogger(__name__)

_LOG_CHUNK = 1_000_000

_ZERO = ProbResult(exact=Fraction(0), value=0.0, log_value=-math.inf)
_ONE = ProbResult(exact=Fraction(1), value=1.0, log_value=0.0)


def _check_k(p: ProbParams) -> None:
    if p.k > p.M:
        raise ProbabilityDomainError(
            f"k={p.k} exceeds M={p.M}; use error_probability for that regime"
        )


def log_failure_probability(p: ProbParams) -> float:
    """
    sum_{i<m} log((k - i) / (M - i)), termwise so it survives M ~ 2^52.

    Returns -inf when k < m.
    """
    _check_k(p)
    if p.k < p.m:
        return -math.inf

    total = []
    for start in range(0, p.m, _LOG_CHUNK):
        i = np.arange(start, min(start + _LOG_CHUNK, p.m), dtype=np.float64)
        den = float(p.M) - i
        # (k - i)/(M - i) = 1 - (M - k)/(M - i); log1p keeps precision near 1
        gap = float(p.M - p.k) / den
        terms = np.where(
            gap < 0.5,
            np.log1p(-np.minimum(gap, 0.5)),
            np.log(np.maximum(float(p.k) - i, 1.0)) - np.log(den),
        )
        total.extend(terms.tolist())
    return math.fsum(total)


def failure_probability(p: ProbParams, exact: bool = False) -> ProbResult:
    """
    p(M, m, k) as exact rational when M <= EXACT_PROBABILITY_MAX_M (or on
    request), otherwise from the log-sum.
    """
    _check_k(p)
    if p.k < p.m:
        return _ZERO

    if exact or p.M <= settings.EXACT_PROBABILITY_MAX_M:
        q = Fraction(math.perm(p.k, p.m), math.perm(p.M, p.m))
        value = float(q)
        log_value = math.log(value) if value >= sys.float_info.min else log_failure_probability(p)
        return ProbResult(exact=q, value=value, log_value=log_value)

    log_value = log_failure_probability(p)
    return ProbResult(exact=None, value=math.exp(log_value), log_value=log_value)


def error_probability(p: ProbParams, exact: bool = False) -> ProbResult:
    """Piecewise total error: 0 for k < m, p(M, m, k) for m <= k <= M, 1 for k > M."""
    if p.k < p.m:
        return _ZERO
    if p.k > p.M:
        return _ONE
    return failure_probability(p, exact=exact)


def min_points_for_target(M: int, k: int, target: float) -> int:
    """
    Smallest m whose error probability is at most target.

    m = k + 1 always qualifies (probability 0), so the search is bounded.
    """
    if not 0 < target < 1:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k >= M:
        raise ProbabilityDomainError(
            f"k={k} >= M={M}: every m <= M fails with probability 1"
        )

    log_target = math.log(target)

    def meets(m: int) -> bool:
        return m > k or log_failure_probability(ProbParams(M=M, m=m, k=k)) <= log_target

    if meets(1):
        return 1
    low, high = 1, 2
    while not meets(high):
        low, high = high, min(2 * high, k + 1)
    while high - low > 1:
        middle = (low + high) // 2
        if meets(middle):
            high = middle
        else:
            low = middle
    logger.debug(f"min_points_for_target(M={M}, k={k}, target={target}) = {high}")
    return high


def ordered_draw_probability(M: int, m: int) -> ProbResult:
    """Chance of one particular ordered sequence of m distinct draws: 1 / (M (M-1) ... (M-m+1))."""
    if not 1 <= m <= M:
        raise ProbabilityDomainError(f"need 1 <= m <= M, got m={m}, M={M}")
    count = math.perm(M, m)
    q = Fraction(1, count)
    return ProbResult(exact=q, value=float(q), log_value=-math.log(count))


def hypergeometric_probability(p: ProbParams) -> Fraction:
    """C(k, m) / C(M, m), the unordered form of p(M, m, k)."""
    _check_k(p)
    return Fraction(math.comb(p.k, p.m), math.comb(p.M, p.m))


def log_probability_table(M: int, m_values: Iterable[int], k_values: Iterable[int]) -> pd.DataFrame:
    """Error probability and its log for every (m, k) pair; log_p is NaN where p = 0."""
    k_values = list(k_values)
    rows = []
    for m in m_values:
        for k in k_values:
            result = error_probability(ProbParams(M=M, m=m, k=k))
            rows.append({
                "M": M,
                "m": m,
                "k": k,
                "p": result.value,
                "log_p": result.log_value if math.isfinite(result.log_value) else np.nan,
            })
    return pd.DataFrame(rows, columns=["M", "m", "k", "p", "log_p"])
