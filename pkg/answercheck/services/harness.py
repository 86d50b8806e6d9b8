"""
Validation Harness - Independent checks of the failure-probability model.

Works on abstract grid indices only: a brute-force enumeration oracle for
small universes and a seeded Monte Carlo simulation for large ones.
"""
import asyncio
import functools
import itertools
import logging
import math
from fractions import Fraction

import numpy as np

from answercheck import settings
from answercheck.core.exceptions import UniverseTooLargeError
from answercheck.schemas import ProbParams, SimulationResult, ZeroUniverse
from answercheck.services.probability import failure_probability

logger = logging.getLogger(__name__)

# Ordered enumeration up to this many sequences, unordered subsets beyond
ORDERED_ENUMERATION_LIMIT = 200_000

# Membership by lookup table up to this universe size, np.isin beyond
_MASK_LIMIT = 10**7

# Universes small enough to draw by sorting random keys
_ARGSORT_LIMIT = 4096


def brute_force_probability(M: int, m: int, k: int) -> Fraction:
    """
    Fraction of ordered m-draws without replacement from [0, M) that land
    entirely inside the zero set {0, ..., k-1}, by exhaustive enumeration.
    """
    if M > settings.BRUTE_FORCE_MAX_M:
        raise UniverseTooLargeError(
            f"M={M} exceeds the enumeration limit {settings.BRUTE_FORCE_MAX_M}"
        )
    if not (1 <= m <= M and 0 <= k <= M):
        raise ValueError(f"need 1 <= m <= M and 0 <= k <= M, got M={M}, m={m}, k={k}")

    if math.perm(M, m) <= ORDERED_ENUMERATION_LIMIT:
        hits = total = 0
        for draw in itertools.permutations(range(M), m):
            total += 1
            if max(draw) < k:
                hits += 1
        return Fraction(hits, total)

    # each unordered subset stands for m! equally likely orders
    hits = total = 0
    for draw in itertools.combinations(range(M), m):
        total += 1
        if draw[-1] < k:
            hits += 1
    return Fraction(hits, total)


def _draw_distinct(rng: np.random.Generator, M: int, m: int, rows: int) -> np.ndarray:
    """rows independent ordered draws of m distinct indices from [0, M)."""
    if m == 1:
        return rng.integers(M, size=(rows, 1))
    if M <= _ARGSORT_LIMIT and m * (m - 1) > M:
        return np.argsort(rng.random((rows, M)), axis=1)[:, :m]
    if m * (m - 1) > M:
        return np.stack([rng.choice(M, size=m, replace=False) for _ in range(rows)])

    draws = rng.integers(M, size=(rows, m))
    while True:
        ordered = np.sort(draws, axis=1)
        clashing = (np.diff(ordered, axis=1) == 0).any(axis=1)
        if not clashing.any():
            return draws
        draws[clashing] = rng.integers(M, size=(int(clashing.sum()), m))


def _count_hits(u: ZeroUniverse, m: int, trials: int, sequence: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(sequence)
    zeros = np.fromiter(sorted(u.zero_indices), dtype=np.int64, count=u.k)
    mask = None
    if u.M <= _MASK_LIMIT:
        mask = np.zeros(u.M, dtype=bool)
        mask[zeros] = True

    rows_per_chunk = settings.SIMULATION_CHUNK
    if u.M <= _ARGSORT_LIMIT and m * (m - 1) > u.M:
        rows_per_chunk = max(1, settings.SIMULATION_CHUNK * 16 // u.M)

    hits = 0
    remaining = trials
    while remaining > 0:
        rows = min(rows_per_chunk, remaining)
        draws = _draw_distinct(rng, u.M, m, rows)
        inside = mask[draws] if mask is not None else np.isin(draws, zeros)
        hits += int(inside.all(axis=1).sum())
        remaining -= rows
    return hits


def _partition(trials: int, workers: int, seed: int) -> list[tuple[int, np.random.SeedSequence]]:
    """Split trials across worker streams spawned from seed."""
    streams = np.random.SeedSequence(seed).spawn(workers)
    base, extra = divmod(trials, workers)
    return [(base + (1 if i < extra else 0), streams[i]) for i in range(workers)]


def _validate(u: ZeroUniverse, m: int, trials: int, workers: int) -> None:
    if not 1 <= m <= u.M:
        raise ValueError(f"need 1 <= m <= M={u.M}, got m={m}")
    if trials < 1 or workers < 1:
        raise ValueError("trials and workers must be positive")


def _result(u: ZeroUniverse, m: int, trials: int, hits: int, seed: int, workers: int) -> SimulationResult:
    rate = hits / trials
    return SimulationResult(
        M=u.M, m=m, k=u.k, trials=trials, hits=hits,
        rate=rate, stderr=math.sqrt(rate * (1.0 - rate) / trials),
        seed=seed, workers=workers,
    )


def simulate_failure_rate(
    u: ZeroUniverse, m: int, trials: int, seed: int, workers: int = 1
) -> SimulationResult:
    """
    Empirical rate of m-draws that land entirely in the zero set.

    Reproducible at a fixed worker count: each worker owns a stream spawned
    from SeedSequence(seed).
    """
    _validate(u, m, trials, workers)
    hits = sum(_count_hits(u, m, n, stream) for n, stream in _partition(trials, workers, seed) if n)
    result = _result(u, m, trials, hits, seed, workers)
    logger.info(f"Simulated M={u.M} m={m} k={u.k}: rate={result.rate:.6g} ± {result.stderr:.2g}")
    return result


async def simulate_failure_rate_async(
    u: ZeroUniverse, m: int, trials: int, seed: int, workers: int = 1
) -> SimulationResult:
    """simulate_failure_rate with worker partitions run concurrently."""
    _validate(u, m, trials, workers)
    loop = asyncio.get_running_loop()
    counts = await asyncio.gather(*[
        loop.run_in_executor(None, functools.partial(_count_hits, u, m, n, stream))
        for n, stream in _partition(trials, workers, seed) if n
    ])
    return _result(u, m, trials, sum(counts), seed, workers)


def compare_simulation(
    u: ZeroUniverse, m: int, trials: int, seed: int, workers: int = 1
) -> SimulationResult:
    """Simulation plus the closed-form value and the z-score of the difference."""
    result = simulate_failure_rate(u, m, trials, seed, workers)
    formula = failure_probability(ProbParams(M=u.M, m=m, k=u.k)).value
    spread = math.sqrt(formula * (1.0 - formula) / trials)
    if spread > 0:
        z_score = (result.rate - formula) / spread
    else:
        z_score = 0.0 if result.rate == formula else None
    return result.model_copy(update={"formula": formula, "z_score": z_score})
