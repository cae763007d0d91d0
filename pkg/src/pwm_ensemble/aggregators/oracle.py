"""Best static aggregation weight vector in hindsight, by exhaustive enumeration.

A trace only matters through how often each +/-1 pattern of local
predictions occurs with each label, so every candidate weight vector is
scored against a (patterns x 2) count table rather than the raw trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..core import InvalidArgument, check_label, has_abstention

DEFAULT_WEIGHT_CAP = 5
EXACT_MAX_K = 4
DEFAULT_BUDGET = 2_000_000
_CHUNK_CELLS = 4_000_000


class BudgetExceeded(InvalidArgument):
    """Raised when the enumeration grid is larger than the allowed budget."""


@dataclass(frozen=True)
class StaticOracleResult:
    optimal_weights: tuple[int, ...]
    mistakes: int
    exact: bool
    n: int

    @property
    def p_opt(self) -> float:
        return self.mistakes / self.n


@dataclass(frozen=True)
class PatternCounts:
    """Distinct prediction patterns (with the leading 1) and label counts per pattern."""

    patterns: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray

    @property
    def k(self) -> int:
        return self.patterns.shape[1] - 1

    @property
    def n(self) -> int:
        return int(self.positives.sum() + self.negatives.sum())

    def mistakes(self, w: Sequence[int]) -> int:
        pos = self.patterns @ np.asarray(w, dtype=np.int64) >= 0
        return int(self.negatives[pos].sum() + self.positives[~pos].sum())


def count_patterns(trace: Iterable[tuple[Sequence[int], int]]) -> PatternCounts:
    table: dict[tuple[int, ...], list[int]] = {}
    k = None
    for s, y in trace:
        check_label(y)
        if k is None:
            k = len(s) - 1
            if k < 1:
                raise InvalidArgument("prediction vectors need at least one learner")
        elif len(s) != k + 1:
            raise InvalidArgument("prediction vectors in a trace must share one length")
        if has_abstention(s):
            raise InvalidArgument("the static oracle needs abstention-free prediction vectors")
        row = table.setdefault(tuple(s), [0, 0])
        row[0 if y == 1 else 1] += 1
    if not table:
        raise InvalidArgument("the trace is empty")
    keys = sorted(table)
    counts = np.array([table[p] for p in keys], dtype=np.int64)
    return PatternCounts(np.array(keys, dtype=np.int64), counts[:, 0], counts[:, 1])


@lru_cache(maxsize=16)
def weight_grid(dim: int, cap: int) -> np.ndarray:
    """All integer vectors in [-cap, cap]^dim in lexicographic order."""
    axes = [np.arange(-cap, cap + 1, dtype=np.int64)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    grid.flags.writeable = False
    return grid


def grid_size(k: int, cap: int) -> int:
    return (2 * cap + 1) ** (k + 1)


def _argmin_over(grid: np.ndarray, counts: PatternCounts) -> tuple[int, int]:
    # mistakes(w) = sum(positives) + sum over patterns predicted +1 of (neg - pos)
    # float64 keeps these small-integer products exact and lets BLAS do the work
    delta = (counts.negatives - counts.positives).astype(np.float64)
    patterns_t = counts.patterns.T.astype(np.float64)
    base = int(counts.positives.sum())
    rows = max(1, _CHUNK_CELLS // len(delta))
    best_idx, best = -1, None
    for start in range(0, len(grid), rows):
        block = grid[start:start + rows].astype(np.float64)
        scores = (block @ patterns_t >= 0).astype(np.float64) @ delta
        i = int(np.argmin(scores))
        if best is None or scores[i] < best:
            best, best_idx = int(scores[i]), start + i
    return best_idx, base + best


def optimal_static_oracle(
    trace: Iterable[tuple[Sequence[int], int]] | PatternCounts,
    weight_cap: int = DEFAULT_WEIGHT_CAP,
    budget: int = DEFAULT_BUDGET,
) -> StaticOracleResult:
    """Enumerate every weight vector in [-weight_cap, weight_cap]^(K+1).

    Ties go to the lexicographically smallest vector. The result is flagged
    exact for K <= 4 with weight_cap >= 5, where the grid realizes every
    linear threshold function of the local predictions; otherwise the
    mistake count is only an upper bound on the true minimum.
    """
    if weight_cap < 1:
        raise InvalidArgument("weight_cap must be >= 1")
    counts = trace if isinstance(trace, PatternCounts) else count_patterns(trace)
    k = counts.k
    size = grid_size(k, weight_cap)
    if size > budget:
        raise BudgetExceeded(
            f"K={k} with weight_cap={weight_cap} needs {size} candidates (budget {budget}); "
            "lower weight_cap"
        )
    grid = weight_grid(k + 1, weight_cap)
    idx, mistakes = _argmin_over(grid, counts)
    return StaticOracleResult(
        optimal_weights=tuple(int(v) for v in grid[idx]),
        mistakes=mistakes,
        exact=k <= EXACT_MAX_K and weight_cap >= DEFAULT_WEIGHT_CAP,
        n=counts.n,
    )


def _fallback_candidates(k: int) -> list[tuple[int, ...]]:
    cands = [(1,) + (0,) * k, (-1,) + (0,) * k, (0,) + (1,) * k]
    for j in range(1, k + 1):
        for sgn in (1, -1):
            w = [0] * (k + 1)
            w[j] = sgn
            cands.append(tuple(w))
    return sorted(cands)


def estimate_static_optimum(
    trace: Iterable[tuple[Sequence[int], int]] | PatternCounts,
    budget: int = DEFAULT_BUDGET,
) -> StaticOracleResult:
    """Exact oracle where affordable, otherwise the best upper estimate within budget.

    For large K the grid cap is lowered until it fits; when even cap 1 does
    not fit, a handful of static rules (constants, single learners, average
    majority) are scored instead.
    """
    counts = trace if isinstance(trace, PatternCounts) else count_patterns(trace)
    k = counts.k
    for cap in range(DEFAULT_WEIGHT_CAP, 0, -1):
        if grid_size(k, cap) <= budget:
            return optimal_static_oracle(counts, cap, budget)
    scored = [(counts.mistakes(w), w) for w in _fallback_candidates(k)]
    mistakes, w = min(scored)
    return StaticOracleResult(optimal_weights=w, mistakes=mistakes, exact=False, n=counts.n)
