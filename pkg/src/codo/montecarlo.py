"""Sampling and exhaustive-enumeration oracles for the analytic p-values.

Nothing here calls the analytic kernels: every estimate comes from simulating
the defining random experiment or enumerating its outcomes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .significance import CodoExperimentParams, Density, required_edges
from .synthetic import RNG_ALGORITHM

__all__ = [
    "McEstimate",
    "ExactProbability",
    "EnumerationBudgetError",
    "OracleError",
    "mc_hgt",
    "mc_codo",
    "enum_codo",
    "enum_hgt",
    "mc_erd_exists",
    "BATCH_SIZE",
    "MAX_ERD_NODES",
]

BATCH_SIZE = 1 << 16
MAX_ERD_NODES = 14
DEFAULT_ENUM_BUDGET = 10**8
# cap on bytes of per-chunk boolean slot matrices in edge insertion
_SLOT_MATRIX_BYTES = 1 << 24


class OracleError(ValueError):
    """Oracle asked to run outside the regime it supports."""


class EnumerationBudgetError(OracleError):
    """Exhaustive enumeration refused: configuration count exceeds the budget."""


@dataclass(frozen=True)
class McEstimate:
    point: float
    stderr: float
    samples: int
    seed: int
    algorithm: str = RNG_ALGORITHM

    @classmethod
    def from_hits(cls, hits: int, samples: int, seed: int) -> "McEstimate":
        point = hits / samples
        return cls(point, math.sqrt(point * (1.0 - point) / samples), samples, seed)

    def zscore(self, value: float) -> float:
        """Standardized gap between an analytic probability and this estimate."""
        gap = self.point - value
        if self.stderr == 0.0:
            return 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
        return gap / self.stderr


@dataclass(frozen=True)
class ExactProbability:
    value: Fraction

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    @property
    def logprob(self) -> float:
        if self.value == 0:
            return -math.inf
        return math.log(self.value.numerator) - math.log(self.value.denominator)


def _batches(samples: int, seed: int):
    """Yield (size, generator) pairs; batch i draws from the stream (seed, i)."""
    if samples < 1:
        raise OracleError("samples must be >= 1")
    for index, start in enumerate(range(0, samples, BATCH_SIZE)):
        size = min(BATCH_SIZE, samples - start)
        yield size, np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _random_overlaps(rng: np.random.Generator, size: int, n: int, size_a: int, size_b: int) -> np.ndarray:
    """Overlap of a uniform size_a-subset of range(n) with the fixed set range(size_b)."""
    if size_a == 0 or size_b == 0:
        return np.zeros(size, dtype=np.int64)
    if size_a == n:
        return np.full(size, size_b, dtype=np.int64)
    keys = rng.random((size, n))
    chosen = np.argpartition(keys, size_a - 1, axis=1)[:, :size_a]
    return (chosen < size_b).sum(axis=1)


def mc_hgt(n: int, size_a: int, size_b: int, z_obs: int, samples: int, seed: int) -> McEstimate:
    """Fraction of uniform size_a-subsets meeting a fixed size_b-subset in >= z_obs nodes."""
    if not (0 <= size_a <= n and 0 <= size_b <= n and z_obs >= 0):
        raise OracleError("invalid subset sizes")
    hits = 0
    for size, rng in _batches(samples, seed):
        hits += int(np.count_nonzero(_random_overlaps(rng, size, n, size_a, size_b) >= z_obs))
    return McEstimate.from_hits(hits, samples, seed)


def _inserted_in_overlap(rng: np.random.Generator, rows: int, slots: int, edges: int, overlap_slots: int) -> np.ndarray:
    """Place ``edges`` distinct edges uniformly on ``slots`` pair slots (Floyd's
    algorithm, one sample per row) and count those landing on the first
    ``overlap_slots`` slots, i.e. pairs with both ends in the overlap.
    """
    complement = edges > slots // 2
    k = slots - edges if complement else edges
    counts = np.empty(rows, dtype=np.int64)
    chunk = max(1, _SLOT_MATRIX_BYTES // max(slots, 1))
    for start in range(0, rows, chunk):
        m = min(chunk, rows - start)
        taken = np.zeros((m, slots), dtype=bool)
        idx = np.arange(m)
        for t in range(slots - k, slots):
            r = rng.integers(0, t + 1, size=m)
            pick = np.where(taken[idx, r], t, r)
            taken[idx, pick] = True
        in_overlap = taken[:, :overlap_slots].sum(axis=1)
        counts[start : start + m] = overlap_slots - in_overlap if complement else in_overlap
    return counts


def mc_codo(params: CodoExperimentParams, samples: int, seed: int) -> McEstimate:
    """Simulate the CoDO experiment directly.

    Each sample draws A-hat, reads off the overlap size j, scatters
    ``edges_union`` edges over the pairs of A-hat u B-hat, and succeeds when
    j >= z_obs and the overlap holds at least ceil(rho_z * C(j, 2)) edges.
    Overlaps whose pair count cannot host ``edges_union`` edges succeed, as in
    the analytic convention.
    """
    n, a, b, e = params.n, params.size_a, params.size_b, params.edges_union
    hits = 0
    for size, rng in _batches(samples, seed):
        overlaps = _random_overlaps(rng, size, n, a, b)
        for j in np.unique(overlaps[overlaps >= params.z_obs]).tolist():
            rows = int(np.count_nonzero(overlaps == j))
            overlap_slots = j * (j - 1) // 2
            needed = required_edges(params.rho_z, overlap_slots)
            slots = (a + b - j) * (a + b - j - 1) // 2
            if needed == 0 or e > slots:
                hits += rows
                continue
            counts = _inserted_in_overlap(rng, rows, slots, e, overlap_slots)
            hits += int(np.count_nonzero(counts >= needed))
    return McEstimate.from_hits(hits, samples, seed)


def _count_combinations(slots: int, edges: int, overlap_slots: int, needed: int) -> int:
    """Number of edge placements with >= needed edges among the first overlap_slots slots,
    by listing every placement."""
    favorable = 0
    block = 1 << 18
    combos = itertools.combinations(range(slots), edges)
    while True:
        chunk = list(itertools.islice(combos, block))
        if not chunk:
            break
        arr = np.array(chunk, dtype=np.int32).reshape(len(chunk), edges)
        favorable += int(np.count_nonzero((arr < overlap_slots).sum(axis=1) >= needed))
    return favorable


def enum_codo(params: CodoExperimentParams, budget: int = DEFAULT_ENUM_BUDGET) -> ExactProbability:
    """Exact CoDO probability by listing every A-hat and every edge placement.

    The union's node pairs are listed explicitly for each drawn A-hat; slots
    whose endpoints both lie in the overlap are the overlap's pairs.
    Placements are listed once per distinct overlap pattern size and reused,
    since relabelling nodes does not change the count.
    """
    n, a, b, e = params.n, params.size_a, params.size_b, params.edges_union
    lo = max(0, a + b - n)
    worst = max(
        math.comb((a + b - j) * (a + b - j - 1) // 2, e)
        for j in range(lo, min(a, b) + 1)
    )
    if math.comb(n, a) * worst > budget:
        raise EnumerationBudgetError(
            f"{math.comb(n, a)} subsets x {worst} placements exceeds budget {budget}"
        )

    fixed_b = frozenset(range(b))
    memo: dict[int, Fraction] = {}
    total = Fraction(0)
    subsets = 0
    for a_hat in itertools.combinations(range(n), a):
        subsets += 1
        overlap = fixed_b.intersection(a_hat)
        j = len(overlap)
        if j < params.z_obs:
            continue
        if j not in memo:
            union = sorted(fixed_b.union(a_hat))
            pairs = list(itertools.combinations(union, 2))
            # overlap pairs first so they occupy the lowest slot indices
            pairs.sort(key=lambda uv: not (uv[0] in overlap and uv[1] in overlap))
            overlap_slots = sum(1 for u, v in pairs if u in overlap and v in overlap)
            needed = required_edges(params.rho_z, overlap_slots)
            slots = len(pairs)
            if needed == 0 or e > slots:
                memo[j] = Fraction(1)
            else:
                fav = _count_combinations(slots, e, overlap_slots, needed)
                memo[j] = Fraction(fav, math.comb(slots, e))
        total += memo[j]
    return ExactProbability(total / subsets)


def enum_hgt(n: int, size_a: int, size_b: int, z_obs: int) -> ExactProbability:
    """Exact overlap tail by listing all size_a-subsets."""
    fixed_b = frozenset(range(size_b))
    hits = total = 0
    for a_hat in itertools.combinations(range(n), size_a):
        total += 1
        hits += len(fixed_b.intersection(a_hat)) >= z_obs
    return ExactProbability(Fraction(hits, total))


_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << MAX_ERD_NODES)], dtype=np.int16)


def mc_erd_exists(
    n: int,
    p: float,
    size_z: int,
    rho_z: Density,
    samples: int,
    seed: int,
    batch: int = 256,
) -> McEstimate:
    """Fraction of sampled G(n, p) graphs holding a node set of size >= size_z
    with at least ceil(rho_z * C(s, 2)) induced edges, by checking every subset."""
    if n > MAX_ERD_NODES:
        raise OracleError(f"exhaustive subgraph search supports n <= {MAX_ERD_NODES}")
    if not 0.0 <= p <= 1.0:
        raise OracleError("edge probability outside [0, 1]")
    if samples < 1:
        raise OracleError("samples must be >= 1")
    masks = np.arange(1 << n)
    sizes = _POPCOUNT[masks]
    needed = np.array([required_edges(rho_z, s * (s - 1) // 2) for s in range(n + 1)], dtype=np.int16)
    eligible = sizes >= size_z
    threshold = needed[sizes]
    iu, ju = np.triu_indices(n, k=1)

    hits = 0
    done = 0
    index = 0
    while done < samples:
        g = min(batch, samples - done)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
        present = rng.random((g, len(iu))) < p
        adj = np.zeros((g, n), dtype=np.int64)
        for t in range(len(iu)):
            col = present[:, t].astype(np.int64)
            adj[:, iu[t]] |= col << ju[t]
            adj[:, ju[t]] |= col << iu[t]
        edges = np.zeros((g, 1 << n), dtype=np.int16)
        for k in range(n):
            low = masks[: 1 << k]
            # adding node k to subset `low` adds its neighbours inside `low`
            edges[:, (1 << k) + low] = edges[:, low] + _POPCOUNT[adj[:, k : k + 1] & low[None, :]]
        found = ((edges >= threshold[None, :]) & eligible[None, :]).any(axis=1)
        hits += int(np.count_nonzero(found))
        done += g
        index += 1
    return McEstimate.from_hits(hits, samples, seed)
