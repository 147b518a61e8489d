"""Overlap p-values: hypergeometric tail (HGT), Erdos-Renyi density (ERD) and
the combined density/overlap test (CoDO), plus threshold points and
Bonferroni correction.  All values are natural-log probabilities.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .graphcore import OverlapStats
from .numerics import (
    TOLERANCES,
    HypergeomParams,
    LogProb,
    ParameterError,
    binomial_logpmf,
    binomial_logtail,
    clamp_logprob,
    hypergeom_logpmf,
    hypergeom_logtail,
    kappa,
    log_choose,
    log_sum_exp,
)

__all__ = [
    "Density",
    "CodoExperimentParams",
    "SignificanceReport",
    "required_edges",
    "hgt_pvalue",
    "erd_pvalue",
    "erd_is_vacuous",
    "erd_size_threshold",
    "density_logtail",
    "codo_pvalue",
    "codo_term_count",
    "threshold_point_z",
    "threshold_point_rho",
    "bonferroni",
    "score_overlap",
]

Density = Union[float, Fraction]

LOG_HALF = math.log(0.5)

# ERD series: stop after this many consecutive negligible, decreasing terms
ERD_STAGNATION_RUN = 50
ERD_STAGNATION_DELTA = 1e-12


def _pairs(k: int) -> int:
    return k * (k - 1) // 2


def required_edges(rho: Density, pairs: int) -> int:
    """Smallest edge count on ``pairs`` slots whose density is at least ``rho``."""
    if pairs <= 0 or rho <= 0:
        return 0
    if isinstance(rho, (Fraction, int)):
        return math.ceil(Fraction(rho) * pairs)
    return max(0, math.ceil(rho * pairs - TOLERANCES.density_ceil))


@dataclass(frozen=True)
class CodoExperimentParams:
    """Inputs of the CoDO experiment: draw A-hat against a fixed B-hat among
    ``n`` nodes, then scatter ``edges_union`` edges over A-hat u B-hat."""

    n: int
    size_a: int
    size_b: int
    edges_union: int
    z_obs: int
    rho_z: Density

    def __post_init__(self):
        if min(self.n, self.size_a, self.size_b, self.edges_union, self.z_obs) < 0:
            raise ParameterError(f"negative field in {self}")
        if max(self.size_a, self.size_b) > self.n:
            raise ParameterError("subgraph larger than the ambient graph")
        if self.z_obs > min(self.size_a, self.size_b):
            raise ParameterError("observed overlap exceeds min(|A|, |B|)")
        if self.edges_union > _pairs(self.size_a + self.size_b - self.z_obs):
            raise ParameterError("edges_union exceeds the pairs available in A u B")
        if not 0 <= self.rho_z <= 1:
            raise ParameterError("rho_z must lie in [0, 1]")

    @classmethod
    def from_stats(cls, stats: OverlapStats) -> "CodoExperimentParams":
        return cls(
            n=stats.n,
            size_a=stats.size_a,
            size_b=stats.size_b,
            edges_union=stats.edges_union,
            z_obs=stats.size_z,
            rho_z=stats.overlap_density,
        )


# -- HGT ----------------------------------------------------------------------


def hgt_pvalue(n: int, size_a: int, size_b: int, z_obs: int) -> LogProb:
    """ln Pr[|A-hat n B-hat| >= z_obs] for a uniform |A|-subset against a fixed |B|-subset."""
    if z_obs < 0:
        raise ParameterError("overlap size must be non-negative")
    if z_obs > min(size_a, size_b):
        raise ParameterError("observed overlap exceeds min(|A|, |B|)")
    return hypergeom_logtail(HypergeomParams(n, size_b, size_a), z_obs)


# -- ERD ----------------------------------------------------------------------


def erd_is_vacuous(p: float, rho_z: Density) -> bool:
    return rho_z <= p


def erd_pvalue(n: int, p: float, size_z: int, rho_z: Density, exact_density: bool = False) -> LogProb:
    """First-moment bound on Pr[G(n, p) has a subgraph of size >= size_z and density >= rho_z].

    The expected number of such subgraphs, sum_s C(n, s) Pr[Bin(C(s,2), p) >= ceil(rho C(s,2))],
    clamped to probability one.  With ``exact_density`` the edge count must equal
    rho * C(s, 2) exactly; sizes where that is not an integer contribute nothing.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"edge probability must lie in (0, 1), got {p}")
    if size_z < 2:
        raise ParameterError("ERD needs an overlap of at least two nodes")
    if size_z > n:
        raise ParameterError("overlap larger than the graph")
    if not 0 <= rho_z <= 1:
        raise ParameterError("rho_z must lie in [0, 1]")
    if not exact_density and erd_is_vacuous(p, rho_z):
        return 0.0

    acc = -math.inf
    prev_term = math.inf
    quiet = 0
    for s in range(size_z, n + 1):
        pairs = _pairs(s)
        if exact_density:
            count = rho_z * pairs
            k = round(count)
            if abs(count - k) > TOLERANCES.density_ceil:
                continue
            edge_term = binomial_logpmf(pairs, p, k)
        else:
            edge_term = binomial_logtail(pairs, p, required_edges(rho_z, pairs))
        term = log_choose(n, s) + edge_term
        new_acc = float(np.logaddexp(acc, term))
        if new_acc >= 0.0:
            return 0.0
        if term < prev_term and new_acc - acc < ERD_STAGNATION_DELTA:
            quiet += 1
            if quiet >= ERD_STAGNATION_RUN:
                acc = new_acc
                break
        else:
            quiet = 0
        acc = new_acc
        prev_term = term
    return clamp_logprob(acc)


def erd_size_threshold(n: int, p: float, rho_z: float) -> float:
    """Size 2 ln(n) / kappa(rho_z, p) where expected dense-subgraph counts switch from growing to vanishing."""
    if not 0.0 < p < 1.0:
        raise ParameterError("edge probability must lie in (0, 1)")
    k = kappa(float(rho_z), p)
    if k == 0.0:
        raise ParameterError("rho_z equals p: the size threshold diverges")
    return 2.0 * math.log(n) / k


# -- CoDO ---------------------------------------------------------------------


@lru_cache(maxsize=1 << 16)
def _density_logtail_cached(union_pairs: int, overlap_pairs: int, edges_union: int, needed: int) -> float:
    return hypergeom_logtail(HypergeomParams(union_pairs, overlap_pairs, edges_union), needed)


def density_logtail(size_a: int, size_b: int, edges_union: int, j: int, rho_z: Density) -> LogProb:
    """ln Pr[density of the overlap >= rho_z | overlap size j].

    Edges inside the overlap follow Hypergeometric(C(|A|+|B|-j, 2), C(j, 2), edges_union).
    Overlaps with fewer than two nodes, and placements that cannot fit
    ``edges_union`` edges, count as satisfying the density condition.
    """
    overlap_pairs = _pairs(j)
    needed = required_edges(rho_z, overlap_pairs)
    if needed == 0:
        return 0.0
    union_pairs = _pairs(size_a + size_b - j)
    if edges_union > union_pairs:
        return 0.0
    return _density_logtail_cached(union_pairs, overlap_pairs, edges_union, needed)


def _codo(n: int, size_a: int, size_b: int, edges_union: int, z_obs: int, rho_z: Density) -> tuple[float, int]:
    outer = HypergeomParams(n, size_b, size_a)
    lo, hi = outer.support
    start = max(z_obs, lo)
    if start > hi:
        return -math.inf, 0
    js = np.arange(start, hi + 1, dtype=np.int64)
    tails = np.array([density_logtail(size_a, size_b, edges_union, int(j), rho_z) for j in js])
    if not np.any(tails):
        # every density factor is one: the test is exactly the hypergeometric tail
        return hgt_pvalue(n, size_a, size_b, z_obs), len(js)
    terms = hypergeom_logpmf(outer, js) + tails
    return clamp_logprob(log_sum_exp(terms)), len(js)


def codo_pvalue(params: CodoExperimentParams) -> LogProb:
    """ln Pr[|A-hat n B-hat| >= z_obs and density(A-hat n B-hat) >= rho_z].

    Summed over the overlap size j as Pr[overlap = j] * Pr[density >= rho_z | j].
    """
    value, _ = _codo(params.n, params.size_a, params.size_b, params.edges_union, params.z_obs, params.rho_z)
    return value


def codo_term_count(params: CodoExperimentParams) -> int:
    lo, hi = HypergeomParams(params.n, params.size_b, params.size_a).support
    return max(0, hi - max(params.z_obs, lo) + 1)


def threshold_point_z(n: int, size_a: int, size_b: int, edges_union: int, rho_z: Density) -> Optional[float]:
    """Smallest overlap fraction j/M (M = min(|A|, |B|)) with CoDO p-value <= 1/2.

    CoDO is non-increasing in the overlap size, so the ascending scan stops at
    the first qualifying j.  Sizes at which ``edges_union`` no longer fits in
    the union follow the density-tail convention of :func:`density_logtail`.
    """
    M = min(size_a, size_b)
    if M < 1:
        raise ParameterError("threshold point needs min(|A|, |B|) >= 1")
    if not 0 <= rho_z <= 1:
        raise ParameterError("rho_z must lie in [0, 1]")
    for j in range(1, M + 1):
        value, _ = _codo(n, size_a, size_b, edges_union, j, rho_z)
        if value <= LOG_HALF:
            return j / M
    return None


def threshold_point_rho(
    n: int,
    size_a: int,
    size_b: int,
    edges_union: int,
    z_obs: int,
    grid: Optional[Sequence[Density]] = None,
) -> Optional[float]:
    """Smallest density on ``grid`` at which the CoDO p-value at overlap z_obs is <= 1/2.

    The default grid is k / C(z_obs, 2), k = 0..C(z_obs, 2).  CoDO is
    non-increasing in the density, so the grid is bisected.
    """
    if z_obs < 2:
        raise ParameterError("density threshold needs an overlap of at least two nodes")
    if z_obs > min(size_a, size_b):
        raise ParameterError("observed overlap exceeds min(|A|, |B|)")
    if grid is None:
        pairs = _pairs(z_obs)
        grid = [Fraction(k, pairs) for k in range(pairs + 1)]
    else:
        grid = sorted(grid)

    class _Significant:
        def __getitem__(self, i):
            value, _ = _codo(n, size_a, size_b, edges_union, z_obs, grid[i])
            return value <= LOG_HALF

        def __len__(self):
            return len(grid)

    idx = bisect.bisect_left(_Significant(), True)
    if idx == len(grid):
        return None
    return float(grid[idx])


def bonferroni(p: LogProb, tests: int) -> LogProb:
    if tests < 1:
        raise ParameterError("Bonferroni correction needs at least one test")
    return min(0.0, p + math.log(tests))


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class SignificanceReport:
    stats: OverlapStats
    hgt: LogProb
    erd: LogProb
    codo: LogProb
    codo_terms: int
    corrected: Optional[LogProb] = None
    erd_vacuous: bool = False
    id_a: Optional[str] = None
    id_b: Optional[str] = None

    def with_correction(self, tests: int) -> "SignificanceReport":
        return replace(self, corrected=bonferroni(self.codo, tests))


def score_overlap(
    stats: OverlapStats,
    p: Optional[float] = None,
    *,
    exact_density: bool = False,
    id_a: Optional[str] = None,
    id_b: Optional[str] = None,
) -> SignificanceReport:
    """All three p-values for one observed pair of subgraphs.

    ``p`` defaults to ``stats.ambient_p``.  ERD is reported as probability one
    (and flagged vacuous) when the overlap has fewer than two nodes or is no
    denser than the background.
    """
    p = stats.ambient_p if p is None else p
    if p is None:
        raise ParameterError("ERD needs the background edge probability p")
    rho = stats.overlap_density
    hgt = hgt_pvalue(stats.n, stats.size_a, stats.size_b, stats.size_z)
    if stats.size_z < 2:
        erd, vacuous = 0.0, True
    else:
        vacuous = not exact_density and erd_is_vacuous(p, rho)
        erd = erd_pvalue(stats.n, p, stats.size_z, rho, exact_density=exact_density)
    value, terms = _codo(stats.n, stats.size_a, stats.size_b, stats.edges_union, stats.size_z, rho)
    return SignificanceReport(
        stats=stats, hgt=hgt, erd=erd, codo=value, codo_terms=terms, erd_vacuous=vacuous, id_a=id_a, id_b=id_b
    )
