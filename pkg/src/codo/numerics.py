"""Log-space combinatorics and discrete distribution kernels.

Every probability returned here is a natural log (``LogProb``): ``0.0`` is
probability one and ``-inf`` is probability zero.  Tail sums are evaluated
around the mode of a log-concave pmf and accumulated with an exactly rounded
sum (``math.fsum``) after a max shift.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "TOLERANCES",
    "Tolerances",
    "HypergeomParams",
    "ParameterError",
    "LogProb",
    "log_factorial",
    "log_choose",
    "log_sum_exp",
    "hypergeom_logpmf",
    "hypergeom_logtail",
    "hypergeom_mode",
    "kappa",
    "hypergeom_ldp_bound",
    "binomial_logpmf",
    "binomial_logtail",
    "clamp_logprob",
]

LogProb = float

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Tolerances:
    """Numerical constants shared by the library and its tests."""

    pmf_normalization: float = 1e-9
    log_choose_abs: float = 1e-10
    logprob_clamp: float = 1e-12
    # slack subtracted before ceil(rho * pairs) when rho is a float
    density_ceil: float = 1e-9
    # tail truncation: drop mass below exp(-truncation_nats) of the running sum
    truncation_nats: float = 45.0
    # spans at or below this size are summed in full, never truncated
    exact_span: int = 1 << 16
    log_factorial_cap: int = 2_000_000


TOLERANCES = Tolerances()


class ParameterError(ValueError):
    """Distribution parameters outside their domain."""


# -- log factorials ---------------------------------------------------------


class _LogFactorialTable:
    """ln(k!) for k < size, grown by doubling up to ``cap``."""

    def __init__(self, cap: int, initial: int = 4096):
        self.cap = cap
        self._lock = threading.Lock()
        self._values = gammaln(np.arange(min(initial, cap) + 1, dtype=np.float64) + 1.0)

    def _grow(self, needed: int) -> np.ndarray:
        with self._lock:
            values = self._values
            if needed < len(values):
                return values
            size = len(values)
            while size <= needed:
                size *= 2
            size = min(size, self.cap + 1)
            self._values = gammaln(np.arange(size, dtype=np.float64) + 1.0)
            return self._values

    def lookup(self, k):
        k = np.asarray(k)
        values = self._values
        top = int(k.max()) if k.size else 0
        if top >= len(values):
            if top > self.cap:
                return gammaln(k.astype(np.float64) + 1.0)
            values = self._grow(top)
        return values[k]


_LOG_FACTORIALS = _LogFactorialTable(TOLERANCES.log_factorial_cap)


def log_factorial(k):
    """ln(k!) for non-negative integers (scalar or array)."""
    out = _LOG_FACTORIALS.lookup(np.asarray(k, dtype=np.int64))
    return float(out) if np.ndim(out) == 0 else out


# Stirling remainder ln(k!) - [(k + 1/2) ln k - k + ln(2 pi)/2]; exact values
# for small k, asymptotic series beyond.
_STIRLERR_SMALL = np.array(
    [0.0]
    + [
        math.lgamma(k + 1.0) - ((k + 0.5) * math.log(k) - k + 0.5 * _LOG_2PI)
        for k in range(1, 16)
    ]
)


def _stirlerr(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    out = np.empty_like(k)
    small = k <= 15
    if np.any(small):
        out[small] = _STIRLERR_SMALL[k[small].astype(np.int64)]
    big = ~small
    if np.any(big):
        kb = k[big]
        inv = 1.0 / kb
        inv2 = inv * inv
        out[big] = inv * (
            1.0 / 12
            - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 * (1.0 / 1680 - inv2 / 1188)))
        )
    return out


_DIRECT_TABLE_MAX = 4096


def log_choose(n, k):
    """Natural log of the binomial coefficient C(n, k).

    Out-of-range ``k`` gives ``-inf``.  Accepts scalars or broadcastable
    integer arrays; each element's value does not depend on the others.
    For n <= 4096 the result is a difference of tabulated log-factorials
    (ln n! stays below ~3e4 there, so the cancellation costs ~1e-11).  Larger
    n expands ln n! - ln k! - ln (n-k)! through Stirling's formula so the
    large leading terms cancel analytically, which keeps the absolute error at
    a few ulps of the result even when the factorials themselves are ~1e7.
    """
    scalar = np.ndim(n) == 0 and np.ndim(k) == 0
    n = np.asarray(n, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    if np.any(n < 0):
        raise ParameterError("log_choose requires n >= 0")
    n, k = np.broadcast_arrays(n, k)
    valid = (k >= 0) & (k <= n)
    out = np.full(n.shape, -np.inf)
    table = valid & (n <= _DIRECT_TABLE_MAX)
    if np.any(table):
        nt, kt = n[table], k[table]
        out[table] = log_factorial(nt) - log_factorial(kt) - log_factorial(nt - kt)
    kk = np.minimum(k, n - k)
    big = valid & ~table
    out[big & (kk == 0)] = 0.0
    work = big & (kk > 0)
    if np.any(work):
        nw = n[work].astype(np.float64)
        kw = kk[work].astype(np.float64)
        rest = nw - kw
        val = (
            kw * np.log(nw / kw)
            - rest * np.log1p(-kw / nw)
            + 0.5 * (np.log(nw / (kw * rest)) - _LOG_2PI)
            + _stirlerr(nw)
            - _stirlerr(kw)
            - _stirlerr(rest)
        )
        out[work] = val
    if scalar:
        return float(out)
    return out


def log_sum_exp(values) -> float:
    """ln(sum(exp(values))) with a max shift and an exactly rounded sum."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        return -math.inf
    top = float(arr.max())
    if top == -math.inf:
        return -math.inf
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(np.exp(arr - top)))


def clamp_logprob(value: float) -> float:
    """Clamp a log-probability to <= 0; NaN is a bug, not a probability."""
    if math.isnan(value):
        raise FloatingPointError("log-probability evaluated to NaN")
    return value if value < 0.0 else 0.0


# -- hypergeometric ---------------------------------------------------------


@dataclass(frozen=True)
class HypergeomParams:
    """Population ``population`` with ``successes`` marked, ``trials`` draws."""

    population: int
    successes: int
    trials: int

    def __post_init__(self):
        N, K, m = self.population, self.successes, self.trials
        if min(N, K, m) < 0:
            raise ParameterError(f"negative hypergeometric parameter in {self}")
        if K > N or m > N:
            raise ParameterError(f"successes and trials must not exceed population in {self}")

    @property
    def support(self) -> tuple[int, int]:
        return max(0, self.trials + self.successes - self.population), min(self.trials, self.successes)

    @property
    def mean(self) -> float:
        if self.population == 0:
            return 0.0
        return self.trials * self.successes / self.population


def hypergeom_mode(params: HypergeomParams) -> int:
    lo, hi = params.support
    mode = (params.trials + 1) * (params.successes + 1) // (params.population + 2)
    return min(max(mode, lo), hi)


def _hypergeom_logpmf_array(params: HypergeomParams, x: np.ndarray) -> np.ndarray:
    N, K, m = params.population, params.successes, params.trials
    return log_choose(K, x) + log_choose(N - K, m - x) - log_choose(N, m)


def hypergeom_logpmf(params: HypergeomParams, x):
    """ln Pr[X = x] for X ~ Hypergeometric(population, successes, trials)."""
    out = _hypergeom_logpmf_array(params, np.asarray(x, dtype=np.int64))
    return float(out) if np.ndim(out) == 0 else out


def _logconcave_tail(logpmf, first: int, last: int, mode: int) -> float:
    """ln sum_{x=first}^{last} pmf(x) for a log-concave pmf with the given mode.

    Short ranges are summed in full.  Long ranges are summed outward from the
    peak in chunks; a side stops once the geometric bound on everything
    beyond it (valid because ratios of consecutive terms only shrink away
    from the mode) falls below exp(-truncation_nats) of the running total.
    """
    if first > last:
        return -math.inf
    if last - first + 1 <= TOLERANCES.exact_span:
        return log_sum_exp(logpmf(np.arange(first, last + 1, dtype=np.int64)))

    chunk = 4096
    cut = TOLERANCES.truncation_nats
    peak = min(max(mode, first), last)
    pieces = []

    def total() -> float:
        return log_sum_exp(np.concatenate(pieces)) if pieces else -math.inf

    start = peak
    while start <= last:
        stop = min(start + chunk, last + 1)
        terms = logpmf(np.arange(start, stop, dtype=np.int64))
        pieces.append(terms)
        start = stop
        if start > last or len(terms) < 2:
            continue
        log_ratio = terms[-1] - terms[-2]
        if log_ratio < 0:
            bound = terms[-1] + log_ratio - math.log(-math.expm1(log_ratio))
            if bound < total() - cut:
                break

    stop = peak
    while stop > first:
        start = max(stop - chunk, first)
        terms = logpmf(np.arange(start, stop, dtype=np.int64))
        pieces.append(terms)
        stop = start
        if stop <= first or len(terms) < 2:
            continue
        log_ratio = terms[0] - terms[1]
        if log_ratio < 0:
            bound = terms[0] + log_ratio - math.log(-math.expm1(log_ratio))
            if bound < total() - cut:
                break

    return total()


def hypergeom_logtail(params: HypergeomParams, x: int) -> LogProb:
    """ln Pr[X >= x]."""
    lo, hi = params.support
    if x <= lo:
        return 0.0
    if x > hi:
        return -math.inf
    value = _logconcave_tail(
        lambda xs: _hypergeom_logpmf_array(params, xs), int(x), hi, hypergeom_mode(params)
    )
    return clamp_logprob(value)


# -- relative entropy and large deviations ------------------------------------


def kappa(a: float, b: float) -> float:
    """Relative entropy (nats) between Bernoulli(a) and Bernoulli(b)."""
    if not 0.0 < b < 1.0:
        raise ParameterError(f"kappa reference probability must lie in (0, 1), got {b}")
    if not 0.0 <= a <= 1.0:
        raise ParameterError(f"kappa argument must lie in [0, 1], got {a}")
    total = 0.0
    if a > 0.0:
        total += a * math.log(a / b)
    if a < 1.0:
        total += (1.0 - a) * (math.log1p(-a) - math.log1p(-b))
    return max(total, 0.0)


def hypergeom_ldp_bound(params: HypergeomParams, delta: float) -> LogProb:
    """ln of exp(-m * kappa((1+delta) p, p)), p = K/N, bounding Pr[X >= (1+delta) E X]."""
    if delta < 0:
        raise ParameterError("delta must be non-negative")
    if params.population == 0:
        raise ParameterError("empty population")
    p = params.successes / params.population
    target = (1.0 + delta) * p
    if target > 1.0:
        return -math.inf
    if p in (0.0, 1.0):
        # degenerate reference: X is constant, so the bound holds trivially at 1
        return 0.0 if delta == 0 or p == 0.0 else -math.inf
    return -params.trials * kappa(target, p)


# -- binomial -----------------------------------------------------------------


def binomial_logpmf(trials: int, prob: float, x):
    x = np.asarray(x, dtype=np.int64)
    if prob == 0.0:
        out = np.where(x == 0, 0.0, -np.inf)
    elif prob == 1.0:
        out = np.where(x == trials, 0.0, -np.inf)
    else:
        out = log_choose(trials, x) + x * math.log(prob) + (trials - x) * math.log1p(-prob)
        out = np.where((x < 0) | (x > trials), -np.inf, out)
    return float(out) if np.ndim(out) == 0 else out


def binomial_logtail(trials: int, prob: float, x: int) -> LogProb:
    """ln Pr[Bin(trials, prob) >= x]."""
    if not 0.0 <= prob <= 1.0:
        raise ParameterError(f"binomial probability must lie in [0, 1], got {prob}")
    if trials < 0:
        raise ParameterError("binomial trials must be non-negative")
    if x <= 0:
        return 0.0
    if x > trials:
        return -math.inf
    if prob == 0.0:
        return -math.inf
    if prob == 1.0:
        return 0.0
    mode = min(int((trials + 1) * prob), trials)
    value = _logconcave_tail(lambda xs: binomial_logpmf(trials, prob, xs), int(x), trials, mode)
    return clamp_logprob(value)
