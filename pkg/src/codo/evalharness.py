"""Ground truth and method comparison: feature-overlap gold standard, ROC/AUC,
Spearman correlation, and significant-pair network export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .graphcore import NodeSet, overlap_stats
from .numerics import HypergeomParams, LogProb, hypergeom_logtail
from .significance import SignificanceReport, bonferroni, score_overlap
from .synthetic import SyntheticSpec, derive_seed, generate

__all__ = [
    "EvaluationError",
    "FeatureMatrix",
    "LabeledPair",
    "GoldStandard",
    "RocResult",
    "NetworkExport",
    "shared_feature_counts",
    "feature_overlap_pvalue",
    "gold_standard",
    "roc_auc",
    "mann_whitney_auc",
    "spearman",
    "pathway_coactivity",
    "export_significant_network",
    "labeled_suite",
    "METHODS",
]

METHODS = ("hgt", "erd", "codo")


class EvaluationError(ValueError):
    """Evaluation inputs that admit no well-defined answer."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Binary node-by-feature membership indicators."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise EvaluationError("feature matrix must be two-dimensional")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise EvaluationError("feature matrix must be binary")
        object.__setattr__(self, "bits", bits.astype(np.uint8))

    @property
    def nodes(self) -> int:
        return self.bits.shape[0]

    @property
    def features(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    score: LogProb
    truth: bool

    def __post_init__(self):
        if self.id_a == self.id_b:
            raise EvaluationError("a pair needs two distinct ids")


def shared_feature_counts(fm: FeatureMatrix, subset: Optional[NodeSet] = None) -> tuple[int, int]:
    """(feature pairs, shared feature coincidences) over all node pairs in ``subset``.

    A node pair shares feature f when both nodes carry it, so column f
    contributes C(c_f, 2) coincidences where c_f is its column count.
    """
    bits = fm.bits
    if subset is not None:
        members = np.asarray(subset.members, dtype=np.int64)
        if members.size and (members[0] < 0 or members[-1] >= fm.nodes):
            raise EvaluationError("subset outside the feature matrix rows")
        bits = bits[members]
    m = bits.shape[0]
    counts = bits.sum(axis=0, dtype=np.int64)
    shared = int((counts * (counts - 1) // 2).sum())
    return fm.features * (m * (m - 1) // 2), shared


def feature_overlap_pvalue(fm: FeatureMatrix, overlap: NodeSet) -> LogProb:
    """Hypergeometric tail of shared features inside ``overlap`` against all node pairs."""
    if len(overlap) < 2:
        raise EvaluationError("feature overlap p-value needs at least two nodes")
    pairs, shared = shared_feature_counts(fm)
    pairs_o, shared_o = shared_feature_counts(fm, overlap)
    return hypergeom_logtail(HypergeomParams(pairs, shared, pairs_o), shared_o)


@dataclass(frozen=True)
class GoldStandard:
    truths: dict
    pvalues: dict
    excluded: tuple
    tests: int


def gold_standard(
    fm: FeatureMatrix,
    circle_pairs: Sequence[tuple[str, str, NodeSet, NodeSet]],
    alpha: float = 0.05,
) -> GoldStandard:
    """Label circle pairs significantly correlated by feature overlap.

    ``circle_pairs`` holds (id_a, id_b, set_a, set_b).  Pairs whose overlap has
    fewer than two nodes are excluded; the rest are Bonferroni-corrected over
    the number of tested pairs and compared with ``alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise EvaluationError("alpha must lie in (0, 1)")
    tested = []
    excluded = []
    for id_a, id_b, a, b in circle_pairs:
        overlap = a.intersection(b)
        if len(overlap) < 2:
            excluded.append((id_a, id_b))
        else:
            tested.append((id_a, id_b, overlap))
    raw = {(ia, ib): feature_overlap_pvalue(fm, o) for ia, ib, o in tested}
    tests = len(tested)
    log_alpha = math.log(alpha)
    truths = {key: bonferroni(p, tests) <= log_alpha for key, p in raw.items()}
    return GoldStandard(truths=truths, pvalues=raw, excluded=tuple(sorted(excluded)), tests=tests)


@dataclass(frozen=True)
class RocResult:
    curve: list
    auc: float


def roc_auc(pairs: Sequence[LabeledPair], tie_seed: Optional[int] = None) -> RocResult:
    """ROC curve ranking pairs by ascending score (most significant first).

    With ``tie_seed`` equal scores are put in a seeded random order and the
    curve steps through them one pair at a time.  Without a seed each group of
    equal scores is a single diagonal segment, so the trapezoid area equals
    the Mann-Whitney statistic with half credit for ties.
    """
    pos = sum(1 for p in pairs if p.truth)
    neg = len(pairs) - pos
    if pos == 0 or neg == 0:
        raise EvaluationError("ROC needs at least one positive and one negative pair")
    if tie_seed is None:
        order = sorted(range(len(pairs)), key=lambda i: (pairs[i].score, pairs[i].id_a, pairs[i].id_b))
        group = [pairs[i].score for i in order]
    else:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(tie_seed)))
        tiebreak = rng.permutation(len(pairs)).tolist()
        order = sorted(range(len(pairs)), key=lambda i: (pairs[i].score, tiebreak[i]))
        group = list(range(len(order)))
    tp = fp = 0
    curve = [(0.0, 0.0)]
    for k, i in enumerate(order):
        if pairs[i].truth:
            tp += 1
        else:
            fp += 1
        if k + 1 == len(order) or group[k + 1] != group[k]:
            curve.append((fp / neg, tp / pos))
    xs = np.array([c[0] for c in curve])
    ys = np.array([c[1] for c in curve])
    auc = float(np.sum((xs[1:] - xs[:-1]) * (ys[1:] + ys[:-1]) / 2.0))
    return RocResult(curve=curve, auc=min(max(auc, 0.0), 1.0))


def mann_whitney_auc(scores: Sequence[float], truths: Sequence[bool]) -> float:
    """Normalized Mann-Whitney U with positives expected to score lower; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=bool)
    ranks = rankdata(-scores)
    pos = int(truths.sum())
    neg = len(truths) - pos
    u = ranks[truths].sum() - pos * (pos + 1) / 2.0
    return float(u / (pos * neg))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError("spearman needs two vectors of equal length")
    if len(x) < 3:
        raise EvaluationError("spearman needs at least three observations")
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        raise EvaluationError("spearman correlation is undefined for a constant input")
    return max(-1.0, min(1.0, float(rx @ ry) / denom))


def pathway_coactivity(
    expression: np.ndarray,
    groups: Sequence[str],
    sets: Sequence[Sequence[int]],
) -> np.ndarray:
    """Correlation of set-level expression profiles across sample groups.

    ``expression`` is samples x genes and ``groups`` labels each sample
    (e.g. a tissue).  Each set's profile is the mean expression of its genes
    within each group; the result is the Pearson correlation matrix of those
    profiles, one row and column per set.
    """
    expression = np.asarray(expression, dtype=np.float64)
    labels = sorted(set(groups))
    groups = np.asarray(groups)
    if len(groups) != expression.shape[0]:
        raise EvaluationError("one group label per sample is required")
    if len(labels) < 2:
        raise EvaluationError("need at least two sample groups")
    group_means = np.stack([expression[groups == g].mean(axis=0) for g in labels])
    profiles = np.stack([group_means[:, list(s)].mean(axis=1) for s in sets])
    return np.corrcoef(profiles)


@dataclass(frozen=True)
class NetworkExport:
    edges: list
    nodes: list

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def export_significant_network(reports: Iterable[SignificanceReport], threshold: LogProb) -> NetworkExport:
    """Pairs whose CoDO p-value is at most ``threshold`` become edges."""
    edges = []
    for r in reports:
        if r.id_a is None or r.id_b is None:
            raise EvaluationError("exported reports need pair ids")
        if r.codo <= threshold:
            a, b = sorted((r.id_a, r.id_b))
            edges.append((a, b, r.codo))
    edges.sort(key=lambda e: (e[2], e[0], e[1]))
    nodes = sorted({e[0] for e in edges} | {e[1] for e in edges})
    return NetworkExport(edges=edges, nodes=nodes)


# -- synthetic labeled suite --------------------------------------------------

# (label, overlap size offset from its mean, overlap density relative to the modules)
_SUITE_KINDS = (
    ("positive", (3, 7), (1.6, 2.2)),
    ("null", (-4, 2), (0.8, 1.2)),
    ("overlap_only", (3, 7), (0.2, 0.5)),
    ("density_only", (-6, 0), (1.6, 2.2)),
)
# module densities, as multiples of the background p
_MODULE_DENSITY = (4.0, 16.0)


@dataclass(frozen=True)
class SuitePair:
    id_a: str
    id_b: str
    kind: str
    truth: bool
    report: SignificanceReport = field(repr=False)


def labeled_suite(seed: int, pairs: int = 200, n: int = 80) -> list[SuitePair]:
    """Synthetic circle pairs with known interdependence labels.

    Each pair gets its own module density between 4p and 16p (p = 3/n).
    Half the pairs are positives: the overlap is larger than chance and denser
    than the two modules.  The negatives split evenly between unremarkable
    pairs (overlap as dense as the modules), pairs with a large but sparse
    overlap (bridge nodes), and pairs whose overlap is denser than the modules
    but no larger than chance.
    """
    p = 3.0 / n
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(derive_seed(seed, 0x5EED))))
    out = []
    for i in range(pairs):
        if i % 2 == 0:
            kind = _SUITE_KINDS[0]
        else:
            kind = _SUITE_KINDS[1 + (i // 2) % 3]
        label, (dz_lo, dz_hi), (dr_lo, dr_hi) = kind
        size_a = int(rng.integers(30, 51))
        size_b = int(rng.integers(30, 51))
        mean = size_a * size_b / n
        overlap = int(round(mean)) + int(rng.integers(dz_lo, dz_hi + 1))
        overlap = max(2, min(overlap, size_a, size_b, size_a + size_b - 2))
        overlap = max(overlap, size_a + size_b - n)
        module = float(rng.uniform(*_MODULE_DENSITY)) * p
        rho_overlap = min(1.0, module * float(rng.uniform(dr_lo, dr_hi)))
        spec = SyntheticSpec(
            n=n,
            p=p,
            size_a=size_a,
            size_b=size_b,
            rho_a=module,
            rho_b=module,
            overlap=overlap,
            rho_overlap=rho_overlap,
            seed=derive_seed(seed, i),
        )
        inst = generate(spec)
        id_a, id_b = f"pair{i:03d}a", f"pair{i:03d}b"
        report = score_overlap(overlap_stats(inst.graph, inst.set_a, inst.set_b, p), id_a=id_a, id_b=id_b)
        out.append(SuitePair(id_a, id_b, label, label == "positive", report))
    return out
