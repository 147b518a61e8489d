import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from codo.evalharness import (
    EvaluationError,
    FeatureMatrix,
    LabeledPair,
    export_significant_network,
    feature_overlap_pvalue,
    gold_standard,
    labeled_suite,
    mann_whitney_auc,
    pathway_coactivity,
    roc_auc,
    shared_feature_counts,
    spearman,
)
from codo.graphcore import NodeSet, OverlapStats
from codo.significance import score_overlap


def loop_shared(bits, nodes):
    return sum(
        int(bits[i, f] and bits[j, f]) for i, j in itertools.combinations(nodes, 2) for f in range(bits.shape[1])
    )


def rank_pearson_oracle(x, y):
    def ranks(v):
        out = [0.0] * len(v)
        for i, a in enumerate(v):
            less = sum(1 for b in v if b < a)
            equal = sum(1 for b in v if b == a)
            out[i] = less + (equal + 1) / 2
        return out

    rx, ry = ranks(list(x)), ranks(list(y))
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den


def pairs_from(scores, truths):
    return [LabeledPair(f"a{i}", f"b{i}", s, t) for i, (s, t) in enumerate(zip(scores, truths))]


def test_feature_matrix_validation():
    with pytest.raises(EvaluationError):
        FeatureMatrix(np.array([[0, 2]]))
    with pytest.raises(EvaluationError):
        FeatureMatrix(np.zeros(3))
    fm = FeatureMatrix(np.zeros((3, 4)))
    assert (fm.nodes, fm.features) == (3, 4)


def test_shared_feature_counts():
    assert shared_feature_counts(FeatureMatrix(np.eye(4, dtype=int))) == (4 * 6, 0)
    assert shared_feature_counts(FeatureMatrix(np.ones((5, 3), dtype=int))) == (30, 30)
    rng = np.random.default_rng(0)
    bits = (rng.random((20, 5)) < 0.4).astype(int)
    fm = FeatureMatrix(bits)
    assert shared_feature_counts(fm) == (5 * 190, loop_shared(bits, range(20)))
    sub = [1, 4, 7, 11, 19]
    assert shared_feature_counts(fm, NodeSet(sub)) == (5 * 10, loop_shared(bits, sub))
    with pytest.raises(EvaluationError):
        shared_feature_counts(fm, NodeSet([25]))


def test_feature_overlap_pvalue():
    bits = np.array([[1, 1], [1, 1], [1, 0], [0, 0], [0, 1], [0, 0]])
    fm = FeatureMatrix(bits)
    overlap = NodeSet([0, 1, 2])
    pi, xi = shared_feature_counts(fm)
    pi_o, xi_o = shared_feature_counts(fm, overlap)
    # enumerate every placement of xi shared slots among pi feature pairs
    hits = total = 0
    for chosen in itertools.combinations(range(pi), xi):
        total += 1
        hits += sum(1 for c in chosen if c < pi_o) >= xi_o
    assert math.exp(feature_overlap_pvalue(fm, overlap)) == pytest.approx(hits / total, rel=1e-12)
    whole = NodeSet(range(6))
    assert feature_overlap_pvalue(fm, whole) == pytest.approx(0.0, abs=1e-12)
    empty = FeatureMatrix(np.array([[1, 0], [0, 1], [0, 0], [1, 0]]))
    assert feature_overlap_pvalue(empty, NodeSet([1, 2])) == 0.0
    with pytest.raises(EvaluationError):
        feature_overlap_pvalue(fm, NodeSet([3]))


def planted_features():
    # nodes 0-4 share features 0 and 1; others carry feature 2 sparsely
    bits = np.zeros((20, 3), dtype=int)
    bits[:5, :2] = 1
    bits[[6, 12, 18], 2] = 1
    return FeatureMatrix(bits)


def test_gold_standard_planted():
    fm = planted_features()
    pairs = [
        ("c1", "c2", NodeSet(range(0, 8)), NodeSet(range(0, 5))),
        ("c1", "c3", NodeSet(range(0, 8)), NodeSet(range(6, 15))),
        ("c2", "c4", NodeSet(range(0, 5)), NodeSet([4, 16])),
    ]
    gold = gold_standard(fm, pairs)
    assert gold.truths == {("c1", "c2"): True, ("c1", "c3"): False}
    assert gold.excluded == (("c2", "c4"),)
    assert gold.tests == 2
    reordered = gold_standard(fm, pairs[::-1])
    assert reordered.truths == gold.truths


def test_gold_standard_bonferroni_arithmetic(monkeypatch):
    import codo.evalharness as eh

    monkeypatch.setattr(eh, "feature_overlap_pvalue", lambda fm, o: math.log(0.04))
    fm = planted_features()
    one = [("x", "y", NodeSet([0, 1]), NodeSet([0, 1]))]
    assert eh.gold_standard(fm, one).truths == {("x", "y"): True}
    ten = [(f"x{i}", f"y{i}", NodeSet([0, 1]), NodeSet([0, 1])) for i in range(10)]
    assert not any(eh.gold_standard(fm, ten).truths.values())


def test_roc_examples():
    truths = [True, True, False, False]
    assert roc_auc(pairs_from([-5, -4, -1, 0], truths)).auc == 1.0
    assert roc_auc(pairs_from([0, -1, -4, -5], truths)).auc == 0.0
    with pytest.raises(EvaluationError):
        roc_auc(pairs_from([0, -1], [True, True]))
    six = pairs_from([-3.0, -2.5, -2.5, -1.0, -0.5, 0.0], [True, False, True, True, False, False])
    assert roc_auc(six).auc == pytest.approx(mann_whitney_auc([p.score for p in six], [p.truth for p in six]), abs=1e-12)


def test_roc_curve_shape():
    r = roc_auc(pairs_from([-3, -2, -1, 0], [True, False, True, False]))
    assert r.curve[0] == (0.0, 0.0) and r.curve[-1] == (1.0, 1.0)
    assert r.auc == pytest.approx(0.75)


@given(st.lists(st.tuples(st.integers(-5, 0), st.booleans()), min_size=2, max_size=40))
def test_roc_matches_mann_whitney(items):
    truths = [t for _, t in items]
    if all(truths) or not any(truths):
        return
    scores = [float(s) for s, _ in items]
    pairs = pairs_from(scores, truths)
    assert roc_auc(pairs).auc == pytest.approx(mann_whitney_auc(scores, truths), abs=1e-12)
    assert 0.0 <= roc_auc(pairs, tie_seed=1).auc <= 1.0


def test_roc_monotone_invariance():
    rng = np.random.default_rng(3)
    scores = -rng.exponential(5, size=60)
    truths = rng.random(60) < 0.4
    base = roc_auc(pairs_from(scores, truths)).auc
    maps = [np.exp, lambda v: v**3, lambda v: 2 * v - 7, np.arctan, lambda v: -np.log1p(-v)]
    for k in range(10):
        f = maps[k % len(maps)]
        shift = float(k)
        transformed = f(scores) + shift
        assert roc_auc(pairs_from(transformed, truths)).auc == pytest.approx(base, abs=1e-12)


def test_roc_ties():
    pairs = pairs_from([0.0] * 10, [i % 2 == 0 for i in range(10)])
    assert roc_auc(pairs, tie_seed=4) == roc_auc(pairs, tie_seed=4)
    grouped = roc_auc(pairs)
    assert grouped.curve == [(0.0, 0.0), (1.0, 1.0)] and grouped.auc == 0.5
    seeded = [roc_auc(pairs, tie_seed=s).auc for s in range(200)]
    assert len(set(seeded)) > 1
    assert np.mean(seeded) == pytest.approx(0.5, abs=0.05)


def test_spearman_examples():
    x = [3.0, 1.0, 4.0, 1.5, 9.0]
    assert spearman(x, x) == pytest.approx(1.0)
    assert spearman(x, [-v for v in x]) == pytest.approx(-1.0)
    ties_x = [1, 2, 2, 3, 4, 4, 4, 5, 6, 7]
    ties_y = [2, 1, 3, 3, 5, 4, 6, 6, 6, 9]
    assert spearman(ties_x, ties_y) == pytest.approx(rank_pearson_oracle(ties_x, ties_y), abs=1e-12)
    with pytest.raises(EvaluationError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(EvaluationError):
        spearman([1, 2], [1, 2])


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=3, max_size=30))
def test_spearman_oracle_and_invariance(items):
    x = [a for a, _ in items]
    y = [b for _, b in items]
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    rho = spearman(x, y)
    assert rho == pytest.approx(rank_pearson_oracle(x, y), abs=1e-12)
    assert spearman([math.exp(v) for v in x], [3 * v + 1 for v in y]) == pytest.approx(rho, abs=1e-12)


def test_pathway_coactivity():
    rng = np.random.default_rng(2)
    groups = ["t1"] * 3 + ["t2"] * 3 + ["t3"] * 3
    expr = rng.normal(size=(9, 6))
    expr[:, 3] = expr[:, 0] * 2 + 1
    c = pathway_coactivity(expr, groups, [[0], [3], [1, 2]])
    assert c.shape == (3, 3)
    assert c[0, 1] == pytest.approx(1.0)
    with pytest.raises(EvaluationError):
        pathway_coactivity(expr, ["t1"] * 9, [[0], [1]])


def make_report(a, b, codo_stats):
    return score_overlap(codo_stats, id_a=a, id_b=b)


def test_export_network():
    strong = OverlapStats(n=80, size_a=30, size_b=30, size_z=25, edges_union=400, edges_z=250, ambient_p=0.05)
    weak = OverlapStats(n=80, size_a=30, size_b=30, size_z=11, edges_union=100, edges_z=5, ambient_p=0.05)
    reports = [make_report("p", "q", strong), make_report("q", "r", weak), make_report("s", "p", weak)]
    everything = export_significant_network(reports, 0.0)
    assert everything.n_edges == 3 and everything.nodes == ["p", "q", "r", "s"]
    assert export_significant_network(reports, -1e9).n_edges == 0
    cut = export_significant_network(reports, (reports[0].codo + reports[1].codo) / 2)
    assert [(a, b) for a, b, _ in cut.edges] == [("p", "q")]
    with pytest.raises(EvaluationError):
        export_significant_network([score_overlap(strong)], 0.0)


def test_labeled_suite_small():
    suite = labeled_suite(1, pairs=8)
    assert len(suite) == 8
    assert [s.truth for s in suite] == [i % 2 == 0 for i in range(8)]
    assert {s.kind for s in suite} == {"positive", "null", "overlap_only", "density_only"}
    again = labeled_suite(1, pairs=8)
    assert [s.report for s in suite] == [s.report for s in again]
