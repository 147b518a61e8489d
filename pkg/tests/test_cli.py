import json
import math
from pathlib import Path

import numpy as np
import pytest

from codo.cli import BATCH_COLUMNS, main
from codo.evalharness import FeatureMatrix
from codo.formats import (
    InputError,
    export_node_sets,
    parse_edge_list,
    parse_features,
    parse_node_sets,
    write_edge_list,
    write_features,
)
from codo.synthetic import SyntheticSpec, generate


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def table(text: str):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    header = lines[0].split("\t")
    return [dict(zip(header, l.split("\t"))) for l in lines[1:]]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def network(tmp_path):
    rng = np.random.default_rng(0)
    lines = [f"u{i} u{j}" for i in range(40) for j in range(i + 1, 40) if rng.random() < 0.15]
    graph = write(tmp_path / "g.edges", "# toy network\n" + "\n".join(lines) + "\n")
    sets = []
    for k in range(6):
        members = rng.choice(40, size=int(rng.integers(6, 18)), replace=False)
        sets.append(f"c{k}\t" + " ".join(f"u{m}" for m in members))
    sets.append("far1\tu0")
    sets.append("far2\tu1")
    sets_path = write(tmp_path / "c.sets", "\n".join(sets) + "\n")
    feats = [f"u{i} " + " ".join(str(int(rng.random() < 0.3)) for _ in range(5)) for i in range(40)]
    feat_path = write(tmp_path / "g.feat", "\n".join(feats) + "\n")
    return graph, sets_path, feat_path


# -- parsers ----------------------------------------------------------------------


def test_parse_edge_list(tmp_path):
    lg = parse_edge_list(write(tmp_path / "a", "a b\nb c\n"))
    assert lg.graph.n == 3 and lg.graph.num_edges == 2
    lg = parse_edge_list(write(tmp_path / "b", "a b\nb a\nc c  # loop\n"))
    assert lg.graph.num_edges == 1 and lg.duplicates == 1 and lg.self_loops == 1
    with pytest.raises(InputError, match=":2:"):
        parse_edge_list(write(tmp_path / "c", "a b\na b c\n"))
    with pytest.raises(InputError):
        parse_edge_list(write(tmp_path / "d", "# nothing\n"))


def test_edge_list_generator_roundtrip(tmp_path):
    spec = SyntheticSpec(n=400, p=0.1, size_a=250, size_b=200, rho_a=0.2, rho_b=0.2, overlap=150, rho_overlap=0.3, seed=4)
    inst = generate(spec)
    assert inst.graph.num_edges > 10_000
    path = tmp_path / "big.edges"
    path.write_text("\n".join(f"{u} {v}" for u, v in inst.graph.edges) + "\n")
    lg = parse_edge_list(path)
    assert (lg.graph.n, lg.graph.num_edges) == (400, inst.graph.num_edges)
    again = tmp_path / "again.edges"
    write_edge_list(again, lg)
    back = parse_edge_list(again)

    def labelled(g):
        return {frozenset((g.labels[u], g.labels[v])) for u, v in g.graph.edges}

    assert labelled(back) == labelled(lg)


def test_isolated_node_declaration(tmp_path):
    lg = parse_edge_list(write(tmp_path / "e", "a b\nc\n"))
    assert lg.graph.n == 3 and lg.id_of("c") == 2
    out = tmp_path / "out"
    write_edge_list(out, lg)
    assert parse_edge_list(out).graph.n == 3


def test_parse_node_sets(tmp_path):
    lg = parse_edge_list(write(tmp_path / "g", "a b\nb c\n"))
    named = parse_node_sets(write(tmp_path / "s", "c1\ta b c\nc2\ta zz\nc3\tqq\n"), lg)
    assert named.names == ("c1", "c2")
    assert len(named.get("c1")) == 3
    assert named.dropped_members == {"c2": ["zz"], "c3": ["qq"]}
    assert named.dropped_sets == ("c3",)
    with pytest.raises(InputError):
        parse_node_sets(write(tmp_path / "empty", ""), lg)
    with pytest.raises(InputError):
        parse_node_sets(write(tmp_path / "dup", "x\ta\nx\tb\n"), lg)
    comma = parse_node_sets(write(tmp_path / "comma", "c1,a,b\n"), lg, delimiter=",")
    assert len(comma.get("c1")) == 2
    out = tmp_path / "roundtrip"
    export_node_sets(out, named, lg)
    again = parse_node_sets(out, lg)
    assert (again.names, again.sets) == (named.names, named.sets)


def test_parse_features(tmp_path):
    lg = parse_edge_list(write(tmp_path / "g", "a b\nb c\n"))
    parsed = parse_features(write(tmp_path / "f", "a 1 0 0 1\nb 0 0 0 0\nc 1 1 1 1\n"), lg)
    assert (parsed.matrix.nodes, parsed.matrix.features) == (3, 4)
    with pytest.raises(InputError, match=":2:"):
        parse_features(write(tmp_path / "w", "a 1 0\nb 1\n"), lg)
    with pytest.raises(InputError):
        parse_features(write(tmp_path / "nb", "a 1 2\n"), lg)
    partial = parse_features(write(tmp_path / "p", "a 1 0\nzz 1 1\n"), lg)
    assert partial.unknown_nodes == ("zz",) and partial.missing_nodes == ("b", "c")
    rng = np.random.default_rng(3)
    fm = FeatureMatrix((rng.random((3, 6)) < 0.5).astype(int))
    out = tmp_path / "rt"
    write_features(out, fm, lg)
    assert np.array_equal(parse_features(out, lg).matrix.bits, fm.bits)


# -- commands -----------------------------------------------------------------------


def test_score_empty_overlap(tmp_path, capsys):
    g = write(tmp_path / "g", "a b\nb c\nc d\n")
    s = write(tmp_path / "s", "x\ta b\ny\tc d\n")
    code, out, _ = run_cli(capsys, "score", "--graph", str(g), "--sets", str(s), "--p", "0.2")
    assert code == 0
    (row,) = table(out)
    assert [row[c] for c in ("log10_hgt", "log10_erd", "log10_codo")] == ["0", "0", "0"]


def test_batch(network, capsys):
    graph, sets, _ = network
    code, out, _ = run_cli(capsys, "batch", "--graph", str(graph), "--sets", str(sets))
    assert code == 0
    rows = table(out)
    header = {l.split(": ", 1)[0][2:]: json.loads(l.split(": ", 1)[1]) for l in out.splitlines() if l.startswith("#")}
    m = header["sets"]
    assert len(rows) + header["pairs_excluded_no_overlap"] == m * (m - 1) // 2
    assert header["pairs_excluded_no_overlap"] >= 1
    assert list(rows[0]) == list(BATCH_COLUMNS)
    codo = [float(r["log10_codo"]) for r in rows]
    assert codo == sorted(codo)
    for r in rows:
        for c in BATCH_COLUMNS[7:]:
            v = float(r[c])
            assert math.isfinite(v) and v <= 0
            assert r[c] == "0" or v < 0
        assert float(r["log10_codo_corrected"]) >= float(r["log10_codo"])
    assert header["p"] == pytest.approx(header["edges"] / (header["nodes"] * (header["nodes"] - 1) / 2))


def test_batch_json(network, capsys):
    graph, sets, _ = network
    code, out, _ = run_cli(capsys, "batch", "--graph", str(graph), "--sets", str(sets), "--format", "json", "--correction", "none")
    doc = json.loads(out)
    assert doc["columns"] == list(BATCH_COLUMNS)
    assert all(r["log10_codo_corrected"] == r["log10_codo"] for r in doc["rows"])
    assert doc["header"]["config"]["correction"] == "none"


def test_export_and_eval(network, capsys, tmp_path):
    graph, sets, feats = network
    code, out, _ = run_cli(capsys, "export", "--graph", str(graph), "--sets", str(sets), "--threshold", "0")
    assert code == 0
    batch_code, batch_out, _ = run_cli(capsys, "batch", "--graph", str(graph), "--sets", str(sets))
    assert len(table(out)) == len(table(batch_out))
    code, out, _ = run_cli(capsys, "eval", "--graph", str(graph), "--sets", str(sets), "--features", str(feats), "--alpha", "0.5")
    if code == 0:
        rows = table(out)
        assert {r["method"] for r in rows} == {"hgt", "erd", "codo"}
        assert "auc_codo" in out
    else:
        # degenerate labels on a tiny toy network are reported as an input error
        assert code == 1


def test_eval_expression(network, capsys, tmp_path):
    graph, sets, _ = network
    rng = np.random.default_rng(8)
    lines = ["group " + " ".join(f"u{i}" for i in range(40))]
    lines += [f"t{s % 3} " + " ".join(f"{v:.3f}" for v in rng.normal(size=40)) for s in range(12)]
    expr = write(tmp_path / "expr.tsv", "\n".join(lines) + "\n")
    code, out, _ = run_cli(capsys, "eval", "--graph", str(graph), "--sets", str(sets), "--expression", str(expr))
    assert code == 0
    assert [r["method"] for r in table(out)] == ["hgt", "erd", "codo"]


def test_synth_then_score_ordering(tmp_path, capsys):
    values = {}
    for q in (1, 2, 3):
        prefix = str(tmp_path / f"q{q}")
        assert main(["synth", "--quadrant", str(q), "--seed", "5", "--out", prefix]) == 0
        manifest = json.loads(Path(prefix + ".json").read_text())
        code, out, _ = run_cli(capsys, "score", "--graph", prefix + ".edges", "--sets", prefix + ".sets", "--p", str(3 / 80))
        assert code == 0
        assert f"# nodes: {manifest['nodes']}" in out
        (row,) = table(out)
        assert int(row["size_z"]) == manifest["spec"]["overlap"]
        values[q] = float(row["log10_codo"])
    assert values[3] < values[1] and values[3] < values[2]


def test_mc_command(capsys):
    code, out, _ = run_cli(capsys, "mc", "--samples", "50000", "--seed", "3")
    assert code == 0
    assert all(r["ok"] == "True" for r in table(out))


def test_determinism(network, capsys, tmp_path):
    graph, sets, feats = network
    commands = [
        ["score", "--graph", str(graph), "--sets", str(sets), "--pair", "c0", "c1"],
        ["batch", "--graph", str(graph), "--sets", str(sets)],
        ["export", "--graph", str(graph), "--sets", str(sets), "--threshold", "-0.5"],
        ["mc", "--samples", "20000"],
    ]
    for argv in commands:
        a = run_cli(capsys, *argv)
        b = run_cli(capsys, *argv)
        assert a == b
    for k in range(2):
        main(["synth", "--seed", "9", "--out", str(tmp_path / f"s{k}")])
    for ext in (".edges", ".sets", ".json"):
        left = (tmp_path / f"s0{ext}").read_bytes()
        right = (tmp_path / f"s1{ext}").read_bytes()
        if ext == ".json":
            left, right = (json.loads(x) for x in (left, right))
            for d in (left, right):
                d["config"].pop("out", None)
                d.pop("files")
        assert left == right


def test_input_errors(tmp_path, capsys):
    bad = write(tmp_path / "bad", "a b c\n")
    sets = write(tmp_path / "s", "x\ta\n")
    assert main(["score", "--graph", str(bad), "--sets", str(sets)]) == 1
    assert main(["score", "--graph", str(tmp_path / "missing"), "--sets", str(sets)]) == 1
    good = write(tmp_path / "g", "a b\n")
    assert main(["score", "--graph", str(good), "--sets", str(sets), "--p", "1.5"]) == 1
    assert main(["score", "--graph", str(good), "--sets", str(sets), "--pair", "x", "nope"]) == 1
    capsys.readouterr()


def test_no_partial_output(tmp_path, capsys):
    bad = write(tmp_path / "bad", "a b c\n")
    sets = write(tmp_path / "s", "x\ta\n")
    out = tmp_path / "result.tsv"
    assert main(["batch", "--graph", str(bad), "--sets", str(sets), "--out", str(out)]) == 1
    assert not out.exists()
    cfg = write(tmp_path / "cfg.json", json.dumps({"n": 10, "p": 0.1, "size_a": 8, "size_b": 8, "rho_a": 0.5, "rho_b": 0.5, "overlap": 2, "rho_overlap": 0.5}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "bad_synth")]) == 1
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad", "cfg.json", "s"]
    capsys.readouterr()


def test_out_file_written(network, tmp_path, capsys):
    graph, sets, _ = network
    out = tmp_path / "r.tsv"
    assert main(["batch", "--graph", str(graph), "--sets", str(sets), "--out", str(out)]) == 0
    assert out.read_text().startswith("# tool: ")
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".codo-")]
