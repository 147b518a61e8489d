"""Command-line front end.

    codo score  --graph G --sets S [--pair A B] [--p auto]
    codo batch  --graph G --sets S [--correction bonferroni]
    codo synth  --out PREFIX [--quadrant K | --config spec.json] [--seed N]
    codo mc     [--samples N] [--seed N]
    codo eval   --graph G --sets S (--features F | --expression E)
    codo export --graph G --sets S [--threshold -30]

Every table starts with ``#`` header lines (tool version, seed, estimated p,
config echo).  p-values are printed as log10.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .evalharness import (
    METHODS,
    EvaluationError,
    LabeledPair,
    export_significant_network,
    gold_standard,
    pathway_coactivity,
    roc_auc,
    shared_feature_counts,
    spearman,
)
from .formats import (
    InputError,
    LabeledGraph,
    NamedSets,
    parse_edge_list,
    parse_expression,
    parse_features,
    parse_node_sets,
)
from .graphcore import GraphInputError, overlap_stats
from .montecarlo import OracleError, enum_codo, enum_hgt, mc_codo, mc_hgt
from .numerics import ParameterError
from .significance import (
    CodoExperimentParams,
    SignificanceReport,
    codo_pvalue,
    hgt_pvalue,
    score_overlap,
)
from .synthetic import QUADRANTS, RNG_ALGORITHM, SyntheticSpec, derive_seed, generate, paper_spec

__all__ = ["RunConfig", "run", "main", "BATCH_COLUMNS"]

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2

BATCH_COLUMNS = (
    "set_a",
    "set_b",
    "size_a",
    "size_b",
    "size_z",
    "edges_union",
    "edges_z",
    "log10_hgt",
    "log10_erd",
    "log10_codo",
    "log10_codo_corrected",
)

_LN10 = math.log(10.0)

# analytic-vs-oracle comparisons run by `codo mc`
MC_HGT_SUITE = ((4, 2, 2, 2), (8, 4, 3, 2), (9, 4, 4, 3), (12, 5, 6, 4), (30, 10, 12, 6), (60, 20, 25, 12))
MC_CODO_SUITE = (
    (6, 3, 3, 3, 2, Fraction(1)),
    (8, 4, 3, 6, 2, Fraction(1)),
    (8, 4, 4, 5, 3, Fraction(1, 3)),
    (7, 3, 4, 5, 2, Fraction(1)),
    (9, 3, 3, 4, 2, Fraction(1)),
    (8, 3, 4, 5, 2, Fraction(1)),
    (7, 3, 3, 5, 1, Fraction(0)),
)


class InvariantViolation(RuntimeError):
    """An output failed an internal consistency check."""


@dataclass
class RunConfig:
    command: str
    graph: Optional[str] = None
    sets: Optional[str] = None
    features: Optional[str] = None
    expression: Optional[str] = None
    p: str = "auto"
    alpha: float = 0.05
    correction: Optional[str] = None
    threshold: float = -30.0
    seed: int = 0
    format: str = "tsv"
    out: Optional[str] = None
    pair: Optional[tuple] = None
    delimiter: str = "\t"
    quadrant: Optional[int] = None
    config: Optional[str] = None
    samples: int = 200_000

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError("--alpha must lie in (0, 1)")
        if self.p != "auto":
            try:
                value = float(self.p)
            except ValueError:
                raise InputError("--p must be a number or 'auto'") from None
            if not 0.0 < value < 1.0:
                raise InputError("--p must lie in (0, 1)")
        if self.format not in ("tsv", "json"):
            raise InputError("--format must be tsv or json")
        if self.correction not in (None, "none", "bonferroni"):
            raise InputError("--correction must be none or bonferroni")
        if self.threshold > 0:
            raise InputError("--threshold is a log10 p-value and must be <= 0")

    def echo(self) -> dict:
        keys = ("command", "graph", "sets", "features", "expression", "p", "alpha", "correction",
                "threshold", "seed", "format", "pair", "quadrant", "config", "samples")
        out = {}
        for k in keys:
            v = getattr(self, k)
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


@dataclass
class Table:
    header: dict
    columns: tuple
    rows: list


# -- helpers ------------------------------------------------------------------


def _log10(value: float) -> float:
    if math.isnan(value) or value > 0:
        raise InvariantViolation(f"log-probability {value} is not a probability")
    if value == 0.0:
        return 0.0
    if math.isinf(value):
        raise InvariantViolation("p-value underflowed to exact zero")
    return value / _LN10


def _fmt(value) -> str:
    if isinstance(value, float):
        if value == 0.0:
            return "0"
        return f"{value:.10g}"
    return str(value)


def _need(path: Optional[str], flag: str) -> str:
    if not path:
        raise InputError(f"{flag} is required for this command")
    return path


def _load_graph(cfg: RunConfig) -> LabeledGraph:
    return parse_edge_list(_need(cfg.graph, "--graph"))


def _background_p(cfg: RunConfig, lg: LabeledGraph) -> tuple[float, str]:
    if cfg.p != "auto":
        return float(cfg.p), "explicit"
    n = lg.graph.n
    pairs = n * (n - 1) // 2
    p_hat = lg.graph.num_edges / pairs if pairs else 0.0
    if not 0.0 < p_hat < 1.0:
        raise InputError("cannot estimate p from an empty or complete graph; pass --p")
    return p_hat, "estimated e(G)/C(n,2)"


def _base_header(cfg: RunConfig) -> dict:
    return {"tool": f"codo {__version__}", "command": cfg.command, "seed": cfg.seed}


def _report_row(r: SignificanceReport) -> dict:
    s = r.stats
    corrected = r.corrected if r.corrected is not None else r.codo
    return {
        "set_a": r.id_a,
        "set_b": r.id_b,
        "size_a": s.size_a,
        "size_b": s.size_b,
        "size_z": s.size_z,
        "edges_union": s.edges_union,
        "edges_z": s.edges_z,
        "log10_hgt": _log10(r.hgt),
        "log10_erd": _log10(r.erd),
        "log10_codo": _log10(r.codo),
        "log10_codo_corrected": _log10(corrected),
    }


def _score_all_pairs(lg: LabeledGraph, named: NamedSets, p: float):
    reports, excluded = [], 0
    for i, j in itertools.combinations(range(len(named)), 2):
        a, b = named.sets[i], named.sets[j]
        if not a.as_set() & b.as_set():
            excluded += 1
            continue
        stats = overlap_stats(lg.graph, a, b, p)
        reports.append(score_overlap(stats, id_a=named.names[i], id_b=named.names[j]))
    return reports, excluded


def _sort_reports(reports: list) -> list:
    return sorted(reports, key=lambda r: (r.codo, r.id_a, r.id_b))


def _load_sets(cfg: RunConfig, lg: LabeledGraph) -> NamedSets:
    named = parse_node_sets(_need(cfg.sets, "--sets"), lg, delimiter=cfg.delimiter)
    return named


def _set_header(header: dict, lg: LabeledGraph, named: Optional[NamedSets] = None) -> None:
    header["nodes"] = lg.graph.n
    header["edges"] = lg.graph.num_edges
    header["duplicate_edges_dropped"] = lg.duplicates
    header["self_loops_dropped"] = lg.self_loops
    if named is not None:
        header["sets"] = len(named)
        header["unresolved_members"] = sum(len(v) for v in named.dropped_members.values())
        header["sets_dropped"] = list(named.dropped_sets)


# -- commands -------------------------------------------------------------------


def _cmd_score(cfg: RunConfig) -> Table:
    lg = _load_graph(cfg)
    named = _load_sets(cfg, lg)
    if cfg.pair:
        name_a, name_b = cfg.pair
    elif len(named) >= 2:
        name_a, name_b = named.names[0], named.names[1]
    else:
        raise InputError("score needs two node sets")
    p, source = _background_p(cfg, lg)
    stats = overlap_stats(lg.graph, named.get(name_a), named.get(name_b), p)
    report = score_overlap(stats, id_a=name_a, id_b=name_b)
    if cfg.correction == "bonferroni":
        report = report.with_correction(1)
    header = _base_header(cfg)
    _set_header(header, lg, named)
    header.update(p=p, p_source=source, erd_vacuous=report.erd_vacuous)
    return Table(header, BATCH_COLUMNS, [_report_row(report)])


def _cmd_batch(cfg: RunConfig) -> Table:
    lg = _load_graph(cfg)
    named = _load_sets(cfg, lg)
    p, source = _background_p(cfg, lg)
    reports, excluded = _score_all_pairs(lg, named, p)
    correction = cfg.correction or "bonferroni"
    if correction == "bonferroni" and reports:
        reports = [r.with_correction(len(reports)) for r in reports]
    header = _base_header(cfg)
    _set_header(header, lg, named)
    header.update(
        p=p,
        p_source=source,
        correction=correction,
        pairs_scored=len(reports),
        pairs_excluded_no_overlap=excluded,
    )
    return Table(header, BATCH_COLUMNS, [_report_row(r) for r in _sort_reports(reports)])


def _cmd_export(cfg: RunConfig) -> Table:
    lg = _load_graph(cfg)
    named = _load_sets(cfg, lg)
    p, source = _background_p(cfg, lg)
    reports, excluded = _score_all_pairs(lg, named, p)
    net = export_significant_network(reports, cfg.threshold * _LN10)
    header = _base_header(cfg)
    _set_header(header, lg, named)
    header.update(
        p=p,
        p_source=source,
        threshold_log10=cfg.threshold,
        network_nodes=net.n_nodes,
        network_edges=net.n_edges,
        pairs_excluded_no_overlap=excluded,
    )
    rows = [{"set_a": a, "set_b": b, "log10_codo": _log10(v)} for a, b, v in net.edges]
    return Table(header, ("set_a", "set_b", "log10_codo"), rows)


def _cmd_eval(cfg: RunConfig) -> Table:
    lg = _load_graph(cfg)
    named = _load_sets(cfg, lg)
    if len(named) < 2:
        raise InputError("evaluation needs at least two node sets (ego nets with fewer circles are excluded)")
    p, source = _background_p(cfg, lg)
    reports, excluded = _score_all_pairs(lg, named, p)
    header = _base_header(cfg)
    _set_header(header, lg, named)
    header.update(p=p, p_source=source, pairs_excluded_no_overlap=excluded)

    if cfg.expression:
        values, groups, columns = parse_expression(cfg.expression, lg)
        position = {node: c for c, node in enumerate(columns)}
        index, members = {}, []
        for name, s in zip(named.names, named.sets):
            cols = [position[m] for m in s.members if m in position]
            if cols:
                index[name] = len(members)
                members.append(cols)
        coact = pathway_coactivity(values, groups, members)
        scored = [r for r in reports if r.id_a in index and r.id_b in index]
        if len(scored) < 3:
            raise InputError("fewer than three overlapping pairs with expression data")
        target = [float(coact[index[r.id_a], index[r.id_b]]) for r in scored]
        rows = []
        for m in METHODS:
            significance = [-_log10(getattr(r, m)) for r in scored]
            try:
                rho = spearman(target, significance)
            except EvaluationError:
                rho = float("nan")
            rows.append({"method": m, "spearman": rho})
        header.update(pairs_evaluated=len(scored))
        return Table(header, ("method", "spearman"), rows)

    parsed = parse_features(_need(cfg.features, "--features"), lg)
    _, shared = shared_feature_counts(parsed.matrix)
    if shared == 0:
        raise InputError("no two nodes share a feature; ego net excluded from evaluation")
    index = {name: s for name, s in zip(named.names, named.sets)}
    pairs = [(r.id_a, r.id_b, index[r.id_a], index[r.id_b]) for r in reports]
    gold = gold_standard(parsed.matrix, pairs, alpha=cfg.alpha)
    labeled = {m: [] for m in METHODS}
    for r in reports:
        key = (r.id_a, r.id_b)
        if key not in gold.truths:
            continue
        for m in METHODS:
            labeled[m].append(LabeledPair(r.id_a, r.id_b, getattr(r, m), gold.truths[key]))
    header.update(
        alpha=cfg.alpha,
        gold_tests=gold.tests,
        gold_positive=sum(gold.truths.values()),
        gold_excluded_small_overlap=len(gold.excluded),
        feature_rows_unknown=len(parsed.unknown_nodes),
        feature_rows_missing=len(parsed.missing_nodes),
    )
    rows = []
    for m in METHODS:
        roc = roc_auc(labeled[m], tie_seed=cfg.seed)
        header[f"auc_{m}"] = roc.auc
        rows.extend({"method": m, "fpr": fpr, "tpr": tpr} for fpr, tpr in roc.curve)
    return Table(header, ("method", "fpr", "tpr"), rows)


def _cmd_mc(cfg: RunConfig) -> Table:
    rows = []
    samples = cfg.samples
    for k, (n, a, b, z) in enumerate(MC_HGT_SUITE):
        analytic = math.exp(hgt_pvalue(n, a, b, z))
        exact = float(enum_hgt(n, a, b, z).value) if math.comb(n, a) <= 10**6 else float("nan")
        est = mc_hgt(n, a, b, z, samples, derive_seed(cfg.seed, 0, k))
        rows.append(_mc_row("hgt", f"n={n} a={a} b={b} z={z}", analytic, exact, est))
    for k, (n, a, b, e, z, rho) in enumerate(MC_CODO_SUITE):
        params = CodoExperimentParams(n, a, b, e, z, rho)
        analytic = math.exp(codo_pvalue(params))
        exact = float(enum_codo(params).value)
        est = mc_codo(params, samples, derive_seed(cfg.seed, 1, k))
        rows.append(_mc_row("codo", f"n={n} a={a} b={b} e={e} z={z} rho={rho}", analytic, exact, est))
    header = _base_header(cfg)
    header.update(samples=samples, rng=RNG_ALGORITHM, all_within_4sigma=all(r["ok"] for r in rows))
    columns = ("method", "params", "analytic", "exact", "mc", "mc_stderr", "zscore", "ok")
    return Table(header, columns, rows)


def _mc_row(method: str, params: str, analytic: float, exact: float, est) -> dict:
    z = est.zscore(analytic)
    exact_ok = math.isnan(exact) or abs(analytic - exact) <= 1e-9 * max(exact, 1e-300)
    return {
        "method": method,
        "params": params,
        "analytic": analytic,
        "exact": exact,
        "mc": est.point,
        "mc_stderr": est.stderr,
        "zscore": z,
        "ok": bool(abs(z) <= 4.0 and exact_ok),
    }


def _synth_spec(cfg: RunConfig) -> SyntheticSpec:
    if cfg.config:
        try:
            data = json.loads(Path(cfg.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read synthetic config: {exc}") from None
        data.setdefault("seed", cfg.seed)
        try:
            return SyntheticSpec(**data)
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad synthetic config: {exc}") from None
    quadrant = 3 if cfg.quadrant is None else cfg.quadrant
    if not 0 <= quadrant < len(QUADRANTS):
        raise InputError(f"--quadrant must be in 0..{len(QUADRANTS) - 1}")
    overlap, mult = QUADRANTS[quadrant]
    return paper_spec(overlap, mult, seed=derive_seed(cfg.seed, quadrant))


def _cmd_synth(cfg: RunConfig) -> dict:
    """Returns {suffix: text} for the files to write."""
    prefix = _need(cfg.out, "--out")
    spec = _synth_spec(cfg)
    inst = generate(spec)
    g = inst.graph
    lines = [f"{u} {v}" for u, v in g.edges]
    touched = {u for e in g.edges for u in e}
    # isolated nodes are declared on their own line so n survives a round trip
    lines += [str(u) for u in range(g.n) if u not in touched]
    manifest = {
        "tool": f"codo {__version__}",
        "rng": RNG_ALGORITHM,
        "spec": spec.to_dict(),
        "nodes": g.n,
        "edges": g.num_edges,
        "set_a": list(inst.set_a.members),
        "set_b": list(inst.set_b.members),
        "config": cfg.echo(),
        "files": [Path(prefix).name + s for s in (".edges", ".sets")],
    }
    return {
        ".edges": "\n".join(lines) + "\n",
        ".sets": "A\t" + " ".join(map(str, inst.set_a.members)) + "\nB\t" + " ".join(map(str, inst.set_b.members)) + "\n",
        ".json": json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    }


COMMANDS = {
    "score": _cmd_score,
    "batch": _cmd_batch,
    "export": _cmd_export,
    "eval": _cmd_eval,
    "mc": _cmd_mc,
}


# -- output ---------------------------------------------------------------------


def render(table: Table, fmt: str, cfg: RunConfig) -> str:
    header = dict(table.header)
    header["config"] = cfg.echo()
    if fmt == "json":
        rows = [{k: row[k] for k in table.columns} for row in table.rows]
        return json.dumps({"header": header, "columns": list(table.columns), "rows": rows}, indent=2, sort_keys=False, default=_json_default) + "\n"
    lines = [f"# {k}: {json.dumps(v, sort_keys=True, default=_json_default)}" for k, v in header.items()]
    lines.append("\t".join(table.columns))
    for row in table.rows:
        lines.append("\t".join(_fmt(row[c]) for c in table.columns))
    return "\n".join(lines) + "\n"


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Fraction):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _atomic_write(files: dict) -> None:
    """Write every path or none: stage to temp files, then rename."""
    staged = []
    try:
        for path, text in files.items():
            directory = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(prefix=".codo-", dir=directory)
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command; returns the process exit status."""
    stdout = stdout or sys.stdout
    try:
        if cfg.command == "synth":
            files = {cfg.out + suffix: text for suffix, text in _cmd_synth(cfg).items()}
            _atomic_write(files)
            return EXIT_OK
        if cfg.command not in COMMANDS:
            raise InputError(f"unknown command {cfg.command!r}")
        table = COMMANDS[cfg.command](cfg)
        text = render(table, cfg.format, cfg)
        if cfg.out:
            _atomic_write({cfg.out: text})
        else:
            stdout.write(text)
        if cfg.command == "mc" and not table.header["all_within_4sigma"]:
            print("codo: analytic and oracle values disagree", file=sys.stderr)
            return EXIT_INTERNAL
        return EXIT_OK
    except (InputError, GraphInputError, ParameterError, EvaluationError, OracleError, OSError) as exc:
        print(f"codo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, FloatingPointError) as exc:
        print(f"codo: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codo", description="Significance of overlap between subgraphs.")
    parser.add_argument("--version", action="version", version=f"codo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=True):
        if graph:
            p.add_argument("--graph", help="edge list: one 'u v' pair per line")
            p.add_argument("--sets", help="node sets: 'name<TAB>members' per line")
            p.add_argument("--p", default="auto", help="background edge probability, or 'auto' for e(G)/C(n,2)")
            p.add_argument("--delimiter", default="\t", help="separator after the set name (default TAB)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("tsv", "json"), default="tsv")
        p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("score", help="p-values for one pair of node sets")
    common(p)
    p.add_argument("--pair", nargs=2, metavar=("SET_A", "SET_B"))
    p.add_argument("--correction", choices=("none", "bonferroni"), default="none")

    p = sub.add_parser("batch", help="all overlapping pairs in a node-set collection")
    common(p)
    p.add_argument("--correction", choices=("none", "bonferroni"), default="bonferroni")

    p = sub.add_parser("export", help="network of pairs with CoDO p-value below a threshold")
    common(p)
    p.add_argument("--threshold", type=float, default=-30.0, help="log10 p-value cutoff (default -30)")

    p = sub.add_parser("eval", help="ROC against a feature gold standard, or Spearman against co-expression")
    common(p)
    p.add_argument("--features", help="rows 'node b1 ... bK' of binary features")
    p.add_argument("--expression", help="samples x genes table with a leading group column")
    p.add_argument("--alpha", type=float, default=0.05)

    p = sub.add_parser("synth", help="write a synthetic graph with two implanted modules")
    common(p, graph=False)
    p.add_argument("--quadrant", type=int, help="0..3: overlap 20/30 x overlap density 2p/10p (default 3)")
    p.add_argument("--config", help="JSON object with SyntheticSpec fields")

    p = sub.add_parser("mc", help="compare analytic p-values with enumeration and sampling oracles")
    common(p, graph=False)
    p.add_argument("--samples", type=int, default=200_000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = vars(args).copy()
    if fields.get("pair"):
        fields["pair"] = tuple(fields["pair"])
    try:
        cfg = RunConfig(**{k: v for k, v in fields.items() if v is not None or k == "correction"})
    except InputError as exc:
        print(f"codo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
