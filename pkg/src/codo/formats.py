"""Line-oriented text formats: edge lists, node-set collections, feature rows."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .evalharness import FeatureMatrix
from .graphcore import Graph, NodeSet

__all__ = [
    "InputError",
    "LabeledGraph",
    "NamedSets",
    "parse_edge_list",
    "write_edge_list",
    "parse_node_sets",
    "export_node_sets",
    "parse_features",
    "write_features",
    "parse_expression",
]


class InputError(ValueError):
    """Unreadable or malformed input file."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class LabeledGraph:
    graph: Graph
    labels: tuple[str, ...]
    duplicates: int = 0
    self_loops: int = 0
    index: dict = field(default_factory=dict, repr=False, compare=False)

    def id_of(self, label: str) -> Optional[int]:
        return self.index.get(label)


@dataclass(frozen=True)
class NamedSets:
    names: tuple[str, ...]
    sets: tuple[NodeSet, ...]
    dropped_members: dict = field(default_factory=dict)
    dropped_sets: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.names)

    def get(self, name: str) -> NodeSet:
        try:
            return self.sets[self.names.index(name)]
        except ValueError:
            raise InputError(f"no node set named {name!r}") from None


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def parse_edge_list(path) -> LabeledGraph:
    """Read ``u v`` lines; labels become dense ids in order of first appearance.

    A line holding a single label declares an isolated node.  Duplicate edges
    (in either orientation) and self-loops are dropped and counted.
    """
    index: dict[str, int] = {}
    labels: list[str] = []
    edges = set()
    duplicates = loops = 0

    def node(label: str) -> int:
        if label not in index:
            index[label] = len(labels)
            labels.append(label)
        return index[label]

    for lineno, line in _content_lines(path):
        parts = line.split()
        if len(parts) == 1:
            node(parts[0])
            continue
        if len(parts) != 2:
            raise InputError(f"expected 'u v', got {line!r}", path, lineno)
        u, v = node(parts[0]), node(parts[1])
        if u == v:
            loops += 1
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            duplicates += 1
            continue
        edges.add(key)
    if not labels:
        raise InputError("edge list is empty", path)
    graph = Graph.from_edges(len(labels), sorted(edges))
    return LabeledGraph(graph, tuple(labels), duplicates, loops, index)


def write_edge_list(path, lg: LabeledGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in lg.graph.edges:
            fh.write(f"{lg.labels[u]} {lg.labels[v]}\n")
        touched = {u for e in lg.graph.edges for u in e}
        for u in range(lg.graph.n):
            if u not in touched:
                fh.write(f"{lg.labels[u]}\n")


def parse_node_sets(path, lg: LabeledGraph, delimiter: str = "\t") -> NamedSets:
    """Read ``name<TAB>members`` lines (members separated by tabs or spaces).

    Members absent from the graph are dropped and reported; sets left with
    no members are dropped.
    """
    names, sets = [], []
    dropped_members: dict[str, list[str]] = {}
    dropped_sets = []
    seen = 0
    for lineno, line in _content_lines(path):
        seen += 1
        if delimiter in line:
            name, rest = line.split(delimiter, 1)
            tokens = rest.split() if delimiter.isspace() else rest.replace(delimiter, " ").split()
        else:
            parts = line.split()
            name, tokens = parts[0], parts[1:]
        name = name.strip()
        if name in names or name in dropped_sets:
            raise InputError(f"duplicate set name {name!r}", path, lineno)
        ids, missing = [], []
        for tok in tokens:
            i = lg.id_of(tok)
            (missing if i is None else ids).append(tok if i is None else i)
        if missing:
            dropped_members[name] = missing
        if ids:
            names.append(name)
            sets.append(NodeSet(ids))
        else:
            dropped_sets.append(name)
    if not seen:
        raise InputError("node-set file is empty", path)
    return NamedSets(tuple(names), tuple(sets), dropped_members, tuple(dropped_sets))


def export_node_sets(path, named: NamedSets, lg: LabeledGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, s in zip(named.names, named.sets):
            members = " ".join(lg.labels[i] for i in s.members)
            fh.write(f"{name}\t{members}\n")


@dataclass(frozen=True)
class ParsedFeatures:
    matrix: FeatureMatrix
    unknown_nodes: tuple[str, ...]
    missing_nodes: tuple[str, ...]


def parse_features(path, lg: LabeledGraph) -> ParsedFeatures:
    """Read ``node b1 ... bK`` rows into a matrix aligned with graph ids.

    Rows for nodes outside the graph are reported and skipped; graph nodes
    without a row get all-zero features and are reported.
    """
    width = None
    rows: dict[int, np.ndarray] = {}
    unknown = []
    for lineno, line in _content_lines(path):
        parts = line.split()
        values = parts[1:]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InputError(f"expected {width} feature values, got {len(values)}", path, lineno)
        if any(v not in ("0", "1") for v in values):
            raise InputError("feature values must be 0 or 1", path, lineno)
        i = lg.id_of(parts[0])
        if i is None:
            unknown.append(parts[0])
            continue
        rows[i] = np.array([v == "1" for v in values], dtype=np.uint8)
    if width is None:
        raise InputError("feature file is empty", path)
    bits = np.zeros((lg.graph.n, width), dtype=np.uint8)
    for i, row in rows.items():
        bits[i] = row
    missing = tuple(lg.labels[i] for i in range(lg.graph.n) if i not in rows)
    return ParsedFeatures(FeatureMatrix(bits), tuple(unknown), missing)


def write_features(path, fm: FeatureMatrix, lg: LabeledGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(fm.nodes):
            fh.write(lg.labels[i] + " " + " ".join(str(int(b)) for b in fm.bits[i]) + "\n")


def parse_expression(path, lg: LabeledGraph):
    """Read a samples x genes table: header ``group gene1 gene2 ...``, then one
    row per sample starting with its group label.  Genes are matched to graph
    labels; unmatched columns are ignored.  Returns (values, groups, column_ids).
    """
    lines = list(_content_lines(path))
    if len(lines) < 2:
        raise InputError("expression table needs a header and at least one sample", path)
    header = lines[0][1].split()[1:]
    keep = [(c, lg.id_of(g)) for c, g in enumerate(header) if lg.id_of(g) is not None]
    if not keep:
        raise InputError("no expression column matches a graph node", path)
    groups, values = [], []
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != len(header) + 1:
            raise InputError(f"expected {len(header) + 1} fields, got {len(parts)}", path, lineno)
        try:
            row = [float(parts[1 + c]) for c, _ in keep]
        except ValueError:
            raise InputError("non-numeric expression value", path, lineno) from None
        groups.append(parts[0])
        values.append(row)
    return np.array(values), groups, [i for _, i in keep]
