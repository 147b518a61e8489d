"""Graphs, node sets, and the sufficient statistics of a subgraph overlap."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

__all__ = [
    "GraphInputError",
    "Graph",
    "NodeSet",
    "OverlapStats",
    "induced_edge_count",
    "density",
    "cross_density",
    "overlap_stats",
]


class GraphInputError(ValueError):
    """Malformed graph or node-set input."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Build with :meth:`from_edges`; the instance is immutable afterwards.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[frozenset, ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        if n < 0:
            raise GraphInputError("node count must be non-negative")
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphInputError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphInputError(f"edge ({u}, {v}) outside node range [0, {n})")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise GraphInputError(f"duplicate edge {key}")
            seen.add(key)
        adj = [set() for _ in range(n)]
        for u, v in seen:
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, tuple(sorted(seen)), tuple(frozenset(s) for s in adj))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def neighbors(self, u: int) -> frozenset:
        return self.adjacency[u]


@dataclass(frozen=True)
class NodeSet:
    """Sorted, duplicate-free collection of node ids."""

    members: tuple[int, ...]

    def __init__(self, members: Iterable[int] = ()):
        object.__setattr__(self, "members", tuple(sorted({int(m) for m in members})))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, item) -> bool:
        return item in self.as_set()

    def as_set(self) -> frozenset:
        return frozenset(self.members)

    def union(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.as_set() | other.as_set())

    def intersection(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.as_set() & other.as_set())

    def validate(self, g: Graph) -> None:
        if self.members and (self.members[0] < 0 or self.members[-1] >= g.n):
            bad = [m for m in self.members if not 0 <= m < g.n]
            raise GraphInputError(f"node ids {bad[:5]} outside graph range [0, {g.n})")


@dataclass(frozen=True)
class OverlapStats:
    """Sizes and edge counts from which HGT, ERD and CoDO are computed."""

    n: int
    size_a: int
    size_b: int
    size_z: int
    edges_union: int
    edges_z: int
    ambient_p: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.size_z <= min(self.size_a, self.size_b):
            raise GraphInputError(f"overlap size {self.size_z} exceeds a set size")
        if self.size_a + self.size_b - self.size_z > self.n:
            raise GraphInputError("union larger than the ambient graph")
        if self.edges_z > _pairs(self.size_z):
            raise GraphInputError("overlap edge count exceeds C(|Z|, 2)")
        if self.edges_union > _pairs(self.size_union):
            raise GraphInputError("union edge count exceeds C(|A u B|, 2)")
        if self.edges_z > self.edges_union:
            raise GraphInputError("overlap edges exceed union edges")
        if self.ambient_p is not None and not 0.0 <= self.ambient_p <= 1.0:
            raise GraphInputError("ambient edge probability outside [0, 1]")

    @property
    def size_union(self) -> int:
        return self.size_a + self.size_b - self.size_z

    @property
    def overlap_density(self) -> Fraction:
        """Exact density of Z; zero when |Z| < 2 (density undefined there)."""
        pairs = _pairs(self.size_z)
        return Fraction(self.edges_z, pairs) if pairs else Fraction(0)

    def swapped(self) -> "OverlapStats":
        return OverlapStats(
            self.n, self.size_b, self.size_a, self.size_z, self.edges_union, self.edges_z, self.ambient_p
        )


def _pairs(k: int) -> int:
    return k * (k - 1) // 2


def induced_edge_count(g: Graph, s: NodeSet) -> int:
    s.validate(g)
    members = s.as_set()
    total = 0
    for u in s.members:
        adj = g.adjacency[u]
        # iterate the smaller side
        if len(adj) < len(members):
            total += sum(1 for v in adj if v in members)
        else:
            total += sum(1 for v in members if v in adj)
    return total // 2


def density(g: Graph, s: NodeSet) -> float:
    if len(s) < 2:
        raise GraphInputError("density is undefined for fewer than two nodes")
    return induced_edge_count(g, s) / _pairs(len(s))


def cross_density(g: Graph, s1: NodeSet, s2: NodeSet) -> float:
    s1.validate(g)
    s2.validate(g)
    if not len(s1) or not len(s2):
        raise GraphInputError("cross density needs two non-empty sets")
    other = s2.as_set()
    if s1.as_set() & other:
        raise GraphInputError("cross density needs disjoint sets")
    count = sum(1 for u in s1.members for v in g.adjacency[u] if v in other)
    return count / (len(s1) * len(s2))


def overlap_stats(g: Graph, a: NodeSet, b: NodeSet, ambient_p: Optional[float] = None) -> OverlapStats:
    if not len(a) or not len(b):
        raise GraphInputError("both node sets must be non-empty")
    z = a.intersection(b)
    return OverlapStats(
        n=g.n,
        size_a=len(a),
        size_b=len(b),
        size_z=len(z),
        edges_union=induced_edge_count(g, a.union(b)),
        edges_z=induced_edge_count(g, z),
        ambient_p=ambient_p,
    )
