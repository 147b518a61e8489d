"""Erdos-Renyi graphs with two implanted, overlapping dense modules."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .graphcore import Graph, NodeSet

__all__ = [
    "RNG_ALGORITHM",
    "SyntheticSpec",
    "SyntheticInstance",
    "generate",
    "paper_spec",
    "quadrant_suite",
    "QUADRANTS",
    "derive_seed",
]

RNG_ALGORITHM = "numpy.PCG64+SeedSequence"

# (overlap size, overlap edge probability as a multiple of p), in the order
# small/sparse, small/dense, large/sparse, large/dense
QUADRANTS = ((20, 2), (20, 10), (30, 2), (30, 10))


def derive_seed(*key: int) -> int:
    """Deterministic 64-bit seed from an integer key."""
    return int(np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in key]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    p: float
    size_a: int
    size_b: int
    rho_a: float
    rho_b: float
    overlap: int
    rho_overlap: float
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.size_a, self.size_b, self.overlap) < 0:
            raise ValueError("sizes must be non-negative")
        if self.overlap > min(self.size_a, self.size_b):
            raise ValueError("overlap exceeds a module size")
        if self.size_a + self.size_b - self.overlap > self.n:
            raise ValueError("modules do not fit in the graph")
        for name in ("p", "rho_a", "rho_b", "rho_overlap"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SyntheticInstance:
    graph: Graph
    set_a: NodeSet
    set_b: NodeSet
    spec: SyntheticSpec


def _edge_probabilities(spec: SyntheticSpec) -> np.ndarray:
    """Pair probability matrix with blocks laid out as X | Z | Y | rest."""
    n = spec.n
    x = spec.size_a - spec.overlap
    z = spec.overlap
    y = spec.size_b - spec.overlap
    in_a = np.zeros(n, dtype=bool)
    in_b = np.zeros(n, dtype=bool)
    in_a[: x + z] = True
    in_b[x : x + z + y] = True
    in_z = in_a & in_b
    both_a = np.outer(in_a, in_a)
    both_b = np.outer(in_b, in_b)
    both_z = np.outer(in_z, in_z)
    prob = np.full((n, n), spec.p)
    prob[both_b] = spec.rho_b
    prob[both_a] = spec.rho_a
    prob[both_z] = spec.rho_overlap
    return prob


def generate(spec: SyntheticSpec) -> SyntheticInstance:
    """Sample a graph; each pair is an edge independently with its block's probability.

    Pairs inside Z use ``rho_overlap``; other pairs inside A use ``rho_a``,
    other pairs inside B use ``rho_b``; everything else (including X-Y pairs)
    uses the background ``p``.  Blocks are placed on a random relabelling of
    the nodes.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    n = spec.n
    prob = _edge_probabilities(spec)
    iu, ju = np.triu_indices(n, k=1)
    present = rng.random(len(iu)) < prob[iu, ju]
    labels = rng.permutation(n)
    u = labels[iu[present]]
    v = labels[ju[present]]
    edges = list(zip(np.minimum(u, v).tolist(), np.maximum(u, v).tolist()))
    x = spec.size_a - spec.overlap
    set_a = NodeSet(labels[: spec.size_a].tolist())
    set_b = NodeSet(labels[x : x + spec.size_b].tolist())
    return SyntheticInstance(Graph.from_edges(n, edges), set_a, set_b, spec)


def paper_spec(overlap: int, overlap_multiple: float, seed: int = 0, n: int = 80) -> SyntheticSpec:
    """Background p = 3/n, modules of 50 and 40 nodes at density 10p."""
    p = 3.0 / n
    scale = n / 80
    return SyntheticSpec(
        n=n,
        p=p,
        size_a=round(50 * scale),
        size_b=round(40 * scale),
        rho_a=10 * p,
        rho_b=10 * p,
        overlap=round(overlap * scale),
        rho_overlap=overlap_multiple * p,
        seed=seed,
    )


def quadrant_suite(seed: int) -> list[SyntheticInstance]:
    """The four overlap-size x overlap-density settings, one instance each."""
    return [
        generate(paper_spec(overlap, mult, seed=derive_seed(seed, k)))
        for k, (overlap, mult) in enumerate(QUADRANTS)
    ]
