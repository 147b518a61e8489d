"""Significance of overlap between two subgraphs: hypergeometric (HGT),
Erdős–Rényi density (ERD), and combined overlap-density (CoDO) p-values."""

__version__ = "0.1.0"

from .graphcore import Graph, NodeSet, OverlapStats, overlap_stats
from .significance import (
    CodoExperimentParams,
    SignificanceReport,
    codo_pvalue,
    erd_pvalue,
    hgt_pvalue,
    score_overlap,
)

__all__ = [
    "__version__",
    "Graph",
    "NodeSet",
    "OverlapStats",
    "overlap_stats",
    "CodoExperimentParams",
    "SignificanceReport",
    "codo_pvalue",
    "erd_pvalue",
    "hgt_pvalue",
    "score_overlap",
]
