"""Node ranking and contextual severity scoring.

Each software node gets three importances, one per CDG projection:

* ``ti`` - rank of the node's host in the hardware graph,
* ``si`` - rank in the software-dependency graph,
* ``ni`` - rank in the network-dependency graph (0 if it has no network edges).

A vulnerability's severity aggregates those importances over the nodes it
affects, either as a weighted sum or as the sum of per-node products scaled
by the base score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Mapping, Sequence

import numpy as np

from .cdg import Cdg, Layer, Projection, project
from .errors import ArgumentError, ParseError
from .vulnmatch import VulnerabilityRecord, VulnMatch

__all__ = [
    "RankConfig",
    "ImportanceTriple",
    "Weights",
    "Aggregator",
    "VulnerabilityScore",
    "pagerank",
    "pagerank_arrays",
    "compute_importances",
    "score_vulnerabilities",
    "sweep_weights",
    "dump_report",
    "load_report",
]


@dataclass(frozen=True)
class RankConfig:
    damping: float = 0.85
    max_iterations: int = 100
    tolerance: float = 0.001

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ArgumentError(f"damping must be in (0, 1), got {self.damping!r}")
        if self.max_iterations < 1:
            raise ArgumentError(f"max_iterations must be positive, got {self.max_iterations!r}")
        if self.tolerance <= 0:
            raise ArgumentError(f"tolerance must be positive, got {self.tolerance!r}")


@dataclass(frozen=True)
class ImportanceTriple:
    node: str
    ti: float
    si: float
    ni: float


@dataclass(frozen=True)
class Weights:
    ti: float = 1.0
    ni: float = 1.0
    si: float = 1.0

    def __post_init__(self):
        if min(self.ti, self.ni, self.si) < 0:
            raise ArgumentError("weights must be non-negative")
        if self.ti == self.ni == self.si == 0:
            raise ArgumentError("at least one weight must be positive")

    def scaled(self, c: float) -> Weights:
        return Weights(self.ti * c, self.ni * c, self.si * c)


class Aggregator(str, Enum):
    WEIGHTED_SUM = "weighted_sum"
    CVSS_PRODUCT = "cvss_product"

    @classmethod
    def parse(cls, text: str | Aggregator) -> Aggregator:
        return cls(text.replace("-", "_")) if isinstance(text, str) else cls(text)


@dataclass(frozen=True)
class VulnerabilityScore:
    """Severity of one vulnerability with the sums it was computed from.

    ``ti``, ``ni`` and ``si`` are summed over the affected nodes;
    ``product`` is the sum of per-node ``ti * ni * si``.
    """

    vuln_id: str
    severity: float
    ti: float
    ni: float
    si: float
    product: float
    aggregator: Aggregator
    base_score: float | None
    affected_nodes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.vuln_id,
            "severity": self.severity,
            "breakdown": {"ti": self.ti, "ni": self.ni, "si": self.si, "product": self.product},
            "affected_nodes": list(self.affected_nodes),
            "aggregator": self.aggregator.value,
            "base_score": self.base_score,
        }


# ------------------------------------------------------------------ ranking


def pagerank_arrays(n: int, src: np.ndarray, dst: np.ndarray, config: RankConfig = RankConfig()) -> np.ndarray:
    """Power-iteration PageRank over integer-indexed edges ``src[i] -> dst[i]``.

    Teleport is uniform and dangling mass is spread uniformly. Iteration
    stops once the L1 change between consecutive vectors drops below
    ``config.tolerance`` or after ``config.max_iterations`` steps.
    """
    if n <= 0:
        raise ArgumentError("cannot rank an empty graph")
    d = config.damping
    out_deg = np.bincount(src, minlength=n).astype(float)
    dangling = out_deg == 0
    inv_out = np.divide(1.0, out_deg, out=np.zeros(n), where=~dangling)
    rank = np.full(n, 1.0 / n)
    for _ in range(config.max_iterations):
        share = rank * inv_out
        new = d * np.bincount(dst, weights=share[src], minlength=n)
        new += (d * rank[dangling].sum() + 1.0 - d) / n
        delta = np.abs(new - rank).sum()
        rank = new
        if delta < config.tolerance:
            break
    return rank / rank.sum()


def pagerank(graph: Projection, config: RankConfig = RankConfig()) -> dict[str, float]:
    """Rank the nodes of a directed graph; edges are followed as stored.

    A node that many others point at (many "depends on" edges into it)
    collects rank.
    """
    index = {nid: i for i, nid in enumerate(graph.nodes)}
    if graph.edges:
        src = np.fromiter((index[a] for a, _ in graph.edges), dtype=np.int64, count=len(graph.edges))
        dst = np.fromiter((index[b] for _, b in graph.edges), dtype=np.int64, count=len(graph.edges))
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    scores = pagerank_arrays(len(graph.nodes), src, dst, config)
    return dict(zip(graph.nodes, scores.tolist()))


Ranker = Callable[[Projection, RankConfig], Mapping[str, float]]


def compute_importances(cdg: Cdg, config: RankConfig = RankConfig(), rank: Ranker = pagerank) -> list[ImportanceTriple]:
    """Rank each projection once and read off (ti, si, ni) per software node.

    ``rank`` is pluggable; any callable with the signature of :func:`pagerank`
    works. Empty projections contribute zeros.
    """
    scores = {}
    for which in ("hw_graph", "sw_graph", "net_graph"):
        graph = project(cdg, which)
        scores[which] = rank(graph, config) if graph.nodes else {}
    hw, sw, net = scores["hw_graph"], scores["sw_graph"], scores["net_graph"]
    return [
        ImportanceTriple(n.id, hw.get(n.host, 0.0), sw.get(n.id, 0.0), net.get(n.id, 0.0))
        for n in cdg.nodes.values()
        if n.layer is Layer.SOFTWARE
    ]


# --------------------------------------------------------------- severities


def score_vulnerabilities(
    matches: Sequence[VulnMatch],
    importances: Sequence[ImportanceTriple] | Mapping[str, ImportanceTriple],
    weights: Weights = Weights(),
    aggregator: Aggregator | str = Aggregator.WEIGHTED_SUM,
    vulndb: Sequence[VulnerabilityRecord] = (),
) -> list[VulnerabilityScore]:
    """Aggregate node importances into one severity per matched vulnerability.

    Sorted by severity desc, then base score desc, then id.
    """
    aggregator = Aggregator.parse(aggregator)
    if not isinstance(importances, Mapping):
        importances = {t.node: t for t in importances}
    bases = {r.id: r.base_score for r in vulndb}

    scores = []
    for m in matches:
        missing = [n for n in m.affected_nodes if n not in importances]
        if missing:
            raise ArgumentError(f"{m.vuln_id}: no importance for {', '.join(sorted(missing))}")
        triples = [importances[n] for n in sorted(m.affected_nodes)]
        ti = sum(t.ti for t in triples)
        ni = sum(t.ni for t in triples)
        si = sum(t.si for t in triples)
        prod = sum(t.ti * t.ni * t.si for t in triples)
        base = bases.get(m.vuln_id)
        if aggregator is Aggregator.WEIGHTED_SUM:
            severity = weights.ti * ti + weights.ni * ni + weights.si * si
        else:
            if base is None:
                raise ArgumentError(f"unknown vulnerability id {m.vuln_id} (no base score)")
            severity = prod * base
        scores.append(
            VulnerabilityScore(m.vuln_id, severity, ti, ni, si, prod, aggregator, base, tuple(sorted(m.affected_nodes)))
        )
    scores.sort(key=lambda s: (-s.severity, -(s.base_score or 0.0), s.vuln_id))
    return scores


def sweep_weights(
    matches: Sequence[VulnMatch],
    importances: Sequence[ImportanceTriple],
    grid: Sequence[float],
    vulndb: Sequence[VulnerabilityRecord] = (),
) -> list[dict]:
    """Weighted-sum rankings for every (w_ti, w_ni, w_si) in ``grid``^3 except all-zero."""
    out = []
    for w in product(grid, repeat=3):
        if not any(w):
            continue
        weights = Weights(*w)
        ranked = score_vulnerabilities(matches, importances, weights, Aggregator.WEIGHTED_SUM, vulndb)
        out.append(
            {
                "weights": {"ti": weights.ti, "ni": weights.ni, "si": weights.si},
                "ranking": [s.vuln_id for s in ranked],
                "severity": [s.severity for s in ranked],
            }
        )
    return out


# ------------------------------------------------------------------ reports


def dump_report(scores: Sequence[VulnerabilityScore]) -> str:
    return json.dumps([s.to_dict() for s in scores], indent=2) + "\n"


def load_report(text: str) -> list[VulnerabilityScore]:
    try:
        return [
            VulnerabilityScore(
                r["id"],
                float(r["severity"]),
                float(r["breakdown"]["ti"]),
                float(r["breakdown"]["ni"]),
                float(r["breakdown"]["si"]),
                float(r["breakdown"].get("product", 0.0)),
                Aggregator.parse(r.get("aggregator", "weighted_sum")),
                r.get("base_score"),
                tuple(r["affected_nodes"]),
            )
            for r in json.loads(text)
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad report document: {exc}") from None

