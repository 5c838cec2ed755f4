"""Remediation simulation: how many servers come back as vulnerabilities get fixed.

The alive model is deliberately simple. A hardware node is compromised while
any software it hosts is hit by a still-active vulnerability. A server is
alive when it is not compromised and the gateway reaches it over hardware
links without passing through a compromised node. A compromised gateway
reaches nothing.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .cdg import Cdg, EdgeKind, Layer
from .errors import ArgumentError
from .scoring import VulnerabilityScore
from .topology import NodeKind
from .vulnmatch import VulnerabilityRecord, VulnMatch

__all__ = [
    "FixPlan",
    "FixPlanResult",
    "PlanComparison",
    "alive_servers",
    "simulate_fix",
    "compare_plans",
    "contextual_order",
    "base_score_order",
    "render_steps_csv",
    "render_ascii_plot",
]


@dataclass(frozen=True)
class FixPlan:
    ordering: tuple[str, ...]
    name: str = "plan"

    def __post_init__(self):
        if len(set(self.ordering)) != len(self.ordering):
            raise ArgumentError(f"{self.name}: fix plan repeats a vulnerability")


@dataclass(frozen=True)
class FixPlanResult:
    plan: FixPlan
    alive_counts: tuple[int, ...]

    @property
    def auc(self) -> int:
        return sum(self.alive_counts)


@dataclass(frozen=True)
class PlanComparison:
    a: FixPlanResult
    b: FixPlanResult
    winner: str  # "a", "b" or "tie"
    steps: list[tuple[int, int, int]] = field(default_factory=list)


def _hw_adjacency(cdg: Cdg) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n.id: [] for n in cdg.layer(Layer.HARDWARE)}
    for e in cdg.edges_of(EdgeKind.HW_LINK):
        adj[e.src].append(e.dst)
    return adj


def alive_servers(cdg: Cdg, compromised: set[str], gateway: str, adj: dict[str, list[str]] | None = None) -> set[str]:
    """Servers reachable from ``gateway`` through uncompromised hardware."""
    adj = adj if adj is not None else _hw_adjacency(cdg)
    if gateway in compromised:
        return set()
    reached = {gateway}
    queue = deque([gateway])
    while queue:
        for nxt in adj[queue.popleft()]:
            if nxt not in reached and nxt not in compromised:
                reached.add(nxt)
                queue.append(nxt)
    return {nid for nid in reached if cdg.nodes[nid].kind is NodeKind.SERVER}


def simulate_fix(cdg: Cdg, matches: Sequence[VulnMatch], plan: FixPlan, gateway: str) -> FixPlanResult:
    """Alive-server count before any fix and after each fix in ``plan``.

    ``plan`` must be a permutation of the matched vulnerability ids.
    """
    gw = cdg.nodes.get(gateway)
    if gw is None or gw.layer is not Layer.HARDWARE:
        raise ArgumentError(f"gateway {gateway!r} is not a hardware node")
    hosts = {m.vuln_id: {cdg.nodes[n].host for n in m.affected_nodes} for m in matches}
    if set(plan.ordering) != set(hosts) or len(plan.ordering) != len(hosts):
        raise ArgumentError(f"{plan.name}: plan must cover exactly the matched vulnerabilities")

    adj = _hw_adjacency(cdg)
    active = set(hosts)
    counts = []
    for step in range(len(plan.ordering) + 1):
        if step:
            active.discard(plan.ordering[step - 1])
        compromised = set().union(*(hosts[v] for v in active))
        counts.append(len(alive_servers(cdg, compromised, gateway, adj)))
    return FixPlanResult(plan, tuple(counts))


def compare_plans(cdg: Cdg, matches: Sequence[VulnMatch], plan_a: FixPlan, plan_b: FixPlan, gateway: str) -> PlanComparison:
    """Simulate both plans; the one with the larger area under the alive curve wins."""
    ra = simulate_fix(cdg, matches, plan_a, gateway)
    rb = simulate_fix(cdg, matches, plan_b, gateway)
    winner = "a" if ra.auc > rb.auc else "b" if rb.auc > ra.auc else "tie"
    steps = [(t, x, y) for t, (x, y) in enumerate(zip(ra.alive_counts, rb.alive_counts))]
    return PlanComparison(ra, rb, winner, steps)


def contextual_order(scores: Sequence[VulnerabilityScore]) -> FixPlan:
    """Fix order following contextual severity (scores are already ranked)."""
    return FixPlan(tuple(s.vuln_id for s in scores), "ncvs")


def base_score_order(matches: Sequence[VulnMatch], vulndb: Sequence[VulnerabilityRecord]) -> FixPlan:
    """Fix order by base score desc, ties by id."""
    base = {r.id: r.base_score for r in vulndb}
    missing = [m.vuln_id for m in matches if m.vuln_id not in base]
    if missing:
        raise ArgumentError(f"no base score for {', '.join(missing)}")
    ids = sorted((m.vuln_id for m in matches), key=lambda v: (-base[v], v))
    return FixPlan(tuple(ids), "cvss")


def render_steps_csv(cmp: PlanComparison) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", f"alive_{cmp.a.plan.name}", f"alive_{cmp.b.plan.name}"])
    writer.writerows(cmp.steps)
    return out.getvalue()


def render_ascii_plot(cmp: PlanComparison, width: int = 40) -> str:
    """Horizontal bars per step, one row per plan."""
    top = max(max(cmp.a.alive_counts, default=0), max(cmp.b.alive_counts, default=0), 1)
    na, nb = cmp.a.plan.name, cmp.b.plan.name
    label = max(len(na), len(nb))
    lines = []
    for t, x, y in cmp.steps:
        for name, v in ((na, x), (nb, y)):
            bar = "#" * round(width * v / top)
            lines.append(f"t={t:<3d} {name:<{label}} |{bar:<{width}}| {v}")
    lines.append(f"auc {na}={cmp.a.auc} {nb}={cmp.b.auc} winner={cmp.winner}")
    return "\n".join(lines) + "\n"
