"""Human-readable and JSON rendering of severity rankings."""

from __future__ import annotations

from typing import Sequence

from .errors import ArgumentError
from .scoring import VulnerabilityScore, dump_report
from .vulnmatch import VulnMatch

HEADER = f"{'rank':>4}  {'id':<18}  {'severity':>10}  {'nodes':>5}"


def render_report(scores: Sequence[VulnerabilityScore], matches: Sequence[VulnMatch] = (), format: str = "text") -> str:
    """Render a ranked table (``text``) or the JSON report (``json``).

    Node counts come from ``matches`` when given, else from the scores.
    """
    if format == "json":
        return dump_report(scores)
    if format != "text":
        raise ArgumentError(f"unsupported report format {format!r}")
    counts = {m.vuln_id: len(m.affected_nodes) for m in matches}
    lines = [HEADER, "-" * len(HEADER)]
    for rank, s in enumerate(scores, start=1):
        n = counts.get(s.vuln_id, len(s.affected_nodes))
        lines.append(f"{rank:>4}  {s.vuln_id:<18}  {s.severity:>10.4f}  {n:>5}")
    return "\n".join(lines) + "\n"
