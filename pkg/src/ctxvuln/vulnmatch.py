"""Local vulnerability database loading and keyword matching onto CDG nodes."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable

from .cdg import Cdg, CdgNode, Layer
from .errors import ParseError, ValidationError

__all__ = [
    "VulnerabilityRecord",
    "VulnMatch",
    "MatchReport",
    "load_vulndb",
    "tokens",
    "keyword_matcher",
    "match_vulnerabilities",
    "dump_matches",
    "load_matches",
]

CVE_ID = re.compile(r"^CVE-\d{4}-\d{4,}$")
_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class VulnerabilityRecord:
    id: str
    summary: str
    products: tuple[str, ...]
    base_score: float

    def __post_init__(self):
        if not CVE_ID.match(self.id):
            raise ValidationError(f"malformed vulnerability id {self.id!r}")
        if not (isinstance(self.base_score, (int, float)) and math.isfinite(self.base_score)):
            raise ValidationError(f"{self.id}: base_score must be a number")
        if not 0 <= self.base_score <= 10:
            raise ValidationError(f"{self.id}: base_score {self.base_score} outside [0, 10]")
        if not self.products or not all(isinstance(p, str) and p.strip() for p in self.products):
            raise ValidationError(f"{self.id}: products must be a nonempty list of names")

    def to_dict(self) -> dict:
        return {"id": self.id, "summary": self.summary, "products": list(self.products), "base_score": self.base_score}


@dataclass(frozen=True)
class VulnMatch:
    vuln_id: str
    affected_nodes: frozenset[str]

    def to_dict(self) -> dict:
        return {"vuln_id": self.vuln_id, "affected_nodes": sorted(self.affected_nodes)}


@dataclass
class MatchReport:
    matches: list[VulnMatch] = field(default_factory=list)
    unmatched: list[str] = field(default_factory=list)


def load_vulndb(text: str) -> list[VulnerabilityRecord]:
    """Parse the JSON array database; errors carry the record index."""
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    if not isinstance(rows, list):
        raise ParseError("vulnerability database must be a JSON array")
    records: list[VulnerabilityRecord] = []
    seen: set[str] = set()
    for i, row in enumerate(rows):
        loc = f"record {i}"
        if not isinstance(row, dict):
            raise ParseError("record must be an object", loc)
        missing = {"id", "products", "base_score"} - row.keys()
        if missing:
            raise ParseError(f"missing {', '.join(sorted(missing))}", loc)
        if not isinstance(row["products"], list):
            raise ParseError("products must be an array", loc)
        try:
            rec = VulnerabilityRecord(str(row["id"]), str(row.get("summary", "")), tuple(row["products"]), row["base_score"])
        except ValidationError as exc:
            raise ValidationError(f"{loc}: {exc}") from None
        if rec.id in seen:
            raise ValidationError(f"{loc}: duplicate id {rec.id}")
        seen.add(rec.id)
        records.append(rec)
    return records


def tokens(text: str) -> list[str]:
    return [t for t in _SPLIT.split(text.lower()) if t]


def _contains_run(haystack: list[str], needle: list[str]) -> bool:
    k = len(needle)
    return k > 0 and any(haystack[i : i + k] == needle for i in range(len(haystack) - k + 1))


def keyword_matcher(record: VulnerabilityRecord, node: CdgNode) -> bool:
    """True if some product keyword appears in the node name on token boundaries.

    Names and keywords are lower-cased and split on non-alphanumerics, so
    ``"ios"`` matches ``"switch-os-ios"`` while ``"os"`` does not match
    ``"postgres"``.
    """
    name = tokens(node.name)
    return any(_contains_run(name, tokens(p)) for p in record.products)


Matcher = Callable[[VulnerabilityRecord, CdgNode], bool]


def match_vulnerabilities(db: list[VulnerabilityRecord], cdg: Cdg, matcher: Matcher = keyword_matcher) -> MatchReport:
    """Map each record onto the software nodes it affects.

    Only software-layer nodes are considered. Records that hit nothing are
    listed in ``MatchReport.unmatched``.
    """
    software = cdg.layer(Layer.SOFTWARE)
    report = MatchReport()
    for rec in db:
        hit = frozenset(n.id for n in software if matcher(rec, n))
        if hit:
            report.matches.append(VulnMatch(rec.id, hit))
        else:
            report.unmatched.append(rec.id)
    return report


def dump_matches(report: MatchReport) -> str:
    doc = {"matches": [m.to_dict() for m in report.matches], "unmatched": list(report.unmatched)}
    return json.dumps(doc, indent=2) + "\n"


def load_matches(text: str) -> MatchReport:
    try:
        doc = json.loads(text)
        return MatchReport(
            [VulnMatch(m["vuln_id"], frozenset(m["affected_nodes"])) for m in doc["matches"]],
            list(doc.get("unmatched", [])),
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad match document: {exc}") from None
