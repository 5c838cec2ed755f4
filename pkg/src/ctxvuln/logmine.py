"""Software dependency mining from service logs.

Log events are bucketed per host into fixed time windows; each window becomes
a transaction. Pairwise association rules ``A -> B`` are mined with Apriori
and every qualifying rule is read as "B depends on A" (B tends to run shortly
after A). A rule only qualifies if A precedes B in a strict majority of the
windows holding both.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .errors import ArgumentError, ParseError

__all__ = [
    "LogEvent",
    "Transaction",
    "AssociationRule",
    "SoftwareDependency",
    "group_transactions",
    "apriori_rules",
    "mine_software_dependencies",
    "extract_events",
    "parse_events",
    "dump_software_dependencies",
    "load_software_dependencies",
    "render_dependency_tags",
    "as_fraction",
]

DEFAULT_WINDOW_MS = 1000
DEFAULT_MIN_SUPPORT = 0.1
DEFAULT_MIN_CONFIDENCE = 0.7


@dataclass(frozen=True)
class LogEvent:
    timestamp: int
    node: str
    component: str

    def __post_init__(self):
        if not self.component:
            raise ArgumentError("log event component must be nonempty")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ArgumentError(f"invalid timestamp {self.timestamp!r}")


@dataclass(frozen=True)
class Transaction:
    node: str
    window_start: int
    items: tuple[str, ...]


@dataclass(frozen=True)
class AssociationRule:
    antecedent: str
    consequent: str
    support: float
    confidence: float


@dataclass
class SoftwareDependency:
    """``sw`` on ``node`` depends on every component in ``dep``.

    ``confidence`` holds the mining confidence for each entry of ``dep`` and
    is used to break cycles when the graph is assembled.
    """

    node: str
    sw: str
    dep: list[str]
    confidence: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.dep:
            raise ArgumentError(f"{self.sw}@{self.node}: dependency list is empty")
        if self.sw in self.dep:
            raise ArgumentError(f"{self.sw}@{self.node} depends on itself")
        if not self.confidence:
            self.confidence = [1.0] * len(self.dep)
        if len(self.confidence) != len(self.dep):
            raise ArgumentError(f"{self.sw}@{self.node}: confidence list length mismatch")

    def to_dict(self) -> dict:
        return {"node": self.node, "sw": self.sw, "dep": list(self.dep), "confidence": list(self.confidence)}

    def tag(self) -> str:
        return f'<node="{self.node}" sw="{self.sw}" dep="{",".join(self.dep)}"/>'


def as_fraction(x: float) -> Fraction:
    """Exact value of a threshold as written in decimal (0.7 -> 7/10)."""
    return Fraction(str(x))


# ------------------------------------------------------------------ windowing


def group_transactions(events: Iterable[LogEvent], window_ms: int = DEFAULT_WINDOW_MS) -> list[Transaction]:
    """Partition events per node into fixed windows anchored at the node's first event.

    Items inside a window keep first-occurrence order; repeated components are
    dropped. Empty windows produce no transaction. Output is ordered by node,
    then window start.
    """
    if window_ms <= 0:
        raise ArgumentError(f"window_ms must be positive, got {window_ms!r}")
    by_node: dict[str, list[LogEvent]] = defaultdict(list)
    for ev in events:
        by_node[ev.node].append(ev)

    out: list[Transaction] = []
    for node in sorted(by_node):
        evs = sorted(by_node[node], key=lambda e: e.timestamp)  # stable for ties
        t0 = evs[0].timestamp
        windows: dict[int, list[str]] = {}
        for ev in evs:
            items = windows.setdefault(int((ev.timestamp - t0) // window_ms), [])
            if ev.component not in items:
                items.append(ev.component)
        for idx in sorted(windows):
            out.append(Transaction(node, t0 + idx * window_ms, tuple(windows[idx])))
    return out


# -------------------------------------------------------------------- apriori


def _check_threshold(name: str, value: float) -> Fraction:
    if not 0 < value <= 1:
        raise ArgumentError(f"{name} must be in (0, 1], got {value!r}")
    return as_fraction(value)


def _frequent_itemsets(baskets: list[frozenset[str]], min_count: Fraction, max_size: int) -> dict[frozenset[str], int]:
    """Level-wise Apriori: a k-candidate survives only if all its (k-1)-subsets are frequent."""
    counts: dict[frozenset[str], int] = defaultdict(int)
    for b in baskets:
        for item in b:
            counts[frozenset((item,))] += 1
    level = {s: c for s, c in counts.items() if c >= min_count}
    frequent = dict(level)
    k = 2
    while level and k <= max_size:
        prev = set(level)
        candidates = set()
        for a, b in combinations(sorted(prev, key=sorted), 2):
            union = a | b
            if len(union) == k and all(frozenset(sub) in prev for sub in combinations(union, k - 1)):
                candidates.add(union)
        counts = defaultdict(int)
        for b in baskets:
            for cand in candidates:
                if cand <= b:
                    counts[cand] += 1
        level = {s: c for s, c in counts.items() if c >= min_count}
        frequent.update(level)
        k += 1
    return frequent


def apriori_rules(
    transactions: list[Transaction],
    min_support: float = DEFAULT_MIN_SUPPORT,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> list[AssociationRule]:
    """Mine pairwise rules ``X -> Y`` over ``transactions``.

    A rule is kept when support({X, Y}) >= min_support,
    support({X, Y}) / support({X}) >= min_confidence, and X occurs before Y in
    more than half of the transactions that contain both. Thresholds are
    compared exactly in their decimal value. Rules are sorted by confidence
    desc, support desc, then (antecedent, consequent).
    """
    sup = _check_threshold("min_support", min_support)
    conf = _check_threshold("min_confidence", min_confidence)
    if not transactions:
        return []
    n = len(transactions)
    baskets = [frozenset(t.items) for t in transactions]
    frequent = _frequent_itemsets(baskets, sup * n, max_size=2)

    precedes: dict[tuple[str, str], int] = defaultdict(int)
    for t in transactions:
        for i, x in enumerate(t.items):
            for y in t.items[i + 1 :]:
                precedes[(x, y)] += 1

    rules = []
    for itemset, both in frequent.items():
        if len(itemset) != 2:
            continue
        for x, y in (sorted(itemset), sorted(itemset, reverse=True)):
            x_count = frequent[frozenset((x,))]
            if Fraction(both, x_count) < conf or 2 * precedes[(x, y)] <= both:
                continue
            rules.append(AssociationRule(x, y, both / n, both / x_count))
    rules.sort(key=lambda r: (-r.confidence, -r.support, r.antecedent, r.consequent))
    return rules


def mine_software_dependencies(
    events: Iterable[LogEvent],
    window_ms: int = DEFAULT_WINDOW_MS,
    min_support: float = DEFAULT_MIN_SUPPORT,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> list[SoftwareDependency]:
    """Mine rules per node and fold every ``A -> B`` into "B depends on A".

    Antecedents sharing a consequent are merged into one record whose ``dep``
    list is sorted. Output is sorted by (node, sw).
    """
    _check_threshold("min_support", min_support)
    _check_threshold("min_confidence", min_confidence)
    by_node: dict[str, list[Transaction]] = defaultdict(list)
    for t in group_transactions(events, window_ms):
        by_node[t.node].append(t)

    result = []
    for node in sorted(by_node):
        folded: dict[str, dict[str, float]] = defaultdict(dict)
        for rule in apriori_rules(by_node[node], min_support, min_confidence):
            folded[rule.consequent][rule.antecedent] = rule.confidence
        for sw in sorted(folded):
            deps = sorted(folded[sw])
            result.append(SoftwareDependency(node, sw, deps, [folded[sw][d] for d in deps]))
    return result


# ------------------------------------------------------------------------ I/O


def _timestamp(raw: str) -> int:
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return int(float(raw))
    except ValueError:
        pass
    return int(datetime.fromisoformat(raw).timestamp() * 1000)


def extract_events(lines: Iterable[str], pattern: str) -> list[LogEvent]:
    """Pull events out of raw log lines with a user-supplied regex.

    The pattern needs named groups ``timestamp``, ``node`` and ``component``.
    ``timestamp`` may be integer milliseconds or an ISO-8601 datetime. Lines
    that do not match are skipped.
    """
    rx = re.compile(pattern)
    missing = {"timestamp", "node", "component"} - set(rx.groupindex)
    if missing:
        raise ArgumentError(f"pattern lacks named groups: {', '.join(sorted(missing))}")
    events = []
    for lineno, line in enumerate(lines, start=1):
        m = rx.search(line)
        if not m:
            continue
        try:
            ts = _timestamp(m["timestamp"])
        except ValueError:
            raise ParseError(f"bad timestamp {m['timestamp']!r}", f"line {lineno}") from None
        events.append(LogEvent(ts, m["node"], m["component"]))
    return events


def parse_events(text: str, format: str = "csv") -> list[LogEvent]:
    """Read a normalized event file (CSV ``timestamp_ms,node,component`` or JSON)."""
    if format == "json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, f"line {exc.lineno}") from None
        if not isinstance(rows, list):
            raise ParseError("event document must be a JSON array")
        records = ((f"[{i}]", r) for i, r in enumerate(rows))
    elif format == "csv":
        reader = csv.reader(io.StringIO(text))
        records = (
            (f"line {i}", dict(zip(("timestamp_ms", "node", "component"), row)) if len(row) == 3 else row)
            for i, row in enumerate(reader, start=1)
            if row and not row[0].lstrip().startswith("#") and row[0].strip() != "timestamp_ms"
        )
    else:
        raise ArgumentError(f"unsupported event format {format!r}")

    events = []
    for loc, rec in records:
        if not isinstance(rec, dict) or not {"timestamp_ms", "node", "component"} <= rec.keys():
            raise ParseError("event needs timestamp_ms, node and component", loc)
        try:
            ts = int(rec["timestamp_ms"])
        except (TypeError, ValueError):
            raise ParseError(f"bad timestamp {rec['timestamp_ms']!r}", loc) from None
        try:
            events.append(LogEvent(ts, str(rec["node"]).strip(), str(rec["component"]).strip()))
        except ArgumentError as exc:
            raise ParseError(str(exc), loc) from None
    return events


def dump_software_dependencies(deps: list[SoftwareDependency]) -> str:
    return json.dumps([d.to_dict() for d in deps], indent=2) + "\n"


def load_software_dependencies(text: str) -> list[SoftwareDependency]:
    try:
        rows = json.loads(text)
        return [
            SoftwareDependency(r["node"], r["sw"], list(r["dep"]), list(r.get("confidence", [])))
            for r in rows
        ]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad software dependency document: {exc}") from None


def render_dependency_tags(deps: list[SoftwareDependency]) -> str:
    """One ``<node="M" sw="S" dep="x,y,z"/>`` line per record."""
    return "".join(d.tag() + "\n" for d in deps)
