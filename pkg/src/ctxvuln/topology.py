"""Hardware topology: parsing, serialization, validation and generators.

A topology is a plain list of nodes and undirected links. Files come in two
flavours, a section-tagged CSV::

    # kind rows and link rows may be interleaved
    node,s1,server,rack1;hadoop
    node,e1,edge_switch,rack1
    link,s1,e1

and a JSON object ``{"nodes": [{"id", "kind", "labels"}], "links": [{"a", "b"}]}``.

When no file exists, :func:`generate_fat_tree` and :func:`generate_bcube`
synthesize the canonical data-center layouts. Both are registered in
:data:`GENERATORS` so new generation rules can be plugged in by name.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Callable

from .errors import ArgumentError, ParseError, ValidationError

__all__ = [
    "NodeKind",
    "TopologyNode",
    "TopologyLink",
    "TopologyGraph",
    "parse_topology",
    "serialize_topology",
    "validate_topology",
    "generate_fat_tree",
    "generate_bcube",
    "GENERATORS",
    "register_generator",
]


class NodeKind(str, Enum):
    SERVER = "server"
    EDGE_SWITCH = "edge_switch"
    AGGREGATION_SWITCH = "aggregation_switch"
    CORE_SWITCH = "core_switch"
    GATEWAY = "gateway"


@dataclass(frozen=True)
class TopologyNode:
    id: str
    kind: NodeKind
    labels: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind.value, "labels": sorted(self.labels)}


@dataclass(frozen=True)
class TopologyLink:
    """Undirected physical link; ``(a, b)`` and ``(b, a)`` are the same link."""

    a: str
    b: str

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}


@dataclass
class TopologyGraph:
    nodes: list[TopologyNode] = field(default_factory=list)
    links: list[TopologyLink] = field(default_factory=list)

    def node(self, node_id: str) -> TopologyNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def of_kind(self, kind: NodeKind) -> list[TopologyNode]:
        return [n for n in self.nodes if n.kind is kind]

    def neighbors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            adj.setdefault(link.a, []).append(link.b)
            adj.setdefault(link.b, []).append(link.a)
        return adj

    def same_as(self, other: TopologyGraph) -> bool:
        """Compare node sets and undirected link sets, ignoring order."""
        return set(self.nodes) == set(other.nodes) and {l.pair for l in self.links} == {
            l.pair for l in other.links
        }


# ---------------------------------------------------------------- validation


def validate_topology(graph: TopologyGraph) -> list[str]:
    """Return one human-readable description per invariant violation.

    An empty list means node ids are unique, every link joins two distinct
    declared nodes, no link is repeated, and the graph is connected.
    """
    violations: list[str] = []
    seen: set[str] = set()
    for node in graph.nodes:
        if not node.id:
            violations.append("node with empty id")
        elif node.id in seen:
            violations.append(f"duplicate node id {node.id!r}")
        seen.add(node.id)
        if not isinstance(node.kind, NodeKind):
            violations.append(f"node {node.id!r} has invalid kind {node.kind!r}")

    pairs: set[frozenset[str]] = set()
    for link in graph.links:
        if link.a == link.b:
            violations.append(f"self-link on {link.a!r}")
            continue
        for end in (link.a, link.b):
            if end not in seen:
                violations.append(f"link ({link.a!r}, {link.b!r}) references unknown node {end!r}")
        if link.pair in pairs:
            violations.append(f"duplicate link ({link.a!r}, {link.b!r})")
        pairs.add(link.pair)

    if graph.nodes:
        adj = graph.neighbors()
        root = graph.nodes[0].id
        reached = {root}
        queue = deque([root])
        while queue:
            for nxt in adj.get(queue.popleft(), ()):
                if nxt in seen and nxt not in reached:
                    reached.add(nxt)
                    queue.append(nxt)
        for node in graph.nodes:
            if node.id and node.id not in reached:
                violations.append(f"node {node.id!r} is unreachable from {root!r}")
                reached.add(node.id)  # report each id once
    return violations


def _check(graph: TopologyGraph) -> TopologyGraph:
    """Raise on structural invariant violations (connectivity is not required)."""
    ids: set[str] = set()
    for node in graph.nodes:
        if node.id in ids:
            raise ValidationError(f"duplicate node id {node.id!r}")
        ids.add(node.id)
    pairs: set[frozenset[str]] = set()
    for link in graph.links:
        for end in (link.a, link.b):
            if end not in ids:
                raise ValidationError(f"link ({link.a}, {link.b}) references unknown node {end!r}")
        if link.a == link.b:
            raise ValidationError(f"self-link on {link.a!r}")
        if link.pair in pairs:
            raise ValidationError(f"duplicate link ({link.a}, {link.b})")
        pairs.add(link.pair)
    return graph


# ------------------------------------------------------------------- parsing


def _kind(value: str, locator: str) -> NodeKind:
    try:
        return NodeKind(value.strip())
    except ValueError:
        raise ParseError(f"unknown node kind {value!r}", locator) from None


def _parse_csv(text: str) -> TopologyGraph:
    nodes: list[TopologyNode] = []
    links: list[TopologyLink] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        tag = row[0].strip()
        if tag.startswith("#"):
            continue
        loc = f"line {lineno}"
        if tag == "node":
            if len(row) not in (3, 4):
                raise ParseError(f"node row needs 3 or 4 fields, got {len(row)}", loc)
            node_id = row[1].strip()
            if not node_id:
                raise ParseError("empty node id", loc)
            labels = row[3] if len(row) == 4 else ""
            nodes.append(
                TopologyNode(
                    node_id,
                    _kind(row[2], loc),
                    frozenset(x.strip() for x in labels.split(";") if x.strip()),
                )
            )
        elif tag == "link":
            if len(row) != 3:
                raise ParseError(f"link row needs 3 fields, got {len(row)}", loc)
            links.append(TopologyLink(row[1].strip(), row[2].strip()))
        elif lineno == 1 and tag in ("type", "section", "row"):
            continue  # optional header
        else:
            raise ParseError(f"unknown row tag {tag!r}", loc)
    return TopologyGraph(nodes, links)


def _parse_json(text: str) -> TopologyGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    nodes = []
    for i, raw in enumerate(doc.get("nodes", [])):
        loc = f"nodes[{i}]"
        if not isinstance(raw, dict) or "id" not in raw or "kind" not in raw:
            raise ParseError("node needs 'id' and 'kind'", loc)
        if not isinstance(raw["id"], str) or not raw["id"]:
            raise ParseError("id must be a nonempty string", f"{loc}.id")
        labels = raw.get("labels", [])
        if not isinstance(labels, list):
            raise ParseError("labels must be an array", f"{loc}.labels")
        nodes.append(TopologyNode(raw["id"], _kind(str(raw["kind"]), f"{loc}.kind"), frozenset(labels)))
    links = []
    for i, raw in enumerate(doc.get("links", [])):
        if not isinstance(raw, dict) or "a" not in raw or "b" not in raw:
            raise ParseError("link needs 'a' and 'b'", f"links[{i}]")
        links.append(TopologyLink(str(raw["a"]), str(raw["b"])))
    return TopologyGraph(nodes, links)


def parse_topology(text: str, format: str = "json") -> TopologyGraph:
    """Parse a topology document and enforce node/link invariants.

    Raises :class:`ParseError` for malformed documents and
    :class:`ValidationError` for duplicate ids, self-links, repeated links or
    links that name undeclared nodes.
    """
    if format == "csv":
        graph = _parse_csv(text)
    elif format == "json":
        graph = _parse_json(text)
    else:
        raise ArgumentError(f"unsupported topology format {format!r}")
    return _check(graph)


def serialize_topology(graph: TopologyGraph, format: str = "json") -> str:
    if format == "json":
        doc = {
            "nodes": [n.to_dict() for n in graph.nodes],
            "links": [l.to_dict() for l in graph.links],
        }
        return json.dumps(doc, indent=2) + "\n"
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        for n in graph.nodes:
            writer.writerow(["node", n.id, n.kind.value, ";".join(sorted(n.labels))])
        for l in graph.links:
            writer.writerow(["link", l.a, l.b])
        return out.getvalue()
    raise ArgumentError(f"unsupported topology format {format!r}")


# ---------------------------------------------------------------- generators


def _attach_gateway(nodes: list[TopologyNode], links: list[TopologyLink], uplinks: list[str]) -> None:
    nodes.append(TopologyNode("gw0", NodeKind.GATEWAY))
    links.extend(TopologyLink("gw0", u) for u in uplinks)


def generate_fat_tree(k: int, hosts_per_edge: int | None = None, gateway: bool = False) -> TopologyGraph:
    """Build a k-ary fat tree.

    There are ``(k/2)**2`` core switches and ``k`` pods of ``k/2`` aggregation
    plus ``k/2`` edge switches. Every edge switch connects to every
    aggregation switch in its pod, aggregation switch ``j`` of each pod
    connects to core group ``j``, and each edge switch hosts
    ``hosts_per_edge`` servers (``k/2`` by default). With ``gateway=True`` a
    node ``gw0`` is attached to every core switch.
    """
    if not isinstance(k, int) or k < 2 or k % 2:
        raise ArgumentError(f"fat-tree k must be an even integer >= 2, got {k!r}")
    half = k // 2
    hosts = half if hosts_per_edge is None else hosts_per_edge
    if hosts < 0:
        raise ArgumentError(f"hosts_per_edge must be non-negative, got {hosts_per_edge!r}")

    nodes: list[TopologyNode] = []
    links: list[TopologyLink] = []
    cores = [f"c{g}_{i}" for g in range(half) for i in range(half)]
    nodes.extend(TopologyNode(c, NodeKind.CORE_SWITCH) for c in cores)
    for pod in range(k):
        label = frozenset({f"pod{pod}"})
        aggs = [f"a{pod}_{j}" for j in range(half)]
        edges = [f"e{pod}_{j}" for j in range(half)]
        nodes.extend(TopologyNode(a, NodeKind.AGGREGATION_SWITCH, label) for a in aggs)
        nodes.extend(TopologyNode(e, NodeKind.EDGE_SWITCH, label) for e in edges)
        for j, agg in enumerate(aggs):
            links.extend(TopologyLink(agg, f"c{j}_{i}") for i in range(half))
        for edge, agg in product(edges, aggs):
            links.append(TopologyLink(edge, agg))
        for j, edge in enumerate(edges):
            for h in range(hosts):
                host = f"h{pod}_{j}_{h}"
                nodes.append(TopologyNode(host, NodeKind.SERVER, label))
                links.append(TopologyLink(host, edge))
    if gateway:
        _attach_gateway(nodes, links, cores)
    return TopologyGraph(nodes, links)


def generate_bcube(n: int, levels: int, gateway: bool = False) -> TopologyGraph:
    """Build BCube(n, levels).

    Servers carry a ``levels + 1`` digit address in base ``n``. The level-``l``
    switch a server attaches to is named by its address with digit ``l``
    removed, so every server has exactly ``levels + 1`` links. BCube switches
    all attach servers directly; they are typed ``edge_switch`` and labelled
    with their level. ``gateway=True`` attaches ``gw0`` to every top-level
    switch.
    """
    if not isinstance(n, int) or n < 2:
        raise ArgumentError(f"BCube n must be an integer >= 2, got {n!r}")
    if not isinstance(levels, int) or levels < 0:
        raise ArgumentError(f"BCube levels must be an integer >= 0, got {levels!r}")

    def name(digits: tuple[int, ...]) -> str:
        return "".join(map(str, digits)) if n <= 10 else ".".join(map(str, digits))

    nodes: list[TopologyNode] = []
    links: list[TopologyLink] = []
    for level in range(levels + 1):
        for rest in product(range(n), repeat=levels):
            nodes.append(TopologyNode(f"w{level}_{name(rest)}", NodeKind.EDGE_SWITCH, frozenset({f"level{level}"})))
    for addr in product(range(n), repeat=levels + 1):
        server = f"s{name(addr)}"
        nodes.append(TopologyNode(server, NodeKind.SERVER))
        for level in range(levels + 1):
            # digits are most-significant first; level l is position levels - l
            pos = levels - level
            rest = addr[:pos] + addr[pos + 1 :]
            links.append(TopologyLink(server, f"w{level}_{name(rest)}"))
    if gateway:
        _attach_gateway(nodes, links, [n_.id for n_ in nodes if f"level{levels}" in n_.labels])
    return TopologyGraph(nodes, links)


Generator = Callable[..., TopologyGraph]

GENERATORS: dict[str, Generator] = {
    "fat-tree": generate_fat_tree,
    "bcube": generate_bcube,
}


def register_generator(name: str, func: Generator) -> None:
    """Plug in an additional topology generation rule under ``name``."""
    GENERATORS[name] = func
