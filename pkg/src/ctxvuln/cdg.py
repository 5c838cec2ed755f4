"""Contextual dependency graph (CDG).

Two layers share one directed graph. The hardware layer mirrors the physical
topology (each link becomes two opposite ``hw_link`` edges). The software
layer holds one node per (host, component) pair; each is tied to its host by
a ``hosted_on`` edge, to same-host libraries by ``software_dep`` edges and to
remote services by ``network_dep`` edges. Every edge ``A -> B`` reads
"A depends on B".
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .errors import ParseError, ValidationError
from .logmine import SoftwareDependency
from .netdep import NetworkDependency, ServiceEndpoint
from .topology import NodeKind, TopologyGraph

__all__ = [
    "Layer",
    "EdgeKind",
    "CdgNode",
    "CdgEdge",
    "DroppedEdge",
    "Cdg",
    "Projection",
    "build_cdg",
    "project",
    "serialize_cdg",
    "parse_cdg",
    "software_id",
    "load_endpoint_map",
]

log = logging.getLogger(__name__)


class Layer(str, Enum):
    HARDWARE = "hardware"
    SOFTWARE = "software"


class EdgeKind(str, Enum):
    HW_LINK = "hw_link"
    SOFTWARE_DEP = "software_dep"
    NETWORK_DEP = "network_dep"
    HOSTED_ON = "hosted_on"


@dataclass(frozen=True)
class CdgNode:
    id: str
    layer: Layer
    name: str
    host: str | None = None
    kind: NodeKind | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "layer": self.layer.value, "name": self.name}
        if self.host is not None:
            d["host"] = self.host
        if self.kind is not None:
            d["kind"] = self.kind.value
        return d


@dataclass(frozen=True)
class CdgEdge:
    src: str
    dst: str
    kind: EdgeKind

    def to_dict(self) -> dict:
        return {"from": self.src, "to": self.dst, "kind": self.kind.value}


@dataclass(frozen=True)
class DroppedEdge:
    """A mined edge removed while building the graph, and why."""

    src: str
    dst: str
    kind: EdgeKind
    weight: float
    reason: str

    def to_dict(self) -> dict:
        return {"from": self.src, "to": self.dst, "kind": self.kind.value, "weight": self.weight, "reason": self.reason}


def software_id(component: str, host: str) -> str:
    return f"{component}@{host}"


@dataclass
class Cdg:
    nodes: dict[str, CdgNode] = field(default_factory=dict)
    edges: list[CdgEdge] = field(default_factory=list)
    dropped: list[DroppedEdge] = field(default_factory=list, compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cdg):
            return NotImplemented
        return set(self.nodes.values()) == set(other.nodes.values()) and set(self.edges) == set(other.edges)

    def layer(self, layer: Layer) -> list[CdgNode]:
        return [n for n in self.nodes.values() if n.layer is layer]

    def edges_of(self, kind: EdgeKind) -> list[CdgEdge]:
        return [e for e in self.edges if e.kind is kind]

    def software_by_host(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for n in self.nodes.values():
            if n.layer is Layer.SOFTWARE:
                out[n.host].append(n.id)
        return out

    def validate(self) -> None:
        """Raise :class:`ValidationError` if any layer/edge-kind rule is broken."""
        for n in self.nodes.values():
            if n.layer is Layer.SOFTWARE:
                host = self.nodes.get(n.host or "")
                if host is None or host.layer is not Layer.HARDWARE:
                    raise ValidationError(f"software node {n.id!r} has unknown host {n.host!r}")
            elif n.kind is None:
                raise ValidationError(f"hardware node {n.id!r} has no kind")
        hosted = defaultdict(int)
        seen = set()
        for e in self.edges:
            if e in seen:
                raise ValidationError(f"duplicate edge {e.src} -> {e.dst} ({e.kind.value})")
            seen.add(e)
            a, b = self.nodes.get(e.src), self.nodes.get(e.dst)
            if a is None or b is None:
                raise ValidationError(f"edge {e.src} -> {e.dst} references unknown node")
            if e.src == e.dst:
                raise ValidationError(f"self-loop on {e.src!r}")
            hw, sw = Layer.HARDWARE, Layer.SOFTWARE
            ok = {
                EdgeKind.HW_LINK: a.layer is hw and b.layer is hw,
                EdgeKind.SOFTWARE_DEP: a.layer is sw and b.layer is sw and a.host == b.host,
                EdgeKind.NETWORK_DEP: a.layer is sw and b.layer is sw,
                EdgeKind.HOSTED_ON: a.layer is sw and b.layer is hw and a.host == b.id,
            }[e.kind]
            if not ok:
                raise ValidationError(f"edge {e.src} -> {e.dst} violates {e.kind.value} layer rules")
            if e.kind is EdgeKind.HOSTED_ON:
                hosted[e.src] += 1
        for n in self.layer(Layer.SOFTWARE):
            if hosted[n.id] != 1:
                raise ValidationError(f"software node {n.id!r} has {hosted[n.id]} hosted_on edges")
        for kind in (EdgeKind.SOFTWARE_DEP, EdgeKind.NETWORK_DEP):
            cycle = _find_cycle([(e.src, e.dst) for e in self.edges_of(kind)])
            if cycle:
                raise ValidationError(f"{kind.value} edges contain a cycle: {' -> '.join(cycle)}")


# ----------------------------------------------------------------- building


def _find_cycle(edges: list[tuple[str, str]]) -> list[str] | None:
    """Return one directed cycle as a node list (first node repeated at the end), or None."""
    adj: dict[str, list[str]] = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
    for a in adj:
        adj[a].sort()
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = defaultdict(int)
    for root in sorted(adj):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(adj[root]))]
        path = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GREY:
                return path[path.index(nxt) :] + [nxt]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return None


def _break_cycles(weighted: dict[tuple[str, str], float], kind: EdgeKind) -> list[DroppedEdge]:
    """Drop the weakest edge of each cycle until none remain (ties: lexicographically last)."""
    dropped = []
    while True:
        cycle = _find_cycle(list(weighted))
        if cycle is None:
            return dropped
        ring = list(zip(cycle, cycle[1:]))
        lowest = min(weighted[e] for e in ring)
        victim = max(e for e in ring if weighted[e] == lowest)
        dropped.append(DroppedEdge(victim[0], victim[1], kind, weighted.pop(victim), "closes a cycle"))


def build_cdg(
    topo: TopologyGraph,
    sw_deps: list[SoftwareDependency],
    net_deps: list[NetworkDependency],
    endpoint_map: Mapping[ServiceEndpoint, tuple[str, str]],
) -> Cdg:
    """Assemble the two-layer graph from the three mined dependency sets.

    ``endpoint_map`` resolves each network endpoint to ``(host, component)``.
    Mined edges that close a cycle are removed (weakest first) and recorded
    in ``Cdg.dropped``; so are network dependencies whose two endpoints
    resolve to the same software node.
    """
    hw_ids = {n.id for n in topo.nodes}
    nodes: dict[str, CdgNode] = {}
    for n in topo.nodes:
        nodes[n.id] = CdgNode(n.id, Layer.HARDWARE, n.id, kind=n.kind)

    software: dict[str, CdgNode] = {}

    def add_sw(host: str, component: str) -> str:
        if host not in hw_ids:
            raise ValidationError(f"unknown host {host!r} for component {component!r}")
        sid = software_id(component, host)
        if sid in nodes:
            raise ValidationError(f"software id {sid!r} collides with a hardware node")
        software.setdefault(sid, CdgNode(sid, Layer.SOFTWARE, component, host=host))
        return sid

    sw_weight: dict[tuple[str, str], float] = {}
    for dep in sw_deps:
        src = add_sw(dep.node, dep.sw)
        for lib, conf in zip(dep.dep, dep.confidence):
            dst = add_sw(dep.node, lib)
            sw_weight[(src, dst)] = max(conf, sw_weight.get((src, dst), 0.0))

    dropped: list[DroppedEdge] = []
    net_weight: dict[tuple[str, str], float] = {}
    for nd in net_deps:
        ends = []
        for ep in (nd.upstream, nd.downstream):
            if ep not in endpoint_map:
                raise ValidationError(f"unknown endpoint {ep}")
            host, component = endpoint_map[ep]
            ends.append(add_sw(host, component))
        src, dst = ends
        if src == dst:
            dropped.append(DroppedEdge(src, dst, EdgeKind.NETWORK_DEP, nd.weight, "endpoints map to one component"))
            continue
        net_weight[(src, dst)] = max(nd.weight, net_weight.get((src, dst), 0.0))

    dropped += _break_cycles(sw_weight, EdgeKind.SOFTWARE_DEP)
    dropped += _break_cycles(net_weight, EdgeKind.NETWORK_DEP)
    for d in dropped:
        log.warning("dropped %s edge %s -> %s (weight %.3f): %s", d.kind.value, d.src, d.dst, d.weight, d.reason)

    for sid in sorted(software):
        nodes[sid] = software[sid]
    edges: list[CdgEdge] = []
    for link in topo.links:
        edges.append(CdgEdge(link.a, link.b, EdgeKind.HW_LINK))
        edges.append(CdgEdge(link.b, link.a, EdgeKind.HW_LINK))
    edges += [CdgEdge(sid, software[sid].host, EdgeKind.HOSTED_ON) for sid in sorted(software)]
    edges += [CdgEdge(a, b, EdgeKind.SOFTWARE_DEP) for a, b in sorted(sw_weight)]
    edges += [CdgEdge(a, b, EdgeKind.NETWORK_DEP) for a, b in sorted(net_weight)]
    return Cdg(nodes, edges, dropped)


# --------------------------------------------------------------- projections


@dataclass(frozen=True)
class Projection:
    """A plain directed graph: node ids plus (from, to) pairs."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]


PROJECTIONS = ("hw_graph", "sw_graph", "net_graph")


def project(cdg: Cdg, which: str) -> Projection:
    """Restrict the CDG to one of ``hw_graph``, ``sw_graph`` or ``net_graph``.

    ``net_graph`` contains only software nodes that touch a network edge.
    """
    if which == "hw_graph":
        nodes = [n.id for n in cdg.nodes.values() if n.layer is Layer.HARDWARE]
        kind = EdgeKind.HW_LINK
    elif which == "sw_graph":
        nodes = [n.id for n in cdg.nodes.values() if n.layer is Layer.SOFTWARE]
        kind = EdgeKind.SOFTWARE_DEP
    elif which == "net_graph":
        kind = EdgeKind.NETWORK_DEP
        touched = {x for e in cdg.edges if e.kind is kind for x in (e.src, e.dst)}
        nodes = [nid for nid in cdg.nodes if nid in touched]
    else:
        raise ValueError(f"unknown projection {which!r}; expected one of {PROJECTIONS}")
    edges = tuple((e.src, e.dst) for e in cdg.edges if e.kind is kind)
    return Projection(tuple(nodes), edges)


# ------------------------------------------------------------ serialization


def serialize_cdg(cdg: Cdg) -> str:
    doc = {
        "nodes": [n.to_dict() for n in cdg.nodes.values()],
        "edges": [e.to_dict() for e in cdg.edges],
    }
    if cdg.dropped:
        doc["dropped"] = [d.to_dict() for d in cdg.dropped]
    return json.dumps(doc, indent=2) + "\n"


def parse_cdg(text: str) -> Cdg:
    """Parse and validate a serialized CDG."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ParseError("CDG document must be an object")
    nodes: dict[str, CdgNode] = {}
    for i, raw in enumerate(doc.get("nodes", [])):
        try:
            node = CdgNode(
                raw["id"],
                Layer(raw["layer"]),
                raw.get("name", raw["id"]),
                raw.get("host"),
                NodeKind(raw["kind"]) if raw.get("kind") is not None else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad node: {exc}", f"nodes[{i}]") from None
        if node.id in nodes:
            raise ParseError(f"duplicate node id {node.id!r}", f"nodes[{i}]")
        nodes[node.id] = node
    edges = []
    for i, raw in enumerate(doc.get("edges", [])):
        try:
            edge = CdgEdge(raw["from"], raw["to"], EdgeKind(raw["kind"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad edge: {exc}", f"edges[{i}]") from None
        for end in (edge.src, edge.dst):
            if end not in nodes:
                raise ParseError(f"edge references unknown node {end!r}", f"edges[{i}]")
        edges.append(edge)
    dropped = [
        DroppedEdge(d["from"], d["to"], EdgeKind(d["kind"]), float(d["weight"]), d["reason"])
        for d in doc.get("dropped", [])
    ]
    cdg = Cdg(nodes, edges, dropped)
    try:
        cdg.validate()
    except ValidationError as exc:
        raise ParseError(str(exc)) from None
    return cdg


def load_endpoint_map(text: str) -> dict[ServiceEndpoint, tuple[str, str]]:
    """Parse ``{"ip:port:PROTO": {"host": ..., "component": ...}}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    out = {}
    for key, val in doc.items():
        if not isinstance(val, dict) or "host" not in val or "component" not in val:
            raise ParseError("entry needs 'host' and 'component'", key)
        out[ServiceEndpoint.parse(key)] = (val["host"], val["component"])
    return out
