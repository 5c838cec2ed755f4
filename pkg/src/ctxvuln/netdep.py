"""Network dependency mining from flow records by interval nesting.

Flow ``g`` is nested in flow ``f`` when ``g`` leaves the host that served
``f`` and ``g``'s lifetime lies inside ``f``'s (inclusive bounds). For an
upstream endpoint U (the destination side of ``f``) and downstream endpoint D
(the destination side of ``g``), the dependency weight is the fraction of
U-flows that contain at least one nested D-flow.
"""

from __future__ import annotations

import bisect
import csv
import io
import ipaddress
import json
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping

from .errors import ArgumentError, ParseError
from .logmine import as_fraction

__all__ = [
    "Proto",
    "ServiceEndpoint",
    "FlowRecord",
    "NetworkDependency",
    "mine_network_dependencies",
    "render_dependency_listing",
    "parse_dependency_listing",
    "parse_flows",
    "dump_network_dependencies",
    "load_network_dependencies",
]

DEFAULT_THRESHOLD = 0.5


class Proto(str, Enum):
    TCP = "TCP"
    UDP = "UDP"


def _check_ip(ip: str) -> str:
    try:
        ipaddress.IPv4Address(ip)
    except ValueError:
        raise ArgumentError(f"invalid IPv4 address {ip!r}") from None
    return ip


def _check_port(port: int) -> int:
    if not isinstance(port, int) or not 1 <= port <= 65535:
        raise ArgumentError(f"port out of range: {port!r}")
    return port


@dataclass(frozen=True)
class ServiceEndpoint:
    ip: str
    port: int
    proto: Proto

    def __post_init__(self):
        _check_ip(self.ip)
        _check_port(self.port)
        object.__setattr__(self, "proto", Proto(self.proto))

    def sort_key(self) -> tuple:
        return (int(ipaddress.IPv4Address(self.ip)), self.port, self.proto.value)

    def __lt__(self, other: ServiceEndpoint) -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.ip}:{self.port}:{self.proto.value}"

    @classmethod
    def parse(cls, text: str) -> ServiceEndpoint:
        """Inverse of ``str()``: ``"10.0.0.1:80:TCP"``."""
        try:
            ip, port, proto = text.strip().split(":")
            return cls(ip, int(port), Proto(proto.strip("[]").upper()))
        except ValueError:
            raise ParseError(f"bad endpoint {text!r}") from None

    def to_dict(self) -> dict:
        return {"ip": self.ip, "port": self.port, "proto": self.proto.value}


@dataclass(frozen=True)
class FlowRecord:
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    proto: Proto
    start_ms: int
    end_ms: int

    def __post_init__(self):
        _check_ip(self.src_ip)
        _check_ip(self.dst_ip)
        _check_port(self.src_port)
        _check_port(self.dst_port)
        object.__setattr__(self, "proto", Proto(self.proto))
        if self.start_ms > self.end_ms:
            raise ArgumentError(f"flow ends before it starts: {self.start_ms} > {self.end_ms}")

    @property
    def server(self) -> ServiceEndpoint:
        return ServiceEndpoint(self.dst_ip, self.dst_port, self.proto)


@dataclass(frozen=True)
class NetworkDependency:
    upstream: ServiceEndpoint
    downstream: ServiceEndpoint
    weight: float

    def to_dict(self) -> dict:
        return {"upstream": self.upstream.to_dict(), "downstream": self.downstream.to_dict(), "weight": self.weight}


def mine_network_dependencies(
    flows: list[FlowRecord],
    host_of: Mapping[str, str],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[NetworkDependency]:
    """Infer ``U -> D`` dependencies whose nesting ratio reaches ``threshold``.

    ``host_of`` maps every IP seen in ``flows`` to a host id so multi-homed
    hosts are treated as one origin. Output is sorted by (U, D).
    """
    if not 0 < threshold <= 1:
        raise ArgumentError(f"threshold must be in (0, 1], got {threshold!r}")
    cut = as_fraction(threshold)
    for f in flows:
        for ip in (f.src_ip, f.dst_ip):
            if ip not in host_of:
                raise ArgumentError(f"no host mapping for ip {ip}")

    # flows leaving each host, sorted by start time for range lookups
    outgoing: dict[str, list[FlowRecord]] = defaultdict(list)
    for g in flows:
        outgoing[host_of[g.src_ip]].append(g)
    starts: dict[str, list[int]] = {}
    for host, gs in outgoing.items():
        gs.sort(key=lambda g: (g.start_ms, g.end_ms))
        starts[host] = [g.start_ms for g in gs]

    totals: dict[ServiceEndpoint, int] = defaultdict(int)
    hits: dict[tuple[ServiceEndpoint, ServiceEndpoint], int] = defaultdict(int)
    for f in flows:
        up = f.server
        totals[up] += 1
        host = host_of[f.dst_ip]
        gs = outgoing.get(host, [])
        lo = bisect.bisect_left(starts.get(host, []), f.start_ms)
        hi = bisect.bisect_right(starts.get(host, []), f.end_ms)
        nested = {g.server for g in gs[lo:hi] if g.end_ms <= f.end_ms and g is not f}
        nested.discard(up)
        for down in nested:
            hits[(up, down)] += 1

    deps = [
        NetworkDependency(up, down, count / totals[up])
        for (up, down), count in hits.items()
        if Fraction(count, totals[up]) >= cut
    ]
    deps.sort(key=lambda d: (d.upstream.sort_key(), d.downstream.sort_key()))
    return deps


# ------------------------------------------------------------------- listing


def render_dependency_listing(deps: list[NetworkDependency], labels: Mapping[ServiceEndpoint, str] | None = None) -> str:
    """Render the indented listing: one header per upstream, one line per downstream.

    ``labels`` optionally appends a ``<# name>`` comment to upstream headers.
    """
    grouped: dict[ServiceEndpoint, set[ServiceEndpoint]] = defaultdict(set)
    for d in deps:
        grouped[d.upstream].add(d.downstream)
    lines = []
    for up in sorted(grouped):
        header = f"{up.ip}:{up.port}:[{up.proto.value}]"
        if labels and up in labels:
            header += f" <# {labels[up]}>"
        lines.append(header)
        for down in sorted(grouped[up]):
            lines.append(f"  {down.ip}  {down.port}  [{down.proto.value}]")
    return "".join(line + "\n" for line in lines)


def parse_dependency_listing(text: str) -> list[tuple[ServiceEndpoint, ServiceEndpoint]]:
    """Read a listing back into (upstream, downstream) pairs; weights are not recorded."""
    pairs = []
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("..."):
            continue
        if line.startswith(" "):
            if current is None:
                raise ParseError("downstream line before any header", f"line {lineno}")
            fields = line.split()
            if len(fields) != 3:
                raise ParseError("expected '<ip>  <port>  [<PROTO>]'", f"line {lineno}")
            pairs.append((current, ServiceEndpoint.parse(":".join(fields))))
        else:
            current = ServiceEndpoint.parse(line.split(" <#")[0])
    return pairs


# ------------------------------------------------------------------------ I/O

_FLOW_KEYS = ("src_ip", "src_port", "dst_ip", "dst_port", "proto", "start_ms", "end_ms")


def _flow(rec: Mapping, loc: str) -> FlowRecord:
    try:
        return FlowRecord(
            str(rec["src_ip"]).strip(),
            int(rec["src_port"]),
            str(rec["dst_ip"]).strip(),
            int(rec["dst_port"]),
            Proto(str(rec["proto"]).strip().upper()),
            int(rec["start_ms"]),
            int(rec["end_ms"]),
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]}", loc) from None
    except ValueError as exc:
        raise ParseError(str(exc), loc) from None


def parse_flows(text: str, format: str = "csv") -> list[FlowRecord]:
    """Read flow records from CSV (header optional) or a JSON array."""
    if format == "json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, f"line {exc.lineno}") from None
        if not isinstance(rows, list):
            raise ParseError("flow document must be a JSON array")
        return [_flow(r, f"[{i}]") for i, r in enumerate(rows)]
    if format != "csv":
        raise ArgumentError(f"unsupported flow format {format!r}")
    flows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or row[0].lstrip().startswith("#") or row[0].strip() == "src_ip":
            continue
        if len(row) != len(_FLOW_KEYS):
            raise ParseError(f"expected {len(_FLOW_KEYS)} fields, got {len(row)}", f"line {lineno}")
        flows.append(_flow(dict(zip(_FLOW_KEYS, row)), f"line {lineno}"))
    return flows


def dump_network_dependencies(deps: list[NetworkDependency]) -> str:
    return json.dumps([d.to_dict() for d in deps], indent=2) + "\n"


def load_network_dependencies(text: str) -> list[NetworkDependency]:
    try:
        return [
            NetworkDependency(
                ServiceEndpoint(**r["upstream"]), ServiceEndpoint(**r["downstream"]), float(r["weight"])
            )
            for r in json.loads(text)
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad network dependency document: {exc}") from None
