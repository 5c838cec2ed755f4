"""Synthetic 8-server, 2-rack Hadoop cluster used by the demos and acceptance tests.

Layout: ``s1`` is the name node, ``s5`` the backup name node, the other six
servers are data nodes. ``s1``-``s4`` hang off ``edge1`` and ``s5``-``s8``
off ``edge2``; both edge switches uplink to ``agg1``, which uplinks to
``core1``, which connects to the gateway ``gw0``.

Raw inputs are generated, not hand-written: per-host log events for the
software miner and flow records for the network miner. Switch operating
systems also relay DNS (server -> edge -> aggregation -> core), which is what
ties the switch software into the network layer.

Everything is seeded, so :func:`write_fixture` is byte-for-byte reproducible.
"""

from __future__ import annotations

import csv
import io
import json
import random
from importlib import resources
from pathlib import Path

from .topology import NodeKind, TopologyGraph, TopologyLink, TopologyNode, serialize_topology

SEED = 20160131
SESSIONS = 40

NAME_NODES = ("s1", "s5")
DATA_NODES = ("s2", "s3", "s4", "s6", "s7", "s8")
SERVERS = ("s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8")
RACK_OF = {s: ("edge1" if s in SERVERS[:4] else "edge2") for s in SERVERS}

IP = {
    "gw0": "10.0.0.1",
    "core1": "10.0.0.2",
    "agg1": "10.0.0.3",
    "edge1": "10.0.1.254",
    "edge2": "10.0.2.254",
    **{s: f"10.0.1.{i}" for i, s in enumerate(SERVERS[:4], start=1)},
    **{s: f"10.0.2.{i}" for i, s in enumerate(SERVERS[4:], start=5)},
}
CLIENT_IP = "198.51.100.7"

# components in the order a request touches them; later entries depend on earlier ones
STACKS = {
    "name": ["jvm", "hadoop-common", "hadoop-namenode", "hadoop-jobtracker"],
    "data": ["jvm", "hadoop-common", "commons-collections", "hadoop-datanode", "hadoop-tasktracker"],
    "core": ["switch-os-ios", "bgpd", "snmpd"],
    "agg": ["switch-os-eos", "ospfd"],
    "edge": ["switch-os-nxos", "lldpd"],
}

PORTS = {"hadoop-jobtracker": 8021, "hadoop-namenode": 8020, "hadoop-tasktracker": 50060, "hadoop-datanode": 50010}

VULNS = [
    {"id": "CVE-2016-1392", "summary": "Core switch OS remote code execution", "products": ["ios"], "base_score": 7.4},
    {"id": "CVE-2015-7430", "summary": "Hadoop name node privilege escalation", "products": ["hadoop-namenode"], "base_score": 8.4},
    {"id": "CVE-2015-4279", "summary": "Edge switch OS denial of service", "products": ["nxos"], "base_score": 7.8},
    {"id": "CVE-2016-1503", "summary": "Aggregation switch OS memory corruption", "products": ["eos"], "base_score": 9.8},
    {"id": "CVE-2016-2170", "summary": "Deserialization flaw in a collections library", "products": ["commons-collections"], "base_score": 9.8},
    {"id": "CVE-2015-6420", "summary": "Deserialization flaw in a collections library", "products": ["commons-collections"], "base_score": 7.5},
    {"id": "CVE-2015-1776", "summary": "Hadoop task tracker information disclosure", "products": ["hadoop-tasktracker"], "base_score": 6.3},
    {"id": "CVE-2016-0731", "summary": "Cluster manager web UI CSRF", "products": ["ambari"], "base_score": 4.9},
]


def topology() -> TopologyGraph:
    nodes = [TopologyNode(s, NodeKind.SERVER, frozenset({"rack1" if RACK_OF[s] == "edge1" else "rack2"})) for s in SERVERS]
    nodes += [
        TopologyNode("edge1", NodeKind.EDGE_SWITCH, frozenset({"rack1"})),
        TopologyNode("edge2", NodeKind.EDGE_SWITCH, frozenset({"rack2"})),
        TopologyNode("agg1", NodeKind.AGGREGATION_SWITCH),
        TopologyNode("core1", NodeKind.CORE_SWITCH),
        TopologyNode("gw0", NodeKind.GATEWAY),
    ]
    links = [TopologyLink(s, RACK_OF[s]) for s in SERVERS]
    links += [TopologyLink("edge1", "agg1"), TopologyLink("edge2", "agg1"), TopologyLink("agg1", "core1"), TopologyLink("core1", "gw0")]
    return TopologyGraph(nodes, links)


def _stack(host: str) -> list[str]:
    if host in NAME_NODES:
        return STACKS["name"]
    if host in DATA_NODES:
        return STACKS["data"]
    return STACKS[{"core1": "core", "agg1": "agg", "edge1": "edge", "edge2": "edge"}[host]]


def events(rng: random.Random) -> list[tuple[int, str, str]]:
    """Per-host request sessions, 5 s apart, each logging its stack within 400 ms.

    Sessions start on 5 s boundaries with the first component at offset 0, so
    each session falls inside a single 1 s mining window.
    """
    rows = []
    for host in (*SERVERS, "edge1", "edge2", "agg1", "core1"):
        stack = _stack(host)
        for i in range(SESSIONS):
            t = 1_000_000 + i * 5000
            offsets = [0, *sorted(rng.sample(range(10, 400), len(stack) - 1))]
            for comp, off in zip(stack, offsets):
                # the last component (task tracker, daemons) sometimes sits a session out
                if comp == stack[-1] and len(stack) > 2 and rng.random() < 0.15:
                    continue
                rows.append((t + off, host, comp))
            if rng.random() < 0.3:
                rows.append((t + 2500 + rng.randrange(0, 500), host, "cron"))
            if rng.random() < 0.05:
                rows.append((t + rng.randrange(0, 400), host, "sshd"))
    rows.sort()
    return rows


def _ephemeral(rng: random.Random) -> int:
    return rng.randrange(32768, 61000)


def flows(rng: random.Random) -> list[tuple]:
    """One client request per session fanned out through the cluster."""
    out = []

    def flow(src: str, dst: str, port: int, start: int, end: int, proto: str = "TCP") -> None:
        src_ip = CLIENT_IP if src == "client" else IP[src]
        out.append((src_ip, _ephemeral(rng), IP[dst], port, proto, start, end))

    def dns(host: str, t: int) -> None:
        """Resolver chain through the switch OSes; each hop nests in the previous."""
        chain = [host, RACK_OF.get(host, host), "agg1", "core1"]
        if host in ("edge1", "edge2"):
            chain = chain[1:]
        for depth, (a, b) in enumerate(zip(chain, chain[1:])):
            flow(a, b, 53, t + depth, t + 9 - depth, "UDP")

    for i in range(SESSIONS):
        t = 5_000_000 + i * 10_000
        flow("client", "gw0", 443, t, t + 6000)
        flow("gw0", "s1", PORTS["hadoop-jobtracker"], t + 10, t + 5900)
        dns("s1", t + 20)
        flow("s1", "s1", PORTS["hadoop-namenode"], t + 40, t + 90)
        for j, dn in enumerate(DATA_NODES):
            base = t + 200 + j * 700
            flow("s1", dn, PORTS["hadoop-tasktracker"], base, base + 650)
            dns(dn, base + 10)
            flow(dn, "s1", PORTS["hadoop-namenode"], base + 30, base + 80)
            flow(dn, dn, PORTS["hadoop-datanode"], base + 100, base + 600)
        # standby checkpoint pull, not nested in any served request
        flow("s5", "s1", PORTS["hadoop-namenode"], t + 8000, t + 8500)
    return out


def host_map() -> dict[str, str]:
    return {**{ip: host for host, ip in IP.items()}, CLIENT_IP: "internet"}


def endpoint_map() -> dict[str, dict[str, str]]:
    eps = {f"{IP['gw0']}:443:TCP": {"host": "gw0", "component": "haproxy"}}
    for s in SERVERS:
        for comp in _stack(s):
            if comp in PORTS:
                eps[f"{IP[s]}:{PORTS[comp]}:TCP"] = {"host": s, "component": comp}
    for sw in ("edge1", "edge2", "agg1", "core1"):
        eps[f"{IP[sw]}:53:UDP"] = {"host": sw, "component": _stack(sw)[0]}
    return eps


CONFIG = {
    "topology": "topology.json",
    "events": "events.csv",
    "flows": "flows.csv",
    "hosts": "hosts.json",
    "endpoints": "endpoints.json",
    "vulndb": "vulndb.json",
    "window_ms": 1000,
    "min_support": 0.1,
    "min_confidence": 0.7,
    "threshold": 0.5,
    "weights": {"ti": 1, "ni": 1, "si": 1},
    "aggregator": "weighted_sum",
    "simulate": {"gateway": "gw0", "plan_a": "ncvs", "plan_b": "cvss"},
}


def _csv(header: tuple[str, ...], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_files(seed: int = SEED) -> dict[str, str]:
    """All fixture files as ``{file name: text}``."""
    rng = random.Random(seed)
    dump = lambda doc: json.dumps(doc, indent=2) + "\n"  # noqa: E731
    return {
        "topology.json": serialize_topology(topology()),
        "events.csv": _csv(("timestamp_ms", "node", "component"), events(rng)),
        "flows.csv": _csv(("src_ip", "src_port", "dst_ip", "dst_port", "proto", "start_ms", "end_ms"), flows(rng)),
        "hosts.json": dump(host_map()),
        "endpoints.json": dump(endpoint_map()),
        "vulndb.json": dump(VULNS),
        "config.json": dump(CONFIG),
    }


def write_fixture(directory: str | Path, seed: int = SEED) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in render_files(seed).items():
        (directory / name).write_text(text)
    return directory / "config.json"


def fixture_dir() -> Path:
    """Directory of the copy shipped inside the package."""
    return Path(str(resources.files("ctxvuln") / "data" / "motivating"))
