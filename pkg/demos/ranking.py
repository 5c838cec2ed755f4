"""
Ranking vulnerabilities in context
==================================

The mined dependencies and the topology form a two-layer graph. PageRank
over each layer gives every software component three importances, and those
are summed over the components a vulnerability affects.
"""

import json

from ctxvuln.cdg import build_cdg, load_endpoint_map, project
from ctxvuln.fixture import fixture_dir
from ctxvuln.logmine import mine_software_dependencies, parse_events
from ctxvuln.netdep import mine_network_dependencies, parse_flows
from ctxvuln.report import render_report
from ctxvuln.scoring import Aggregator, Weights, compute_importances, score_vulnerabilities
from ctxvuln.topology import parse_topology
from ctxvuln.vulnmatch import load_vulndb, match_vulnerabilities

data = fixture_dir()
topo = parse_topology((data / "topology.json").read_text())
sw = mine_software_dependencies(parse_events((data / "events.csv").read_text()))
net = mine_network_dependencies(parse_flows((data / "flows.csv").read_text()), json.loads((data / "hosts.json").read_text()))
cdg = build_cdg(topo, sw, net, load_endpoint_map((data / "endpoints.json").read_text()))

for which in ("hw_graph", "sw_graph", "net_graph"):
    p = project(cdg, which)
    print(f"{which}: {len(p.nodes)} nodes, {len(p.edges)} edges")

# ti comes from the host's hardware rank, so everything on the core switch
# inherits its central position
importances = compute_importances(cdg)
for t in sorted(importances, key=lambda t: -t.ti)[:5]:
    print(f"{t.node:<28} ti={t.ti:.4f} si={t.si:.4f} ni={t.ni:.4f}")

db = load_vulndb((data / "vulndb.json").read_text())
report = match_vulnerabilities(db, cdg)
print("unmatched:", report.unmatched)

base = {r.id: r.base_score for r in db}
for agg in Aggregator:
    scores = score_vulnerabilities(report.matches, importances, Weights(), agg, db)
    print(f"\n{agg.value}")
    print(render_report(scores, report.matches))
    print("base scores in this order:", [base[s.vuln_id] for s in scores])

# doubling every weight doubles every severity and keeps the order
a = score_vulnerabilities(report.matches, importances, Weights(1, 1, 1))
b = score_vulnerabilities(report.matches, importances, Weights(2, 2, 2))
print([s.vuln_id for s in a] == [s.vuln_id for s in b])
