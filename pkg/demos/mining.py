"""
Mining software and network dependencies
========================================

The bundled fixture is a small two-rack Hadoop cluster. Its per-host log
events feed the software miner and its flow records feed the network miner.
"""

import json

from ctxvuln.fixture import fixture_dir
from ctxvuln.logmine import group_transactions, mine_software_dependencies, parse_events, render_dependency_tags
from ctxvuln.netdep import mine_network_dependencies, parse_flows, render_dependency_listing

data = fixture_dir()

# software: events are cut into 1 s windows per host, then pairwise rules
# A -> B (B tends to follow A) become "B depends on A"
events = parse_events((data / "events.csv").read_text())
windows = group_transactions(events, 1000)
print(f"{len(events)} events in {len(windows)} windows")
print(windows[0])

sw = mine_software_dependencies(events, window_ms=1000, min_support=0.1, min_confidence=0.7)
print(render_dependency_tags([d for d in sw if d.node in ("s1", "s2", "core1")]))

# network: a flow nested in time inside a flow served by the same host
# counts as a downstream call; the ratio of such U-flows is the weight
flows = parse_flows((data / "flows.csv").read_text())
hosts = json.loads((data / "hosts.json").read_text())
net = mine_network_dependencies(flows, hosts, threshold=0.5)
print(f"{len(flows)} flows -> {len(net)} dependencies")
print(render_dependency_listing(net))

# every served request in the fixture fans out the same way, so weights are 1.0
print(sorted({d.weight for d in net}))
