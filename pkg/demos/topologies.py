"""
Generating data-center topologies
=================================

Fat trees and BCube networks are the two built-in generators. Both return a
plain node/link graph that can be validated and written as JSON or CSV.
"""

from ctxvuln.topology import NodeKind, generate_bcube, generate_fat_tree, serialize_topology, validate_topology

# a k-ary fat tree has (k/2)^2 core switches and k pods of k/2 aggregation
# and k/2 edge switches, with k/2 servers under every edge switch
for k in (2, 4, 8):
    g = generate_fat_tree(k)
    per_kind = {kind.value: len(g.of_kind(kind)) for kind in NodeKind if g.of_kind(kind)}
    print(f"fat-tree k={k}: {len(g.nodes)} nodes, {len(g.links)} links {per_kind}")

# BCube(n, k): n^(k+1) servers, (k+1) * n^k switches, every server has k+1 ports
for n, levels in ((2, 0), (4, 1), (4, 2)):
    g = generate_bcube(n, levels)
    print(f"bcube n={n} k={levels}: {len(g.of_kind(NodeKind.SERVER))} servers, {len(g.links)} links")

# validation reports problems instead of raising, so a broken file can be inspected
g = generate_fat_tree(2, gateway=True)
print(validate_topology(g) or "fat-tree k=2 with gateway is valid")
print(serialize_topology(g, "csv"))
