"""Random CDGs at scale, for benchmarking the ranking stage.

Hardware is a fat tree; each hardware node hosts a handful of components
wired into a random intra-host DAG, and random network edges link components
across hosts. Every edge points from a higher to a lower global index, so
both dependency layers are acyclic by construction.
"""

from __future__ import annotations

import numpy as np

from .cdg import Cdg, CdgEdge, CdgNode, EdgeKind, Layer, software_id
from .errors import ArgumentError
from .topology import generate_fat_tree


def synthetic_cdg(
    total_nodes: int = 100_000,
    k: int = 20,
    sw_edges_per_node: float = 1.5,
    net_edges_per_node: float = 0.5,
    seed: int = 0,
) -> Cdg:
    """A CDG with exactly ``total_nodes`` nodes over a ``k``-ary fat tree."""
    topo = generate_fat_tree(k)
    n_hw = len(topo.nodes)
    n_sw = total_nodes - n_hw
    if n_sw < 0:
        raise ArgumentError(f"fat tree k={k} already has {n_hw} nodes, more than {total_nodes}")
    rng = np.random.default_rng(seed)

    nodes = {n.id: CdgNode(n.id, Layer.HARDWARE, n.id, kind=n.kind) for n in topo.nodes}
    edges = []
    for link in topo.links:
        edges.append(CdgEdge(link.a, link.b, EdgeKind.HW_LINK))
        edges.append(CdgEdge(link.b, link.a, EdgeKind.HW_LINK))

    hw_ids = [n.id for n in topo.nodes]
    host_idx = np.sort(rng.integers(0, n_hw, n_sw))
    sw_ids = []
    for i, h in enumerate(host_idx):
        host = hw_ids[h]
        sid = software_id(f"comp{i}", host)
        nodes[sid] = CdgNode(sid, Layer.SOFTWARE, f"comp{i}", host=host)
        sw_ids.append(sid)
        edges.append(CdgEdge(sid, host, EdgeKind.HOSTED_ON))

    # host_idx is sorted, so each host's components form one contiguous block
    starts = np.searchsorted(host_idx, np.arange(n_hw))
    offsets = np.arange(n_sw) - starts[host_idx]
    cand = np.flatnonzero(offsets > 0)
    pick = rng.choice(cand, size=min(len(cand), int(sw_edges_per_node * n_sw)), replace=True) if len(cand) else cand
    targets = starts[host_idx[pick]] + (rng.random(len(pick)) * offsets[pick]).astype(np.int64)
    sw_pairs = sorted(set(zip(pick.tolist(), targets.tolist())))
    edges += [CdgEdge(sw_ids[a], sw_ids[b], EdgeKind.SOFTWARE_DEP) for a, b in sw_pairs]

    m = int(net_edges_per_node * n_sw)
    a = rng.integers(1, n_sw, m)
    b = (rng.random(m) * a).astype(np.int64)
    net_pairs = sorted({(x, y) for x, y in zip(a.tolist(), b.tolist()) if host_idx[x] != host_idx[y]})
    edges += [CdgEdge(sw_ids[x], sw_ids[y], EdgeKind.NETWORK_DEP) for x, y in net_pairs]
    return Cdg(nodes, edges)
