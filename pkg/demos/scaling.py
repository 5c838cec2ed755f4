"""
Ranking cost on large graphs
============================

Synthetic graphs put random component layers on top of a fat tree. Each
projection is ranked once, so cost grows with the edge count.
"""

import time

from ctxvuln.scoring import RankConfig, compute_importances
from ctxvuln.synth import synthetic_cdg

config = RankConfig()  # damping 0.85, at most 100 iterations, L1 tolerance 0.001
for total in (10_000, 30_000, 100_000, 300_000):
    cdg = synthetic_cdg(total, k=20, seed=1)
    t0 = time.perf_counter()
    compute_importances(cdg, config)
    print(f"{total:>7} nodes, {len(cdg.edges):>7} edges: {time.perf_counter() - t0:6.2f} s")
