"""Contextual vulnerability scoring for cloud service deployments.

The package mines hardware, software and network dependencies, assembles
them into a two-layer contextual dependency graph, ranks nodes with PageRank
and turns those ranks into per-vulnerability severities.
"""

from .cdg import Cdg, build_cdg, parse_cdg, project, serialize_cdg
from .errors import ArgumentError, ConfigError, CtxVulnError, ParseError, ValidationError
from .fixsim import FixPlan, compare_plans, simulate_fix
from .logmine import apriori_rules, group_transactions, mine_software_dependencies
from .netdep import mine_network_dependencies, render_dependency_listing
from .scoring import (
    Aggregator,
    RankConfig,
    Weights,
    compute_importances,
    pagerank,
    score_vulnerabilities,
)
from .synth import synthetic_cdg
from .topology import generate_bcube, generate_fat_tree, parse_topology, validate_topology
from .vulnmatch import load_vulndb, match_vulnerabilities

__version__ = "0.1.0"
