"""Acceptance gate: one test per criterion, each reported PASS/FAIL at the end of the run."""

import itertools
import os
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from oracles import brute_force_nesting, brute_force_rules, dense_pagerank

from ctxvuln.cdg import Layer, Projection
from ctxvuln.fixsim import FixPlan, base_score_order, compare_plans, contextual_order, simulate_fix
from ctxvuln.logmine import Transaction, apriori_rules
from ctxvuln.netdep import FlowRecord, Proto, mine_network_dependencies
from ctxvuln.scoring import (
    Aggregator,
    ImportanceTriple,
    RankConfig,
    Weights,
    compute_importances,
    pagerank,
    score_vulnerabilities,
)
from ctxvuln.synth import synthetic_cdg
from ctxvuln.vulnmatch import VulnerabilityRecord, VulnMatch, match_vulnerabilities

CORE_VULN = "CVE-2016-1392"
NAME_NODE_VULN = "CVE-2015-7430"


def random_digraph(rng, max_nodes=20):
    n = rng.randint(1, max_nodes)
    density = rng.choice([0.05, 0.15, 0.3, 0.6])
    edges = [(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < density]
    return n, edges


def rank_vector(n, edges, config):
    ids = tuple(range(n))
    r = pagerank(Projection(ids, tuple(edges)), config)
    return np.array([r[i] for i in ids])


# 1 -------------------------------------------------------------------------


@pytest.mark.criterion("1 PageRank: 3-cycle = 1/3 +- 1e-9; 30 random digraphs within L1 1e-4 of dense oracle")
def test_pagerank_correctness(criterion):
    cycle = rank_vector(3, [(0, 1), (1, 2), (2, 0)], RankConfig())
    assert np.all(np.abs(cycle - 1 / 3) <= 1e-9)

    rng = random.Random(1)
    converged = RankConfig(tolerance=1e-12, max_iterations=10_000)
    worst = 0.0
    for _ in range(30):
        n, edges = random_digraph(rng)
        # converged fixed point against the converged oracle
        l1 = np.abs(rank_vector(n, edges, converged) - dense_pagerank(n, edges)).sum()
        # shipped defaults against the oracle under the same stopping rule
        l1_default = np.abs(rank_vector(n, edges, RankConfig()) - dense_pagerank(n, edges, steps=100, tol=0.001)).sum()
        worst = max(worst, l1, l1_default)
    assert worst <= 1e-4, worst


# 2 -------------------------------------------------------------------------


@pytest.mark.criterion("2 fixture: core-switch vuln outranks name-node vuln under both aggregators")
def test_motivating_ordering(criterion, motivating):
    cdg, db = motivating
    base = {r.id: r.base_score for r in db}
    assert base[CORE_VULN] < base[NAME_NODE_VULN]
    matches = match_vulnerabilities(db, cdg).matches
    importances = compute_importances(cdg)
    for agg in Aggregator:
        scores = {s.vuln_id: s.severity for s in score_vulnerabilities(matches, importances, Weights(), agg, db)}
        assert scores[CORE_VULN] > scores[NAME_NODE_VULN], agg


# 3 -------------------------------------------------------------------------


@st.composite
def shared_node_case(draw):
    total = draw(st.integers(12, 60))
    cdg = synthetic_cdg(total, k=2, seed=draw(st.integers(0, 10_000)))
    software = sorted(n.id for n in cdg.layer(Layer.SOFTWARE))
    shared = draw(st.sets(st.sampled_from(software), min_size=1, max_size=5))
    others = draw(st.lists(st.sets(st.sampled_from(software), min_size=1, max_size=5), max_size=4))
    bases = draw(st.lists(st.floats(0, 10).map(lambda x: round(x, 1)), min_size=2 + len(others), max_size=2 + len(others)))
    return cdg, shared, others, bases


@pytest.mark.criterion("3 cvss_product: vulns with identical node sets follow base-score order")
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(shared_node_case())
def test_base_order_preserved(criterion, case):
    cdg, shared, others, bases = case
    ids = [f"CVE-2000-{i:04d}" for i in range(len(bases))]
    node_sets = [shared, shared, *others]
    matches = [VulnMatch(v, frozenset(s)) for v, s in zip(ids, node_sets)]
    db = [VulnerabilityRecord(v, "", ("x",), b) for v, b in zip(ids, bases)]
    ranked = [s.vuln_id for s in score_vulnerabilities(matches, compute_importances(cdg), Weights(), Aggregator.CVSS_PRODUCT, db)]
    first, second = ids[0], ids[1]
    if bases[0] > bases[1]:
        assert ranked.index(first) < ranked.index(second)
    elif bases[1] > bases[0]:
        assert ranked.index(second) < ranked.index(first)


# 4 -------------------------------------------------------------------------


@pytest.mark.criterion("4 fix plans: auc(contextual) > auc(base-score) on fixture; monotone; terminal = servers")
def test_fix_plan_dominance(criterion, motivating):
    cdg, db = motivating
    matches = match_vulnerabilities(db, cdg).matches
    assert len(matches) >= 6
    n_servers = sum(1 for n in cdg.nodes.values() if n.kind is not None and n.kind.value == "server")
    scores = score_vulnerabilities(matches, compute_importances(cdg), Weights(), Aggregator.WEIGHTED_SUM, db)
    cmp = compare_plans(cdg, matches, contextual_order(scores), base_score_order(matches, db), "gw0")
    assert cmp.a.auc > cmp.b.auc and cmp.winner == "a", (cmp.a.alive_counts, cmp.b.alive_counts)

    ids = [m.vuln_id for m in matches]
    results = [cmp.a, cmp.b]
    rng = random.Random(4)
    for _ in range(200):
        order = ids[:]
        rng.shuffle(order)
        results.append(simulate_fix(cdg, matches, FixPlan(tuple(order)), "gw0"))
    for r in results:
        assert list(r.alive_counts) == sorted(r.alive_counts)
        assert r.alive_counts[-1] == n_servers


# 5 -------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion("5 performance: importances for a 100,000-node CDG in < 12 s")
def test_performance(criterion):
    cdg = synthetic_cdg(100_000)
    assert len(cdg.nodes) == 100_000
    config = RankConfig()
    assert (config.max_iterations, config.tolerance) == (100, 0.001)
    t0 = time.perf_counter()
    importances = compute_importances(cdg, config)
    elapsed = time.perf_counter() - t0
    print(f"compute_importances on {len(cdg.nodes)} nodes / {len(cdg.edges)} edges: {elapsed:.2f} s")
    assert len(importances) == len(cdg.layer(Layer.SOFTWARE))
    assert elapsed < 12.0


# 6 -------------------------------------------------------------------------

THRESHOLDS = [(0.1, 0.7), (0.5, 0.6), (0.3, 0.3), (1.0, 0.1), (0.2, 1.0)]


def mined(transactions, sup, conf):
    return {
        (r.antecedent, r.consequent, Fraction(r.support), Fraction(r.confidence))
        for r in apriori_rules(transactions, sup, conf)
    }


def expected(baskets, sup, conf):
    return {(x, y, Fraction(float(s)), Fraction(float(c))) for x, y, s, c in brute_force_rules(baskets, sup, conf)}


def ordered_subsets(items):
    return [p for k in range(len(items) + 1) for s in itertools.combinations(items, k) for p in itertools.permutations(s)]


@pytest.mark.criterion("6 Apriori equals brute-force enumeration (exhaustive small + 100 random)")
def test_apriori_oracle(criterion):
    # exhaustive: every sequence of up to 3 ordered baskets over 3 items
    shapes = ordered_subsets("ABC")
    cases = 0
    for length in range(1, 4):
        for baskets in itertools.product(shapes, repeat=length):
            txs = [Transaction("n", i, b) for i, b in enumerate(baskets)]
            for sup, conf in THRESHOLDS:
                assert mined(txs, sup, conf) == expected(baskets, sup, conf), (baskets, sup, conf)
                cases += 1

    rng = random.Random(6)
    items = list("ABCDEF")
    for _ in range(100):
        baskets = []
        for _ in range(rng.randint(0, 10)):
            b = rng.sample(items, rng.randint(0, 6))
            baskets.append(tuple(b))
        txs = [Transaction("n", i, b) for i, b in enumerate(baskets)]
        sup = rng.choice([0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 1.0])
        conf = rng.choice([0.1, 0.5, 0.6, 0.7, 0.75, 0.9, 1.0])
        assert mined(txs, sup, conf) == expected(baskets, sup, conf), (baskets, sup, conf)
        cases += 1
    print(f"{cases} Apriori cases matched the oracle")


# 7 -------------------------------------------------------------------------

IPS = ["10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.4", "10.0.1.1"]
HOST_OF = {"10.0.0.1": "h1", "10.0.0.2": "h2", "10.0.0.3": "h3", "10.0.0.4": "h4", "10.0.1.1": "h2"}


def random_flows(rng):
    flows = []
    for _ in range(rng.randint(0, 50)):
        start = rng.randint(0, 300)
        flows.append(
            FlowRecord(
                rng.choice(IPS), rng.randint(30000, 60000), rng.choice(IPS), rng.choice([53, 80, 3306]),
                rng.choice(list(Proto)), start, start + rng.randint(0, 150),
            )
        )
    return flows


def as_pairs(deps):
    return {
        ((str(d.upstream.ip), d.upstream.port, d.upstream.proto.value), (d.downstream.ip, d.downstream.port, d.downstream.proto.value)): d.weight
        for d in deps
    }


@pytest.mark.criterion("7 flow nesting equals all-pairs oracle on 100 random sets; threshold monotone")
def test_nesting_oracle(criterion):
    rng = random.Random(7)
    thresholds = [0.1, 0.25, 0.3, 0.5, 0.75, 1.0]
    for _ in range(100):
        flows = random_flows(rng)
        previous = None
        for t in thresholds:
            got = as_pairs(mine_network_dependencies(flows, HOST_OF, t))
            want = brute_force_nesting(flows, HOST_OF, t)
            assert set(got) == set(want)
            assert all(got[k] == float(want[k]) for k in want)
            if previous is not None:
                assert set(got) <= previous
            previous = set(got)


# 8 -------------------------------------------------------------------------

unit = st.floats(0, 1, allow_nan=False, allow_subnormal=False)


@pytest.mark.criterion("8 scaling all weights by c > 0 keeps the weighted_sum ranking")
@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    st.lists(st.tuples(unit, unit, unit), min_size=1, max_size=8),
    st.lists(st.sets(st.integers(0, 7), min_size=1, max_size=4), min_size=1, max_size=8),
    st.tuples(*[st.floats(0.01, 10) for _ in range(3)]),
    st.floats(1e-3, 1e3),
)
def test_weight_scaling(criterion, triples, sets, w, c):
    imp = [ImportanceTriple(f"n{i}", *t) for i, t in enumerate(triples)]
    matches = [VulnMatch(f"CVE-2001-{i:04d}", frozenset(f"n{j % len(imp)}" for j in s)) for i, s in enumerate(sets)]
    weights = Weights(*w)
    before = score_vulnerabilities(matches, imp, weights)
    sev = sorted(s.severity for s in before)
    # exact ties are decided by id either way; near-ties could flip through rounding alone
    assume(all(b - a == 0 or b - a > 1e-9 * max(1.0, b) for a, b in zip(sev, sev[1:])))
    after = score_vulnerabilities(matches, imp, weights.scaled(c))
    assert [s.vuln_id for s in after] == [s.vuln_id for s in before]
    for x, y in zip(before, after):
        assert y.severity == pytest.approx(c * x.severity, rel=1e-9, abs=1e-12)


# 9 -------------------------------------------------------------------------


@pytest.mark.criterion("9 two `ctxvuln run` invocations on the fixture give byte-identical reports")
def test_determinism(criterion, fixture_path, tmp_path):
    outs = []
    for i, hash_seed in enumerate(("0", "12345")):
        out = tmp_path / f"run{i}"
        env = {**os.environ, "PYTHONHASHSEED": hash_seed}
        res = subprocess.run(
            [sys.executable, "-m", "ctxvuln", "run", "--config", str(fixture_path / "config.json"), "--out-dir", str(out)],
            capture_output=True, text=True, env=env,
        )
        assert res.returncode == 0, res.stderr
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    assert {"report.json", "report.txt", "steps.csv"} <= set(names)
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
