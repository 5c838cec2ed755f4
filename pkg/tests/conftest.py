from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ctxvuln import cdg as cdg_mod  # noqa: E402
from ctxvuln.fixture import fixture_dir  # noqa: E402
from ctxvuln.logmine import mine_software_dependencies, parse_events  # noqa: E402
from ctxvuln.netdep import mine_network_dependencies, parse_flows  # noqa: E402
from ctxvuln.topology import parse_topology  # noqa: E402
from ctxvuln.vulnmatch import load_vulndb  # noqa: E402

CRITERIA: list[tuple[str, str]] = []


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; the outcome is printed at the end of the run."""
    name = request.node.get_closest_marker("criterion").args[0]
    yield name
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    CRITERIA.append(("FAIL" if failed else "PASS", name))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name in CRITERIA:
        terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture(scope="session")
def fixture_path() -> Path:
    return fixture_dir()


@pytest.fixture(scope="session")
def motivating(fixture_path):
    """The bundled cluster mined end to end: (cdg, vulndb)."""
    d = fixture_path
    topo = parse_topology((d / "topology.json").read_text())
    sw = mine_software_dependencies(parse_events((d / "events.csv").read_text()))
    net = mine_network_dependencies(parse_flows((d / "flows.csv").read_text()), json.loads((d / "hosts.json").read_text()))
    endpoints = cdg_mod.load_endpoint_map((d / "endpoints.json").read_text())
    graph = cdg_mod.build_cdg(topo, sw, net, endpoints)
    return graph, load_vulndb((d / "vulndb.json").read_text())
