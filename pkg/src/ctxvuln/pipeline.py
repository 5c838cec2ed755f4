"""End-to-end batch pipeline driven by a JSON config.

Config schema (paths are relative to the config file)::

    {
      "topology": "topology.json",          # or null together with "generate"
      "generate": {"model": "fat-tree", "k": 4, "gateway": true},
      "events": "events.csv",
      "flows": "flows.csv",
      "hosts": "hosts.json",
      "endpoints": "endpoints.json",
      "vulndb": "vulndb.json",
      "window_ms": 1000, "min_support": 0.1, "min_confidence": 0.7,
      "threshold": 0.5,
      "damping": 0.85, "max_iterations": 100, "tolerance": 0.001,
      "weights": {"ti": 1, "ni": 1, "si": 1},
      "aggregator": "weighted_sum",
      "simulate": {"gateway": "gw0", "plan_a": "ncvs", "plan_b": "cvss"}
    }

Every stage writes its artifact into the output directory so runs can be
inspected or resumed stage by stage.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import cdg as cdg_mod
from .errors import ConfigError, CtxVulnError
from .fixsim import FixPlan, base_score_order, compare_plans, contextual_order, render_ascii_plot, render_steps_csv
from .logmine import dump_software_dependencies, mine_software_dependencies, parse_events
from .netdep import dump_network_dependencies, mine_network_dependencies, parse_flows
from .report import render_report
from .scoring import Aggregator, RankConfig, Weights, compute_importances, dump_report, score_vulnerabilities
from .topology import GENERATORS, parse_topology, serialize_topology
from .vulnmatch import dump_matches, load_vulndb, match_vulnerabilities

log = logging.getLogger(__name__)

REQUIRED_FILES = ("events", "flows", "hosts", "endpoints", "vulndb")


@dataclass
class PipelineConfig:
    events: Path | None = None
    flows: Path | None = None
    hosts: Path | None = None
    endpoints: Path | None = None
    vulndb: Path | None = None
    topology: Path | None = None
    generate: dict | None = None
    window_ms: int = 1000
    min_support: float = 0.1
    min_confidence: float = 0.7
    threshold: float = 0.5
    damping: float = 0.85
    max_iterations: int = 100
    tolerance: float = 0.001
    weights: dict = field(default_factory=lambda: {"ti": 1.0, "ni": 1.0, "si": 1.0})
    aggregator: str = "weighted_sum"
    simulate: dict | None = None

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base: Path = Path(".")) -> PipelineConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = dict(doc)
        for key in (*REQUIRED_FILES, "topology"):
            if values.get(key) is not None:
                values[key] = (base / values[key]).resolve()
        if values.get("simulate"):
            sim = dict(values["simulate"])
            for key in ("plan_a", "plan_b"):
                if sim.get(key, "ncvs") not in ("ncvs", "cvss"):
                    sim[key] = str((base / sim[key]).resolve())
            values["simulate"] = sim
        return cls(**values)

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc, path.parent)

    def check(self) -> None:
        """Fail before any work if inputs are missing or parameters out of range."""
        for key in REQUIRED_FILES:
            p = getattr(self, key)
            if p is None:
                raise ConfigError(f"config is missing the {key!r} path")
            if not Path(p).is_file():
                raise ConfigError(f"{key} file not found: {p}")
        if self.topology is None and not self.generate:
            raise ConfigError("config needs either 'topology' or 'generate'")
        if self.topology is not None and not Path(self.topology).is_file():
            raise ConfigError(f"topology file not found: {self.topology}")
        if self.window_ms <= 0:
            raise ConfigError("window_ms must be positive")
        for key in ("min_support", "min_confidence", "threshold"):
            if not 0 < getattr(self, key) <= 1:
                raise ConfigError(f"{key} must be in (0, 1]")
        try:
            self.rank_config()
            self.weight_values()
            Aggregator.parse(self.aggregator)
        except (CtxVulnError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.simulate is not None and "gateway" not in self.simulate:
            raise ConfigError("simulate section needs a 'gateway'")

    def rank_config(self) -> RankConfig:
        return RankConfig(self.damping, self.max_iterations, self.tolerance)

    def weight_values(self) -> Weights:
        return Weights(**{k: float(v) for k, v in self.weights.items()})


def file_format(path: Path) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "json"


def resolve_plan(choice: str, scores, matches, vulndb) -> FixPlan:
    """``ncvs`` / ``cvss`` or a path to a JSON array / newline list of ids."""
    if choice == "ncvs":
        return contextual_order(scores)
    if choice == "cvss":
        return base_score_order(matches, vulndb)
    text = Path(choice).read_text()
    try:
        ids = json.loads(text)
    except json.JSONDecodeError:
        ids = [line.strip() for line in text.splitlines() if line.strip()]
    return FixPlan(tuple(ids), Path(choice).stem)


FAILED_MARKER = "PIPELINE_FAILED"


def run_pipeline(config: PipelineConfig, out_dir: str | Path) -> dict[str, Path]:
    """Run every stage and return the artifact paths, keyed by file name.

    The first failing stage aborts the run. Artifacts already written are left
    in place and flagged by a ``PIPELINE_FAILED`` file naming the stage.
    """
    config.check()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILED_MARKER).unlink(missing_ok=True)
    written: dict[str, Path] = {}
    try:
        _run_stages(config, out, written)
    except Exception as exc:
        stage = next(reversed(written), "start")
        (out / FAILED_MARKER).write_text(f"failed after {stage}: {exc}\n")
        raise
    return written


def _run_stages(config: PipelineConfig, out: Path, written: dict[str, Path]) -> None:
    def write(name: str, text: str) -> None:
        path = out / name
        path.write_text(text)
        written[name] = path
        log.info("wrote %s", path)

    if config.topology is not None:
        topo = parse_topology(Path(config.topology).read_text(), file_format(config.topology))
    else:
        gen = dict(config.generate)
        model = gen.pop("model")
        if model not in GENERATORS:
            raise ConfigError(f"unknown topology model {model!r}")
        topo = GENERATORS[model](**gen)
    write("topology.json", serialize_topology(topo))

    events = parse_events(Path(config.events).read_text(), file_format(config.events))
    sw_deps = mine_software_dependencies(events, config.window_ms, config.min_support, config.min_confidence)
    write("sw_deps.json", dump_software_dependencies(sw_deps))

    flows = parse_flows(Path(config.flows).read_text(), file_format(config.flows))
    host_of = json.loads(Path(config.hosts).read_text())
    net_deps = mine_network_dependencies(flows, host_of, config.threshold)
    write("net_deps.json", dump_network_dependencies(net_deps))

    endpoints = cdg_mod.load_endpoint_map(Path(config.endpoints).read_text())
    graph = cdg_mod.build_cdg(topo, sw_deps, net_deps, endpoints)
    write("cdg.json", cdg_mod.serialize_cdg(graph))

    vulndb = load_vulndb(Path(config.vulndb).read_text())
    report = match_vulnerabilities(vulndb, graph)
    write("matches.json", dump_matches(report))

    importances = compute_importances(graph, config.rank_config())
    scores = score_vulnerabilities(report.matches, importances, config.weight_values(), config.aggregator, vulndb)
    write("report.json", dump_report(scores))
    write("report.txt", render_report(scores, report.matches, "text"))

    if config.simulate is not None:
        sim = config.simulate
        plan_a = resolve_plan(sim.get("plan_a", "ncvs"), scores, report.matches, vulndb)
        plan_b = resolve_plan(sim.get("plan_b", "cvss"), scores, report.matches, vulndb)
        cmp = compare_plans(graph, report.matches, plan_a, plan_b, sim["gateway"])
        write("steps.csv", render_steps_csv(cmp))
        write("steps.txt", render_ascii_plot(cmp))
