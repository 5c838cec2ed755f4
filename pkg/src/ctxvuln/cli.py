"""``ctxvuln`` command line interface.

Each subcommand runs one pipeline stage on documented file formats; ``run``
chains them all from a JSON config. Flags always override config values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import cdg as cdg_mod
from .errors import CtxVulnError
from .fixsim import compare_plans, render_ascii_plot, render_steps_csv
from .logmine import (
    dump_software_dependencies,
    extract_events,
    load_software_dependencies,
    mine_software_dependencies,
    parse_events,
    render_dependency_tags,
)
from .netdep import (
    dump_network_dependencies,
    load_network_dependencies,
    mine_network_dependencies,
    parse_flows,
    render_dependency_listing,
)
from .pipeline import PipelineConfig, file_format, resolve_plan, run_pipeline
from .report import render_report
from .scoring import (
    RankConfig,
    Weights,
    compute_importances,
    load_report,
    score_vulnerabilities,
    sweep_weights,
)
from .topology import GENERATORS, parse_topology, serialize_topology, validate_topology
from .vulnmatch import dump_matches, load_matches, load_vulndb, match_vulnerabilities

log = logging.getLogger("ctxvuln")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CtxVulnError(f"cannot read {path}: {exc.strerror}") from None


def _emit(args: argparse.Namespace, text: str, out: str | None = None) -> None:
    out = out if out is not None else args.out
    if not out:
        sys.stdout.write(text)
        return
    path = Path(out)
    if args.out_dir and not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _param(args: argparse.Namespace, name: str):
    """Flag value if given, else the config file value, else the built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return getattr(args.config_obj, name)


def _rank_config(args) -> RankConfig:
    return RankConfig(_param(args, "damping"), _param(args, "max_iterations"), _param(args, "tolerance"))


def _weights(args) -> Weights:
    cfg = args.config_obj.weights
    return Weights(
        args.w_ti if args.w_ti is not None else float(cfg.get("ti", 1.0)),
        args.w_ni if args.w_ni is not None else float(cfg.get("ni", 1.0)),
        args.w_si if args.w_si is not None else float(cfg.get("si", 1.0)),
    )


# ---------------------------------------------------------------- commands


def cmd_topo(args) -> int:
    if args.action == "parse":
        graph = parse_topology(_read(args.file), args.input_format or file_format(Path(args.file)))
    else:
        if args.model == "fat-tree":
            if args.k is None:
                raise CtxVulnError("--k is required for the fat-tree model")
            graph = GENERATORS["fat-tree"](args.k, args.hosts_per_edge, gateway=args.gateway)
        elif args.model == "bcube":
            if args.n is None or args.levels is None:
                raise CtxVulnError("--n and --levels are required for the bcube model")
            graph = GENERATORS["bcube"](args.n, args.levels, gateway=args.gateway)
        else:
            graph = GENERATORS[args.model]()
    for problem in validate_topology(graph):
        print(f"warning: {problem}", file=sys.stderr)
    _emit(args, serialize_topology(graph, args.format))
    return 0


def cmd_mine_sw(args) -> int:
    text = _read(args.events)
    if args.pattern:
        events = extract_events(text.splitlines(), args.pattern)
    else:
        events = parse_events(text, file_format(Path(args.events)))
    deps = mine_software_dependencies(
        events, _param(args, "window_ms"), _param(args, "min_support"), _param(args, "min_confidence")
    )
    _emit(args, render_dependency_tags(deps) if args.tags else dump_software_dependencies(deps))
    return 0


def cmd_mine_net(args) -> int:
    flows = parse_flows(_read(args.flows), file_format(Path(args.flows)))
    host_of = json.loads(_read(args.hosts))
    deps = mine_network_dependencies(flows, host_of, _param(args, "threshold"))
    if args.listing:
        _emit(args, render_dependency_listing(deps))
    else:
        _emit(args, dump_network_dependencies(deps))
    return 0


def cmd_build(args) -> int:
    topo = parse_topology(_read(args.topo), file_format(Path(args.topo)))
    sw = load_software_dependencies(_read(args.sw_deps)) if args.sw_deps else []
    net = load_network_dependencies(_read(args.net_deps)) if args.net_deps else []
    endpoints = cdg_mod.load_endpoint_map(_read(args.endpoints)) if args.endpoints else {}
    graph = cdg_mod.build_cdg(topo, sw, net, endpoints)
    _emit(args, cdg_mod.serialize_cdg(graph))
    return 0


def cmd_match(args) -> int:
    graph = cdg_mod.parse_cdg(_read(args.cdg))
    report = match_vulnerabilities(load_vulndb(_read(args.vulndb)), graph)
    for vid in report.unmatched:
        print(f"warning: {vid} matches no software node", file=sys.stderr)
    _emit(args, dump_matches(report))
    return 0


def _scores(args):
    graph = cdg_mod.parse_cdg(_read(args.cdg))
    matches = load_matches(_read(args.matches)).matches
    vulndb = load_vulndb(_read(args.vulndb))
    importances = compute_importances(graph, _rank_config(args))
    return graph, matches, vulndb, importances


def cmd_score(args) -> int:
    _, matches, vulndb, importances = _scores(args)
    scores = score_vulnerabilities(matches, importances, _weights(args), _param(args, "aggregator"), vulndb)
    _emit(args, render_report(scores, matches, args.format))
    return 0


def cmd_sweep(args) -> int:
    _, matches, vulndb, importances = _scores(args)
    grid = [float(x) for x in args.grid.split(",")]
    _emit(args, json.dumps(sweep_weights(matches, importances, grid, vulndb), indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    graph, matches, vulndb, importances = _scores(args)
    scores = score_vulnerabilities(matches, importances, _weights(args), _param(args, "aggregator"), vulndb)
    plan_a = resolve_plan(args.plan_a, scores, matches, vulndb)
    plan_b = resolve_plan(args.plan_b, scores, matches, vulndb)
    cmp = compare_plans(graph, matches, plan_a, plan_b, args.gateway)
    _emit(args, render_steps_csv(cmp))
    if args.plot:
        sys.stderr.write(render_ascii_plot(cmp))
    return 0


def cmd_run(args) -> int:
    cfg = args.config_obj
    for name in ("window_ms", "min_support", "min_confidence", "threshold", "damping", "max_iterations", "tolerance", "aggregator"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    w = _weights(args)
    cfg.weights = {"ti": w.ti, "ni": w.ni, "si": w.si}
    for name in ("events", "flows", "hosts", "endpoints", "vulndb", "topology"):
        if getattr(args, name):
            setattr(cfg, name, Path(getattr(args, name)).resolve())
    if args.gateway:
        cfg.simulate = {**(cfg.simulate or {}), "gateway": args.gateway}
    written = run_pipeline(cfg, args.out_dir or "ctxvuln-out")
    sys.stdout.write(written["report.txt"].read_text())
    return 0


def cmd_report(args) -> int:
    scores = load_report(_read(args.report))
    matches = load_matches(_read(args.matches)).matches if args.matches else ()
    _emit(args, render_report(scores, matches, args.format))
    return 0


# ------------------------------------------------------------------ parser


def _add_rank_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--damping", type=float)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--aggregator", choices=["weighted-sum", "cvss-product", "weighted_sum", "cvss_product"])
    p.add_argument("--w-ti", type=float)
    p.add_argument("--w-ni", type=float)
    p.add_argument("--w-si", type=float)


def _add_mining_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-ms", type=int)
    p.add_argument("--min-support", type=float)
    p.add_argument("--min-confidence", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config supplying defaults")
    common.add_argument("--out-dir", help="directory for outputs (relative --out paths land here)")
    common.add_argument("--verbose", "-v", action="store_true")

    # global flags live on each subcommand so values after the subcommand name are kept
    parser = argparse.ArgumentParser(prog="ctxvuln", description="Contextual vulnerability scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", parents=[common], help="parse or generate a hardware topology")
    p.add_argument("action", choices=["parse", "gen"])
    p.add_argument("file", nargs="?")
    p.add_argument("--input-format", choices=["json", "csv"])
    p.add_argument("--model", choices=sorted(GENERATORS), default="fat-tree")
    p.add_argument("--k", type=int)
    p.add_argument("--hosts-per-edge", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--gateway", action="store_true", help="attach a gw0 gateway node")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("mine-sw", parents=[common], help="mine software dependencies from log events")
    p.add_argument("events")
    _add_mining_flags(p)
    p.add_argument("--pattern", help="regex with named groups timestamp, node, component for raw logs")
    p.add_argument("--tags", action="store_true", help='emit <node="M" sw="S" dep="..."/> lines')
    p.add_argument("--out")
    p.set_defaults(func=cmd_mine_sw)

    p = sub.add_parser("mine-net", parents=[common], help="mine network dependencies from flow records")
    p.add_argument("flows")
    p.add_argument("--hosts", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--listing", action="store_true", help="emit the indented text listing")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mine_net)

    p = sub.add_parser("build", parents=[common], help="assemble the contextual dependency graph")
    p.add_argument("--topo", required=True)
    p.add_argument("--sw-deps")
    p.add_argument("--net-deps")
    p.add_argument("--endpoints")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("match", parents=[common], help="map vulnerabilities onto CDG nodes")
    p.add_argument("--cdg", required=True)
    p.add_argument("--vulndb", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_match)

    for name, func, helptext in (
        ("score", cmd_score, "rank vulnerabilities by contextual severity"),
        ("sweep-weights", cmd_sweep, "rankings across a grid of weights"),
        ("simulate", cmd_simulate, "compare two fix orders"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--cdg", required=True)
        p.add_argument("--matches", required=True)
        p.add_argument("--vulndb", required=True)
        _add_rank_flags(p)
        p.add_argument("--out")
        p.set_defaults(func=func)
        if name == "score":
            p.add_argument("--format", choices=["json", "text"], default="json")
        elif name == "sweep-weights":
            p.add_argument("--grid", default="0.5,1,2", help="comma-separated weight values")
        else:
            p.add_argument("--plan-a", default="ncvs")
            p.add_argument("--plan-b", default="cvss")
            p.add_argument("--gateway", required=True)
            p.add_argument("--plot", action="store_true", help="ASCII plot on stderr")

    p = sub.add_parser("run", parents=[common], help="run the whole pipeline")
    for name in ("events", "flows", "hosts", "endpoints", "vulndb", "topology"):
        p.add_argument(f"--{name}")
    _add_mining_flags(p)
    p.add_argument("--threshold", type=float)
    _add_rank_flags(p)
    p.add_argument("--gateway", help="enable the fix simulation from this gateway")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common], help="render a saved report")
    p.add_argument("report")
    p.add_argument("--matches")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "aggregator", None):
        args.aggregator = args.aggregator.replace("-", "_")
    try:
        args.config_obj = PipelineConfig.load(args.config) if args.config else PipelineConfig()
        return args.func(args)
    except (CtxVulnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
