import json
import shutil
import subprocess
import sys

import pytest

from ctxvuln.cli import main
from ctxvuln.errors import ConfigError
from ctxvuln.fixture import render_files, write_fixture
from ctxvuln.pipeline import FAILED_MARKER, PipelineConfig, run_pipeline
from ctxvuln.report import render_report
from ctxvuln.scoring import Aggregator, VulnerabilityScore, load_report


@pytest.fixture
def fx(tmp_path, fixture_path):
    d = tmp_path / "fx"
    shutil.copytree(fixture_path, d)
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_shipped_fixture_is_regenerable(fixture_path):
    for name, text in render_files().items():
        assert (fixture_path / name).read_text() == text, name


class TestStages:
    def test_topo_gen(self, capsys):
        code, out, _ = run(capsys, "topo", "gen", "--k", "4")
        doc = json.loads(out)
        assert code == 0 and (len(doc["nodes"]), len(doc["links"])) == (36, 48)

    def test_topo_gen_bcube_csv(self, capsys):
        code, out, _ = run(capsys, "topo", "gen", "--model", "bcube", "--n", "4", "--levels", "1", "--format", "csv")
        assert code == 0 and sum(1 for line in out.splitlines() if line.startswith("link,")) == 32

    def test_topo_bad_k(self, capsys):
        code, _, err = run(capsys, "topo", "gen", "--k", "3")
        assert code == 1 and err.startswith("error:")

    def test_topo_parse_warns(self, tmp_path, capsys):
        f = tmp_path / "t.csv"
        f.write_text("node,a,server\nnode,b,edge_switch\nnode,c,server\nlink,a,b\n")
        code, _, err = run(capsys, "topo", "parse", f)
        assert code == 0 and "'c'" in err

    def test_stage_by_stage(self, fx, tmp_path, capsys):
        out = tmp_path / "o"
        assert run(capsys, "mine-sw", fx / "events.csv", "--out-dir", out, "--out", "sw.json")[0] == 0
        assert run(capsys, "mine-net", fx / "flows.csv", "--hosts", fx / "hosts.json", "--out-dir", out, "--out", "net.json")[0] == 0
        code, _, _ = run(
            capsys, "build", "--topo", fx / "topology.json", "--sw-deps", out / "sw.json", "--net-deps", out / "net.json",
            "--endpoints", fx / "endpoints.json", "--out", out / "cdg.json",
        )
        assert code == 0
        code, _, err = run(capsys, "match", "--cdg", out / "cdg.json", "--vulndb", fx / "vulndb.json", "--out", out / "m.json")
        assert code == 0 and "CVE-2016-0731" in err
        common = ["--cdg", out / "cdg.json", "--matches", out / "m.json", "--vulndb", fx / "vulndb.json"]
        code, text, _ = run(capsys, "score", *common, "--aggregator", "cvss-product", "--format", "text")
        assert code == 0 and text.splitlines()[0].split() == ["rank", "id", "severity", "nodes"]
        code, sweep, _ = run(capsys, "sweep-weights", *common, "--grid", "1,2")
        assert code == 0 and len(json.loads(sweep)) == 8
        code, steps, err = run(capsys, "simulate", *common, "--gateway", "gw0", "--plot")
        assert code == 0 and steps.splitlines()[0] == "step,alive_ncvs,alive_cvss" and "winner=" in err

    def test_tags_and_listing(self, fx, capsys):
        _, tags, _ = run(capsys, "mine-sw", fx / "events.csv", "--tags")
        assert tags.startswith('<node="agg1" sw="ospfd" dep="switch-os-eos"/>')
        _, listing, _ = run(capsys, "mine-net", fx / "flows.csv", "--hosts", fx / "hosts.json", "--listing")
        assert listing.splitlines()[0] == "10.0.0.1:443:[TCP]"

    def test_flags_override_config(self, fx, capsys):
        _, strict, _ = run(capsys, "mine-sw", fx / "events.csv", "--config", fx / "config.json", "--min-confidence", "1.0")
        _, loose, _ = run(capsys, "mine-sw", fx / "events.csv", "--config", fx / "config.json")
        assert len(json.loads(strict)) < len(json.loads(loose))

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "mine-sw", "/nonexistent/events.csv")
        assert code == 1 and "/nonexistent/events.csv" in err


class TestPipeline:
    def test_run_writes_artifacts(self, fx, tmp_path, capsys):
        out = tmp_path / "run"
        code, text, _ = run(capsys, "run", "--config", fx / "config.json", "--out-dir", out)
        assert code == 0
        for name in ("topology.json", "sw_deps.json", "net_deps.json", "cdg.json", "matches.json", "report.json", "report.txt", "steps.csv"):
            assert (out / name).is_file(), name
        assert text == (out / "report.txt").read_text()
        ids = [s.vuln_id for s in load_report((out / "report.json").read_text())]
        assert ids.index("CVE-2016-1392") < ids.index("CVE-2015-7430")

    def test_missing_vulndb_fails_early(self, fx, tmp_path):
        doc = json.loads((fx / "config.json").read_text())
        del doc["vulndb"]
        cfg = PipelineConfig.from_dict(doc, fx)
        out = tmp_path / "nothing"
        with pytest.raises(ConfigError, match="vulndb"):
            run_pipeline(cfg, out)
        assert not out.exists()

    def test_no_simulate_no_steps(self, fx, tmp_path):
        doc = json.loads((fx / "config.json").read_text())
        del doc["simulate"]
        written = run_pipeline(PipelineConfig.from_dict(doc, fx), tmp_path / "o")
        assert "steps.csv" not in written

    def test_failure_marker(self, fx, tmp_path):
        (fx / "vulndb.json").write_text('[{"id": "bogus", "products": ["x"], "base_score": 1}]')
        cfg = PipelineConfig.load(fx / "config.json")
        with pytest.raises(Exception):
            run_pipeline(cfg, tmp_path / "o")
        assert "cdg.json" in (tmp_path / "o" / FAILED_MARKER).read_text()
        assert (tmp_path / "o" / "cdg.json").is_file()

    def test_generated_topology(self, tmp_path):
        cfg_path = write_fixture(tmp_path / "fx")
        doc = json.loads(cfg_path.read_text())
        assert doc["simulate"]["gateway"] == "gw0"
        cfg = PipelineConfig.load(cfg_path)
        cfg.topology = None
        cfg.generate = {"model": "fat-tree", "k": 2}
        with pytest.raises(Exception, match="unknown host"):
            run_pipeline(cfg, tmp_path / "o")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            PipelineConfig.from_dict({"bogus": 1})

    def test_report_subcommand(self, fx, tmp_path, capsys):
        out = tmp_path / "run"
        run(capsys, "run", "--config", fx / "config.json", "--out-dir", out)
        code, text, _ = run(capsys, "report", out / "report.json", "--matches", out / "matches.json")
        assert code == 0 and text == (out / "report.txt").read_text()


def score(vid, sev):
    return VulnerabilityScore(vid, sev, 0, 0, 0, 0, Aggregator.WEIGHTED_SUM, 7.8, ("a@s1",))


class TestRender:
    def test_four_decimals(self):
        text = render_report([score("CVE-2015-4279", 0.1069)])
        assert "0.1069" in text.splitlines()[2]

    def test_header_only(self):
        assert len(render_report([]).splitlines()) == 2

    def test_json_round_trip(self):
        scores = [score("CVE-2015-4279", 0.1069), score("CVE-2016-1392", 0.05)]
        assert load_report(render_report(scores, format="json")) == scores

    def test_fixed_width(self):
        lines = render_report([score("CVE-2015-4279", 0.1069), score("CVE-2016-10000", 12.5)]).splitlines()
        assert len({len(line) for line in lines}) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ctxvuln", "topo", "gen", "--k", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and len(json.loads(res.stdout)["nodes"]) == 7
