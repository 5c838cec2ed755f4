"""
Comparing fix orders
====================

Fix one vulnerability per step and count servers that are both
uncompromised and reachable from the gateway over uncompromised hardware.
Fixing in contextual order restores service sooner than fixing by base score.
"""

import tempfile
from pathlib import Path

from ctxvuln.cdg import parse_cdg
from ctxvuln.fixsim import base_score_order, compare_plans, contextual_order, render_ascii_plot, render_steps_csv
from ctxvuln.fixture import fixture_dir
from ctxvuln.pipeline import PipelineConfig, run_pipeline
from ctxvuln.scoring import load_report
from ctxvuln.vulnmatch import load_matches, load_vulndb

out = Path(tempfile.mkdtemp(prefix="ctxvuln-demo-"))
run_pipeline(PipelineConfig.load(fixture_dir() / "config.json"), out)

cdg = parse_cdg((out / "cdg.json").read_text())
matches = load_matches((out / "matches.json").read_text()).matches
scores = load_report((out / "report.json").read_text())
vulndb = load_vulndb((fixture_dir() / "vulndb.json").read_text())

ncvs = contextual_order(scores)
cvss = base_score_order(matches, vulndb)
print("contextual:", ncvs.ordering)
print("base score:", cvss.ordering)

cmp = compare_plans(cdg, matches, ncvs, cvss, gateway="gw0")
print(render_steps_csv(cmp))
print(render_ascii_plot(cmp))
