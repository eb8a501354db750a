import json
import math
import subprocess
import sys

import pytest

from hypk import cli
from hypk.bounds import BoundReport

GREEN = ["green", "--domain", "slab", "--a", "1", "--b", "1", "--mu", "1", "--x", "0.4", "1.7",
         "--y", "0.6", "1.4", "--y", "0.2", "2.5", "--paths", "300", "--seed", "5"]


def test_missing_mu_exits_2():
    bad = GREEN[:7] + GREEN[9:]
    assert "--mu" not in bad
    assert cli.main(bad) == 2


def test_invalid_values_exit_2(capsys):
    assert cli.main(GREEN[:8] + ["-1"] + GREEN[9:]) == 2
    assert "mu" in capsys.readouterr().err
    assert cli.main(GREEN[:3] + ["--b", "1"] + GREEN[7:]) == 2                 # slab without --a
    assert cli.main(GREEN[:9] + ["--x", "0.4", "0.5"] + GREEN[12:]) == 2      # x below the slab


def test_green_csv_header_and_round_trip(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(GREEN + ["--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "x,y,mu,lambda,value,stderr,n_paths,seed"
    rows = cli.parse_estimates_csv(text)
    assert len(rows) == 2 and rows[0]["y"] == (0.6, 1.4) and rows[0]["n_paths"] == 300
    assert cli.estimates_csv(rows) == text
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["command"] == "green" and len(summary["estimates"]) == 2


def test_same_seed_gives_identical_files(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(GREEN + ["--out", str(a)]) == 0
    assert cli.main(GREEN + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()


def test_poisson_command(tmp_path):
    out = tmp_path / "p.csv"
    argv = ["poisson", "--domain", "slab", "--a", "1", "--b", "1", "--mu", "0.8", "--x", "0.4", "1.7",
            "--y", "0.5", "1.0", "--y", "0.0", "1.5", "--paths", "300", "--out", str(out)]
    assert cli.main(argv) == 0
    rows = cli.parse_estimates_csv(out.read_text())
    assert len(rows) == 2 and all(r["value"] >= 0 for r in rows)
    regions = json.loads(out.with_suffix(".json").read_text())["regions"]
    assert [r["face"] for r in regions] == ["bottom", "side-low"]
    assert cli.main(argv[:-6] + ["--y", "0.5", "1.5", "--out", str(out)]) == 2  # interior y


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# slab run\ndomain = slab\na = 1\nb = 1\nmu = 1   # index\nx = 0.4 1.7\ny = 0.6 1.4\n"
                   "paths = 200\nseed = 9\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["green", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["green", "--config", str(cfg), "--seed", "10", "--out", str(b)]) == 0
    ra, rb = cli.parse_estimates_csv(a.read_text()), cli.parse_estimates_csv(b.read_text())
    assert ra[0]["seed"] == 9 and rb[0]["seed"] == 10
    bad = tmp_path / "bad.cfg"
    bad.write_text("mu 1\n")
    assert cli.main(["green", "--config", str(bad)]) == 2


BOUNDS = ["bounds", "--theorem", "4.1", "--a", "1", "--b", "1", "--mu", "1", "--x", "0.4", "1.7",
          "--y", "0.6", "1.4", "--y", "0.4", "1.7"]


def test_bounds_report_and_diagonal(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(BOUNDS + ["--out", str(out)]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert {"sup_ratio", "inf_ratio"} <= summary.keys() and summary["skipped"] == 1
    rep = BoundReport.from_csv(out.read_text())
    assert rep.rows[1].note == "skipped=diagonal"
    assert math.isfinite(rep.sup_ratio) and rep.sup_ratio == rep.inf_ratio > 0


def test_bounds_empty_grid_and_wrong_face():
    assert cli.main(BOUNDS[:11]) == 2
    assert cli.main(BOUNDS[:11] + ["--y", "0.0", "1.4"]) == 2                 # boundary y for a Green estimate


def test_bounds_halfspace_mc(tmp_path):
    out = tmp_path / "h.csv"
    argv = ["bounds", "--theorem", "halfspace", "--a", "1", "--mu", "1", "--x", "0.0", "1.5", "--y", "0.3", "1.2",
            "--source", "mc", "--paths", "200", "--t-max", "5", "--out", str(out)]
    assert cli.main(argv) == 0
    rep = BoundReport.from_csv(out.read_text())
    assert rep.extra_columns == ("stderr",) and rep.rows[0].ratio > 0


def test_lemma_macdonald_column(tmp_path):
    out = tmp_path / "l.csv"
    assert cli.main(["lemma", "--alpha", "0", "--beta", "0.5", "--b-grid", "0.1,1,10", "--out", str(out)]) == 0
    rep = BoundReport.from_csv(out.read_text())
    assert rep.extra_columns == ("macdonald",) and len(rep.rows) == 3
    assert rep.rows[1].extra[0] == pytest.approx(0.10832122937756454, rel=1e-12)
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["refinement_delta"] < 1e-6 and summary["meta"]["macdonald_max_rel"] < 1e-8


def test_lemma_negative_gamma_gate(tmp_path):
    grid = ["--a-grid", "0.01:100:3", "--b-grid", "0.01:10:4"]
    assert cli.main(["lemma", "--alpha", "0", "--beta", "1", "--gamma", "-0.4", "--out", str(tmp_path / "ok.csv")]
                    + grid) == 0
    assert cli.main(["lemma", "--alpha", "0", "--beta", "1", "--gamma", "-0.6"] + grid) == 2
    assert cli.main(["lemma", "--alpha", "0", "--beta", "1", "--b-grid", ","]) == 2


def test_validate_all_rejects_unknown_criterion():
    assert cli.main(["validate-all", "--only", "12"]) == 2


def test_validate_all_subset(tmp_path):
    assert cli.main(["validate-all", "--quick", "--only", "2", "3", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert [c["number"] for c in summary["criteria"]] == [2, 3] and summary["all_passed"]
    assert (tmp_path / "criteria.csv").read_text().startswith("number,name,passed,failed_checks")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hypk", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "validate-all" in r.stdout
