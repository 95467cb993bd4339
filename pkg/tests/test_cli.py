import json

import pytest

from frozenperc.cli import main


def test_pi_estimate_cli(capsys):
    main(["pi", "estimate", "--spec", "1,0,o", "--inner", "4", "--outer", "8",
          "--reps", "200", "--seed", "1", "--allow-small"])
    out = capsys.readouterr().out
    assert "pi[1,0,o](4,8) =" in out


def test_arms_check_cli(capsys):
    main(["arms", "check", "--spec", "1,0,o", "--annulus", "annulus 0 0 2 5",
          "--p", "0.9", "--seed", "2"])
    out = capsys.readouterr().out.strip()
    assert out in ("True", "False")


def test_xlen_cli(capsys):
    main(["xlen", "--p", "1.0", "--eps", "0.25", "--n-max", "16",
          "--reps", "200"])
    assert "L_0.25(1.0) = 1" in capsys.readouterr().out


def test_freeze_run_cli(tmp_path, capsys):
    main(["freeze", "run", "--n", "3", "--seed", "4", "--out-dir",
          str(tmp_path), "--format", "json,svg"])
    out = capsys.readouterr().out.splitlines()
    js = json.load(open(out[0]))
    assert js["N"] == 3 and "events" in js
    assert open(out[1]).read().startswith("<svg")


def test_freeze_stats_cli(tmp_path, capsys):
    main(["freeze", "stats", "origin-freeze", "--n", "4", "--reps", "30",
          "--seed", "3", "--out-dir", str(tmp_path), "--format", "csv,json"])
    paths = capsys.readouterr().out.splitlines()
    assert any(p.endswith(".csv") for p in paths)


def test_gridpath_cli(tmp_path, capsys):
    region_file = tmp_path / "region.json"
    region_file.write_text(json.dumps(
        {"procedural": "corridor", "params": {"length": 2000, "width": 320}}))
    main(["gridpath", "--region", str(region_file), "--a", "150", "--b", "150"])
    rec = json.loads(capsys.readouterr().out)
    assert rec["verified"] is True
    assert rec["diameter"] >= 1999 - 4 * 150 - 12


def test_lowest_cli(capsys):
    main(["lowest", "--n", "6", "--p", "0.5", "--seed", "5"])
    rec = json.loads(capsys.readouterr().out)
    assert "vertices" in rec


def test_pi_table_cli(tmp_path, capsys):
    out = tmp_path / "pi4.json"
    main(["pi", "table", "--n", "1", "4", "--reps", "200", "--seed", "1",
          "--out", str(out)])
    tab = json.load(open(out))
    assert any(e["N"] == 4 for e in tab["entries"])


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": [4], "reps": 25, "seed": 7}))
    main(["freeze", "stats", "origin-freeze", "--config", str(cfg),
          "--reps", "35", "--out-dir", str(tmp_path)])
    paths = capsys.readouterr().out.splitlines()
    js = json.load(open([p for p in paths if p.endswith(".json")][0]))
    assert js["config"]["reps"] == 35  # flag overrides the file
    assert js["config"]["N"] == [4]
