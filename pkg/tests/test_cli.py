import json
import subprocess
import sys
from pathlib import Path

import pytest

from transducernet.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main

GOLDEN = Path(__file__).parent / "golden"
HOURS = "0.01"  # 36 simulated seconds


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_help_lists_subcommands_and_flags():
    out = subprocess.run([sys.executable, "-m", "transducernet.cli", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for cmd in ("run", "compare-energy", "export-heatmap", "fuzz-protocol", "scenario", "calibrate"):
        assert cmd in out
    out = subprocess.run([sys.executable, "-m", "transducernet.cli", "run", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for flag in ("--scenario", "--hours", "--seed", "--profile", "--out", "--event-log", "--full-store"):
        assert flag in out


def test_run_is_reproducible(tmp_path, capsys):
    digests = []
    for name in ("a", "b"):
        assert run_cli("run", "--hours", HOURS, "--out", tmp_path / name, "--event-log", "--full-store") == EXIT_OK
        doc = json.loads((tmp_path / name / "manifest.json").read_text())
        digests.append(doc["digests"])
    assert digests[0] == digests[1]
    a = tmp_path / "a"
    for f in ("events.log", "records.log", "samples.csv", "minutes.csv", "store.json", "energy.csv"):
        assert (a / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    summary = json.loads((a / "manifest.json").read_text())["summary"]
    assert summary["samples_collected"] == summary["samples_ingested"] == 73 * 36


def test_out_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TRANSDUCERNET_OUT", str(tmp_path / "env"))
    assert run_cli("run", "--hours", HOURS) == EXIT_OK
    assert (tmp_path / "env" / "manifest.json").exists()


def test_heatmap_from_run(tmp_path, capsys):
    run_cli("run", "--hours", "0.1", "--out", tmp_path)
    assert run_cli("export-heatmap", "--run", tmp_path, "--bin-minutes", 1) == EXIT_OK
    csv = (tmp_path / "heatmap-1m.csv").read_text().splitlines()
    assert len(csv) == 20 and csv[0].count(",") == 6
    assert (tmp_path / "heatmap-1m.pgm").read_bytes().startswith(b"P5\n48 152\n255\n")
    assert run_cli("export-heatmap", "--run", tmp_path, "--bin-minutes", 7) == EXIT_INVALID
    assert run_cli("export-heatmap", "--run", tmp_path / "missing") == EXIT_INVALID


def test_compare_energy(tmp_path, capsys):
    assert run_cli("compare-energy", "--hours", HOURS, "--out", tmp_path / "s") == EXIT_OK
    assert "network ratio" in capsys.readouterr().out
    assert run_cli("compare-energy", "--hours", HOURS, "--out", tmp_path / "p", "--jobs", 2) == EXIT_OK
    for f in ("energy-proposed.csv", "energy-traditional.csv", "comparison.csv"):
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "p" / f).read_bytes()
    assert run_cli("compare-energy", "--hours", HOURS, "--out", tmp_path / "s",
                   "--expect-ratio", 0.99, 1.0) == EXIT_FAILED


def test_scenario_commands(tmp_path, capsys):
    assert run_cli("scenario", "show") == EXIT_OK
    assert capsys.readouterr().out == (GOLDEN / "builtin-home.json").read_text()
    good = GOLDEN / "builtin-home.json"
    assert run_cli("scenario", "validate", good) == EXIT_OK
    doc = json.loads(good.read_text())
    doc["nodes"][0]["layout"][0] = 60
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run_cli("scenario", "validate", good, bad) == EXIT_INVALID
    err = capsys.readouterr().err
    assert str(bad) in err and "nodes[0].layout[0]" in err
    assert run_cli("run", "--scenario", bad, "--out", tmp_path) == EXIT_INVALID


def test_profile_and_usage_errors(tmp_path, capsys):
    assert run_cli("run", "--hours", HOURS, "--profile", "wifi", "--out", tmp_path) == EXIT_INVALID
    assert run_cli("run", "--hours", -1, "--out", tmp_path) == EXIT_INVALID
    profile = tmp_path / "p.json"
    profile.write_text(json.dumps({"params": json.loads(
        (Path(__file__).parents[1] / "src/transducernet/data/zigbee-default.json").read_text())["params"]}))
    assert run_cli("run", "--hours", HOURS, "--profile", profile, "--out", tmp_path / "o") == EXIT_OK
    with pytest.raises(SystemExit):
        run_cli("run", "--bogus")


def test_fuzz_protocol(tmp_path, capsys):
    assert run_cli("fuzz-protocol", "--iterations", 20, "--seed", 1) == EXIT_OK
    corpus = tmp_path / "corpus.txt"
    corpus.write_bytes((GOLDEN / "control-empty.xml").read_bytes().strip() + b"\n<node\n")
    assert run_cli("fuzz-protocol", "--iterations", 5, "--reject-corpus", corpus, "--out", tmp_path) == EXIT_FAILED
    assert (tmp_path / "fuzz-repro-0.json").exists()


def test_calibrate_short(tmp_path, capsys):
    code = run_cli("calibrate", "--hours", "0.01", "--profile-out", tmp_path / "fit.json")
    assert code in (EXIT_OK, EXIT_FAILED)
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["fit"]["horizon_ms"] == 36_000 and "params" in doc
