from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from emclab.cli import EXIT_FAIL, EXIT_PASS, EXIT_SCALE, EXIT_USAGE, RunManifest, main
from emclab.family import family_A, write_family


def run(argv, tmp_path):
    return main(argv + ["--out", str(tmp_path), "--quiet"])


def records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_exact_graph_example(tmp_path):
    assert run(["exact", "--n", "7", "--k", "2", "--s", "2"], tmp_path) == EXIT_PASS
    (report,) = tmp_path.glob("exact-*.jsonl")
    rec = records(report)[-1]
    assert rec["report"]["optimum"] == 11 and rec["report"]["agree"] and rec["passed"]
    witness = rec["report"]["witness_file"]
    assert witness.startswith(str(tmp_path)) and (tmp_path / witness.split("/")[-1]).exists()


def test_usage_errors(tmp_path, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["exact", "--n", "7"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert run(["simulate", "--m", "10", "--l", "1", "--t", "4", "--construct", "A", "--s", "1",
                "--trials", "100", "--stopping", "0.5"], tmp_path) == EXIT_USAGE


def test_scale_limit_exit_code(tmp_path):
    assert run(["exact", "--n", "9", "--k", "3", "--s", "2"], tmp_path) == EXIT_SCALE
    assert not list(tmp_path.glob("exact-*"))


def test_failed_check_exit_code(tmp_path):
    # the full layer C([6],2) has ν* = 3, so "ν* < s+1" fails for s = 1
    assert run(["lp", "--construct", "full", "--n", "6", "--k", "2", "--s", "1"], tmp_path) == EXIT_FAIL
    rec = records(next(tmp_path.glob("lp-*.jsonl")))[-1]
    assert rec["report"]["value"] == "3" and not rec["report"]["below_s_plus_1"]
    assert rec["report"]["strong_duality"]


def test_certify_item_C(tmp_path):
    assert run(["certify", "appendix", "--item", "C"], tmp_path) == EXIT_PASS
    rec = records(next(tmp_path.glob("certify-*.jsonl")))[-1]
    vals = rec["report"]["values"]
    assert abs(float(vals["sum"]["mid"]) - 0.234) <= 0.002
    assert abs(float(vals["ratio"]["mid"]) - 0.88) <= 0.005


def test_certify_dirac(tmp_path):
    assert run(["certify", "dirac", "--k-min", "2", "--k-max", "40"], tmp_path) == EXIT_PASS


def test_bounds_writes_csv_with_manifest(tmp_path):
    assert run(["bounds", "--n", "12", "--k", "3", "--s", "2"], tmp_path) == EXIT_PASS
    (path,) = tmp_path.glob("bounds-*.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest ")
    manifest = json.loads(lines[0][len("# manifest "):])
    assert manifest["subcommand"] == "bounds" and manifest["params"]["n"] == 12
    rows = list(csv.DictReader(lines[1:]))
    assert {r["name"] for r in rows} >= {"frankl", "han", "kneser", "feige"}


def test_reports_are_append_only_and_keyed_by_manifest(tmp_path):
    argv = ["lp", "--construct", "A", "--n", "8", "--k", "2", "--s", "2"]
    assert run(argv, tmp_path) == EXIT_PASS
    assert run(argv, tmp_path) == EXIT_PASS
    (path,) = tmp_path.glob("lp-*.jsonl")
    recs = records(path)
    assert len(recs) == 2 and recs[0]["report"] == recs[1]["report"]
    assert run(argv + ["--seed", "5"], tmp_path) == EXIT_PASS
    assert len(list(tmp_path.glob("lp-*.jsonl"))) == 2


def test_manifest_key_ignores_wall_time():
    a = RunManifest("exact", {"n": 7}, 0, 128, wall_seconds=1.0)
    b = RunManifest("exact", {"n": 7}, 0, 128, wall_seconds=9.0)
    assert a.key() == b.key()
    assert a.key() != RunManifest("exact", {"n": 8}, 0, 128).key()


def test_family_file_input(tmp_path):
    fam = tmp_path / "fam.txt"
    write_family(family_A(9, 3, 1), fam)
    out = tmp_path / "out"
    assert run(["shadow", "--family", str(fam), "--s", "1"], out) == EXIT_PASS
    assert run(["lp", "--family", str(fam), "--s", "1"], out) == EXIT_PASS
    assert run(["lp", "--family", str(tmp_path / "missing.txt")], out) == EXIT_USAGE


def test_simulate_and_spectral(tmp_path):
    assert run(["simulate", "--m", "12", "--l", "2", "--t", "4", "--trials", "20000", "--seed", "3"],
               tmp_path) == EXIT_PASS
    assert run(["spectral", "--m", "9", "--l", "3", "--random", "20"], tmp_path) == EXIT_PASS


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_module_entry_point(tmp_path, fmt):
    proc = subprocess.run([sys.executable, "-m", "emclab", "exact", "--n", "6", "--k", "2", "--s", "1",
                           "--out", str(tmp_path), "--format", fmt],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "report appended to" in proc.stderr
    assert list(tmp_path.glob(f"exact-*.{'jsonl' if fmt == 'json' else 'csv'}"))
