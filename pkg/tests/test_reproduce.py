import json
import os

import pytest

from calibkit import reproduce
from calibkit.catalog import make_associative
from calibkit.exterior import Covector


def mutated_assoc() -> Covector:
    w = make_associative().form
    # bump the Re(dz1 dz2 dz3) coefficient, visible on the x-plane
    return w + Covector.basis(7, 2, 3, 4) * 0.01


@pytest.fixture(scope="module")
def twin_runs(tmp_path_factory):
    a, b = tmp_path_factory.mktemp("a"), tmp_path_factory.mktemp("b")
    sa = reproduce.reproduce_all(a)
    sb = reproduce.reproduce_all(b)
    return a, b, sa, sb


def test_fresh_run_all_pass(twin_runs):
    _, _, sa, _ = twin_runs
    assert sa["pass"], [r for r in sa["checks"] if not r["pass"]]
    assert [r["id"] for r in sa["checks"]] == list(range(1, 13))


def test_byte_identical_reports(twin_runs):
    a, b, _, _ = twin_runs
    names = sorted(f for f in os.listdir(a) if f != "timing.json")
    assert names == sorted(f for f in os.listdir(b) if f != "timing.json")
    assert "summary.json" in names and "summary.txt" in names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_summary_rows_carry_anchor_value_tolerance(twin_runs):
    a, _, _, _ = twin_runs
    summary = json.loads((a / "summary.json").read_text())
    for row in summary["checks"]:
        assert row["anchor"] and {"value", "tol", "name"} <= set(row["worst"])
    for i in range(1, 13):
        rep = json.loads((a / f"check_{i:02d}.json").read_text())
        assert rep["checks"] and all(c["anchor"] and "tol" in c for c in rep["checks"])


def test_fault_injection_identifies_mutated_checks(tmp_path):
    summary = reproduce.reproduce_all(tmp_path, forms={"assoc": mutated_assoc()}, only=[1, 2, 3, 11])
    by_id = {r["id"]: r for r in summary["checks"]}
    assert not summary["pass"]
    assert by_id[2]["pass"]
    for i in (1, 3, 11):
        assert not by_id[i]["pass"]
    assert any(name.startswith("assoc:") for name in by_id[1]["failed"])
    assert by_id[3]["failed"] == ["star assoc == coassoc"]


def test_partial_results_preserved(tmp_path, monkeypatch):
    def boom(forms, seed):
        raise RuntimeError("synthetic failure")

    monkeypatch.setitem(reproduce.CHECKS, 2, boom)
    summary = reproduce.reproduce_all(tmp_path, only=[2, 3])
    ids = {r["id"]: r for r in summary["checks"]}
    assert not ids[2]["pass"] and ids[3]["pass"]
    rep = json.loads((tmp_path / "check_02.json").read_text())
    assert "synthetic failure" in rep["checks"][0]["anchor"]
    assert (tmp_path / "check_03.json").exists()


def test_cli_reproduce_exit_codes(tmp_path, capsys):
    from calibkit.cli import run_command

    assert run_command(["reproduce", "--out", str(tmp_path), "--only", "3", "--only", "11"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and (tmp_path / "reproduce.json").exists()
