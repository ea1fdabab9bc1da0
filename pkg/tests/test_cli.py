import json
import os
import subprocess
import sys

import numpy as np
import pytest

from calibkit.catalog import volume
from calibkit.cli import build_parser, default_seed, known_comass, run_command
from calibkit.curves import make_torus_curve
from calibkit.exterior import Covector
from calibkit.grids import GridSpec


def run(argv, capsys):
    code = run_command(argv)
    out = capsys.readouterr()
    data = json.loads(out.out) if out.out.strip().startswith(("{", "[")) else None
    return code, data, out.err


@pytest.fixture
def form_file(tmp_path):
    def write(omega, name="form.json"):
        path = tmp_path / name
        path.write_text(omega.to_json())
        return str(path)

    return write


class TestCalib:
    def test_comass_sl3_file(self, capsys, form_file):
        from calibkit.catalog import resolve_form

        code, data, _ = run(["calib", "comass", "--form", form_file(resolve_form("sl3"))], capsys)
        assert code == 0
        assert abs(data["details"]["estimate"]["lower"] - 1) <= 1e-6
        assert data["inputs"]["known_value"]["source"] == "catalog:sl3"

    def test_expect_calibration_sl3(self, capsys):
        code, data, _ = run(["calib", "comass", "--form", "sl3", "--expect-calibration"], capsys)
        assert code == 0 and data["pass"]

    def test_twice_volume_fails_expectation(self, capsys, form_file):
        code, data, _ = run(["calib", "comass", "--form", form_file(volume(3).form * 2), "--expect-calibration"], capsys)
        assert code == 1
        assert data["details"]["estimate"]["lower"] == pytest.approx(2.0)

    def test_check(self, capsys):
        code, data, _ = run(["calib", "check", "--form", "assoc"], capsys)
        assert code == 0 and data["details"]["status"] == "calibration"
        code, data, _ = run(["calib", "check", "--form", "eta3"], capsys)
        assert code == 1 and data["details"]["status"] == "not-calibration" and data["details"]["simple"]

    def test_decompose_split(self, capsys):
        code, data, _ = run(["calib", "decompose", "split", "--form", "sl3"], capsys)
        assert code == 0
        assert {"alpha", "epsilon", "rigid", "rotation"} <= set(data["details"])

    def test_decompose_perturb(self, capsys):
        code, data, _ = run(["calib", "decompose", "perturb", "--form", "sl3", "--t", "0.5"], capsys)
        assert code == 0 and data["details"]["t"] == 0.5

    def test_decompose_perturb_range(self, capsys):
        code, _, err = run(["calib", "decompose", "perturb", "--form", "sl3", "--t", "2"], capsys)
        assert code == 2 and "--t" in err

    def test_symp_normal(self, capsys, form_file):
        w = Covector.basis(4, 1, 2) + Covector.basis(4, 3, 4) * 0.5
        code, data, _ = run(["calib", "decompose", "symp-normal", "--form", form_file(w)], capsys)
        assert code == 0
        assert data["details"]["lambdas"] == pytest.approx([1.0, 0.5]) and data["details"]["ell"] == 1

    def test_symp_normal_needs_two_form(self, capsys):
        code, _, _ = run(["calib", "decompose", "symp-normal", "--form", "sl3"], capsys)
        assert code == 2


class TestCurve:
    def test_verify_torus(self, capsys):
        code, data, _ = run(["curve", "verify", "--curve", "torus", "--n", "3", "--form", "sl3"], capsys)
        assert code == 0
        assert data["details"]["summary"]["max_defect"] <= 1e-5

    def test_verify_catenoid_fd(self, capsys):
        code, data, _ = run(["curve", "verify", "--curve", "catenoid", "--n", "3", "--form", "sl3", "--fd"], capsys)
        assert code == 0

    def test_verify_wrong_form(self, capsys):
        code, _, err = run(["curve", "verify", "--curve", "torus", "--n", "3", "--form", "vol3"], capsys)
        assert code == 2 and "does not fit" in err

    def test_verify_csv(self, capsys, tmp_path):
        pts = GridSpec.parse("box:-0.3..0.3,count=121;-0.3..0.3,count=121").points(2)
        vals = make_torus_curve(2)(pts)
        path = tmp_path / "c.csv"
        np.savetxt(path, np.hstack([pts, vals]), delimiter=",")
        code, data, _ = run(["curve", "verify", "--csv", str(path), "--n", "2", "--form", "sl2", "--tol", "defect=1e-2", "--tol", "qr=1e-2"], capsys)
        assert code == 0
        assert data["config"]["tolerances"]["defect"] == 1e-2
        assert len(data["inputs"]["csv_sha256"]) == 64

    def test_csv_out(self, capsys, tmp_path):
        out = tmp_path / "grid.csv"
        code, _, _ = run(["curve", "verify", "--curve", "catenoid", "--n", "2", "--form", "sl2", "--csv-out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x1,x2,norm,density,defect" and len(lines) == 1001

    @pytest.mark.parametrize(
        "argv,code",
        [
            (["iso", "--curve", "catenoid", "--n", "3", "--center", "0,0,1.5", "--radius", "0.3"], 0),
            (["subharmonic", "--curve", "torus", "--n", "3"], 0),
            (["subharmonic", "--curve", "mobius-extension", "--n", "3", "--grid", "box:-1..1,count=1000"], 1),
            (["maxprin", "--curve", "sine", "--n", "2"], 1),
            (["maxprin", "--curve", "torus", "--n", "2"], 0),
            (["weakqs", "--curve", "mobius", "--n", "3", "--center", "1,1,1"], 0),
            (["constnorm", "--curve", "torus", "--n", "3", "--form", "sl3"], 0),
        ],
    )
    def test_analyze(self, capsys, argv, code):
        got, data, _ = run(["curve", "analyze", *argv, "--samples", "2000"], capsys)
        assert got == code
        assert data["command"].startswith("curve analyze")

    def test_param(self, capsys):
        code, data, _ = run(["curve", "analyze", "subharmonic", "--curve", "mobius-extension", "--n", "3", "--param", "z0=0", "--grid", "box:0.5..1,count=125"], capsys)
        assert code == 0 and data["inputs"]["params"]["z0"] == 0.0


class TestCatalogFuzz:
    def test_list(self, capsys):
        code, data, _ = run(["catalog", "list"], capsys)
        assert code == 0 and {e["name"] for e in data} >= {"sl3", "assoc", "cayley"}

    def test_emit_roundtrip(self, capsys):
        code, data, _ = run(["catalog", "emit", "assoc"], capsys)
        assert code == 0 and len(data["terms"]) == 7
        assert Covector.from_json_dict(data) == Covector.from_json(json.dumps(data))

    def test_hadamard(self, capsys):
        code, data, _ = run(["fuzz", "hadamard", "--form", "sl3", "--samples", "5000"], capsys)
        assert code == 0 and data["checks"][0]["value"] == 0


class TestErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["calib", "comass", "--form", "nonsense"],
            ["curve", "verify", "--curve", "nope", "--n", "3", "--form", "sl3"],
            ["curve", "verify", "--curve", "torus", "--n", "3", "--form", "sl3", "--grid", "box:1..0"],
            ["curve", "verify", "--curve", "torus", "--form", "sl3"],
            ["calib", "comass", "--form", "sl3", "--tol", "oops"],
            ["calib"],
            ["bogus"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        assert run_command(argv) == 2
        capsys.readouterr()

    def test_malformed_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run(["calib", "comass", "--form", str(p)], capsys)
        assert code == 2 and "malformed" in err

    def test_bad_terms(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"m": 3, "k": 2, "terms": [{"idx": [1, 5], "c": 1.0}]}))
        assert run(["calib", "comass", "--form", str(p)], capsys)[0] == 2

    def test_unwritable_out(self, capsys, tmp_path):
        code = run_command(["catalog", "emit", "sl2", "--out", str(tmp_path / "no" / "x.json")])
        assert code == 2


class TestConfig:
    def test_seed_env(self, monkeypatch):
        monkeypatch.setenv("CALIB_SEED", "7")
        assert default_seed() == 7
        monkeypatch.delenv("CALIB_SEED")
        assert default_seed() == 42

    def test_seed_env_invalid(self, monkeypatch, capsys):
        monkeypatch.setenv("CALIB_SEED", "x")
        assert run_command(["calib", "comass", "--form", "vol3"]) == 2

    def test_report_echoes_effective_config(self, capsys):
        _, data, _ = run(["calib", "comass", "--form", "vol3", "--seed", "3", "--tol", "comass=1e-7"], capsys)
        cfg = data["config"]
        assert cfg["seed"] == 3 and cfg["tolerances"]["comass"] == 1e-7 and "defect" in cfg["tolerances"]

    def test_every_check_has_tolerance_and_anchor(self, capsys):
        _, data, _ = run(["curve", "verify", "--curve", "catenoid", "--n", "3", "--form", "sl3"], capsys)
        for c in data["checks"]:
            assert isinstance(c["tol"], float) and c["anchor"]

    def test_known_comass(self):
        from calibkit.catalog import make_eta

        assert known_comass(make_eta(3)) == (pytest.approx(3**0.5), "eta3")
        assert known_comass(volume(3).form * 2) == (None, None)

    def test_out_file_and_verbose(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code = run_command(["calib", "comass", "--form", "vol3", "--out", str(out), "-v"])
        cap = capsys.readouterr()
        assert code == 0 and cap.out == "" and "elapsed" in cap.err
        assert json.loads(out.read_text())["command"] == "calib comass"

    def test_parser_groups(self):
        p = build_parser()
        assert p.parse_args(["fuzz", "hadamard", "--form", "sl3"]).samples == 100_000


def _cli(*argv, env=None):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "calibkit.cli", *argv], capture_output=True, text=True, env=e)


class TestDeterminism:
    def test_byte_identical_subprocess(self):
        argv = ("curve", "analyze", "iso", "--curve", "catenoid", "--n", "3", "--center", "0,0,1.5", "--samples", "3000")
        a, b = _cli(*argv), _cli(*argv)
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout

    def test_env_seed_changes_output(self):
        argv = ("fuzz", "hadamard", "--form", "sl2", "--samples", "500")
        a = _cli(*argv, env={"CALIB_SEED": "1"})
        b = _cli(*argv, env={"CALIB_SEED": "2"})
        assert json.loads(a.stdout)["config"]["seed"] == 1
        assert a.stdout != b.stdout

    def test_group_entry_point(self):
        r = subprocess.run([sys.executable, "-c", "import sys; from calibkit.cli import main_calib; sys.argv=['calib','comass','--form','vol3']; main_calib()"], capture_output=True, text=True)
        assert r.returncode == 0 and json.loads(r.stdout)["command"] == "calib comass"
