import csv
import io
import json
from importlib import resources

import numpy as np
import pytest

from dirac_spec.potential import PotentialSpec
from dirac_spec.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, run

DATA = resources.files("dirac_spec") / "data"


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# dirac-spec ")
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


def test_demo_matches_expected(tmp_path):
    cfg = str(DATA / "demo_solve.json")
    assert run(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    head, rows = read_csv(tmp_path / "solve.csv")
    exp_lines = (DATA / "demo_solve_expected.csv").read_text().splitlines()
    assert head == exp_lines[0]
    expected = list(csv.DictReader(io.StringIO("\n".join(exp_lines[1:]))))
    assert len(rows) == len(expected) == 1
    for got, want in zip(rows, expected):
        assert abs(float(got["re_z"]) - float(want["re_z"])) < 1e-10
        assert abs(float(got["im_z"])) < 1e-10
        assert got["multiplicity"] == want["multiplicity"]
    report = json.loads((tmp_path / "solve.json").read_text())
    assert report["complete"] and report["manifest"]["command"] == "solve"


def test_reruns_are_identical(tmp_path):
    cfg = str(DATA / "demo_solve.json")
    a, b = tmp_path / "a", tmp_path / "b"
    run(["solve", "--config", cfg, "--out", str(a)])
    run(["solve", "--config", cfg, "--out", str(b)])
    assert (a / "solve.csv").read_text() == (b / "solve.csv").read_text()


def test_zero_potential_gives_header_only(tmp_path):
    cfg = write(tmp_path, {"m": 1.0, "potential": {"dimension": 2, "kind": "zero", "support": [0, 1]}})
    assert run(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "solve.csv")
    assert rows == []


def test_malformed_json_reports_position(tmp_path, capsys):
    cfg = write(tmp_path, '{"m": 1.0,\n  "epsilon": }')
    assert run(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err
    assert not (tmp_path / "solve.json").exists()


def test_config_errors(tmp_path, capsys):
    cfg = write(tmp_path, {"epsilon": 0.3})
    assert run(["solve", "--config", cfg]) == EXIT_CONFIG
    assert "m" in capsys.readouterr().err
    cfg = write(tmp_path, {"a": 1.0, "theta": 4.0, "potential": {"dimension": 4, "kind": "zero", "support": [0, 1]}})
    assert run(["waveguide", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        run(["solve", "--config", "x.json", "--bogus"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run(["nonsense", "--config", "x.json"])
    assert exc.value.code == EXIT_USAGE


def test_enclose_disks_only(tmp_path):
    cfg = write(tmp_path, {"m": 1.0, "v1": 0.5})
    assert run(["enclose", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "enclose.json").read_text())
    assert rep["disks"]["valid"] and rep["status"] == "ok"


def test_dwe_command(tmp_path):
    a1 = PotentialSpec.gaussian([[1.0]], 0.0, 0.5).to_dict()
    cfg = write(tmp_path, {"a0": 0.7, "q0": 2.3, "eps": [0.6], "a1": a1})
    assert run(["dwe", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "dwe.csv")
    lam = [complex(float(r["re_lambda"]), float(r["im_lambda"])) for r in rows]
    assert len(lam) == 2 and abs(lam[0] - lam[1].conjugate()) < 1e-9
    assert any(abs(z - (-0.88594414 + 1.37086398j)) < 1e-7 for z in lam)
