import io
import json
import subprocess
import sys

import pytest

from utcsolve.cli import check_main, main

from conftest import CLOSING, THREE_LABELS, ALL_ONES, HALVING, SMALL_UNSAT


@pytest.fixture
def write(tmp_path):
    def _write(text, name="sys.utc"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write


def test_sat_exit_and_certificate(write, tmp_path, capsys):
    cert = tmp_path / "c.json"
    assert main([write(ALL_ONES), "--cert", str(cert)]) == 0
    assert capsys.readouterr().out.startswith("sat")
    doc = json.loads(cert.read_text())
    assert doc["verdict"] == "sat"
    assert check_main([str(cert)]) == 0


def test_unsat_exit(write, tmp_path, capsys):
    cert = tmp_path / "u.json"
    assert main([write(SMALL_UNSAT), "--explain", "--cert", str(cert)]) == 1
    out = capsys.readouterr().out
    assert out.startswith("unsat") and "0 >= 1" in out
    assert check_main([str(cert)]) == 0


def test_unknown_exit(write, capsys):
    assert main([write(HALVING), "--forbid-infinity", "all", "--max-steps", "1"]) == 2
    assert capsys.readouterr().out.startswith("unknown")


@pytest.mark.parametrize("text", ["x >= @(y)", "2 x >= y", "labels: l\nr x >= x", "x >>= y"])
def test_input_errors(write, text, capsys):
    assert main([write(text)]) == 64
    assert "utc-solve:" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main([str(tmp_path / "absent.utc")]) == 64


def test_bad_forbid_list(write):
    assert main([write(ALL_ONES), "--forbid-infinity", "q"]) == 64


def test_forbid_some(write, capsys):
    assert main([write(CLOSING), "--forbid-infinity", "y", "--max-steps", "4"]) == 0


def test_stdin(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO(ALL_ONES))
    assert main(["-"]) == 0


def test_dump_normal_form(write, capsys):
    assert main([write(HALVING), "--dump-normal-form"]) == 0
    out = capsys.readouterr().out
    assert "# level 1" in out and "l x <= 1/2 * x" in out


def test_dump_automata(write, capsys):
    assert main([write(THREE_LABELS), "--dump-automata"]) == 0
    out = capsys.readouterr().out
    assert "digraph lower_x" in out and "digraph upper_x" in out


def test_tampered_certificate(write, tmp_path, capsys):
    cert = tmp_path / "c.json"
    main([write(ALL_ONES), "--cert", str(cert)])
    doc = json.loads(cert.read_text())
    doc["sat"]["scheme"]["table"][0][2] = "0"
    cert.write_text(json.dumps(doc))
    assert check_main([str(cert)]) == 1
    assert "INVALID" in capsys.readouterr().out


def test_console_script(write):
    r = subprocess.run([sys.executable, "-m", "utcsolve.cli", write(SMALL_UNSAT)], capture_output=True, text=True)
    assert r.returncode == 1 and r.stdout.strip() == "unsat"
