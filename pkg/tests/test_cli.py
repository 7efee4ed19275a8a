import json
import subprocess
import sys

import pytest

from qcurve.cli import main, parse_complex, parse_divisor
from qcurve.exact_core import parse


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_times(capsys, curves_dir):
    for spec in ("painleve1", str(curves_dir / "painleve1.curve")):
        code, r = run(capsys, "times", "--curve", spec)
        assert code == 0 and r["schema"] == "qcurve.report/1"
        assert r["times"] == {"t[oo,1]": "3*u^2", "t[oo,5]": "-2"}
        assert r["periods"]["B[oo,1]"] == "-2*u^3"


def test_gd(capsys):
    code, r = run(capsys, "gd", "--k", "2")
    assert code == 0 and r["R"] == "3*U^2 - (1/2)*h^2*U''"


def test_expressions_roundtrip(capsys):
    _, r = run(capsys, "omega", "--curve", "painleve1", "--g", "1", "--n", "1")
    assert str(parse(r["expr"])) == r["expr"]
    _, r = run(capsys, "wkb", "--curve", "painleve1", "--order", "1")
    assert r["ok"] and all(str(parse(v)) == v for v in r["A"])


@pytest.mark.parametrize("argv", [
    ["check-loop", "--curve", "finite_pole", "--max-chi", "1"],
    ["check-pl", "--curve", "finite_pole_family", "--max-chi", "1"],
    ["check-pde", "--curve", "painleve1", "--divisor", "[a]+[b]-[c]-[d]", "--order", "1"],
    ["check-reduced", "--curve", "airy", "--order", "1"],
    ["zero-curvature", "--m", "2", "--order", "2"],
    ["quantum-curve", "--painleve"],
    ["kernel-pde", "--curve", "airy", "--order", "1"],
    ["det-identity", "--order", "2"],
    ["elliptic-dict", "--nu", "7/10+1/5*i", "--tau", "1/10+11/10*i"],
    ["accept", "--only", "1,9", "--quiet"],
])
def test_passing_checks(capsys, argv):
    code, r = run(capsys, *argv)
    assert code == 0 and r["ok"] is True


@pytest.mark.parametrize("argv", [
    ["times", "--curve", "no_such_curve"],
    ["check-pde", "--curve", "airy", "--divisor", "[a]+[b]"],
    ["check-pde", "--curve", "airy", "--divisor", "a-b"],
    ["elliptic-dict", "--nu", "1", "--tau", "1/2"],
    ["elliptic-dict", "--nu", "x", "--tau", "i"],
    ["omega", "--curve", "airy", "--g", "1", "--n", "0"],
])
def test_input_errors(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 2


def test_bad_curve_file(tmp_path, capsys):
    f = tmp_path / "bad.curve"
    f.write_text('[curve]\nname = bad\nparameters = ""\nx = "z^3"\ny = "z"\n')
    assert run(capsys, "times", "--curve", str(f))[0] == 2


def test_failed_check_exit_code(capsys, monkeypatch):
    from qcurve import isomonodromy as iso

    monkeypatch.setattr(iso, "kernel_pde_check", lambda K, c: {"ok": False, "residual": [iso.U(0)]})
    code, r = run(capsys, "kernel-pde")
    assert code == 1 and r["ok"] is False and r["residual"] == ["U0"]


def test_output_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["--output", str(out), "gd", "--k", "1"]) == 0
    assert json.loads(out.read_text())["expr"] == "-2*U0"


def test_parsers():
    assert parse_complex("7/10+1/5*i") == complex(0.7, 0.2)
    assert parse_complex("-i") == complex(0, -1)
    assert parse_divisor("2[a]-[b]-[c]").weights == (2, -1, -1)


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "qcurve", "gd", "--k", "1"], capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["command"] == "gd"
