import json

import pytest

from glwire.cli import main, parse_values
from glwire.errors import ConfigError

BASE = """
[domain]
Lx = 1.0
Ly = 1.0
nx = 17
ny = 17
[current]
profile = zero
amplitude = 0
[physics]
kappa = 4
[run]
t_max = 3
"""


@pytest.fixture
def env(tmp_path, monkeypatch):
    monkeypatch.setenv("GLWIRE_OUT", str(tmp_path / "out"))
    return tmp_path


def _cfg(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_zero_current(env, capsys):
    assert main(["run", _cfg(env, BASE)]) == 0
    out = env / "out"
    doc = json.loads((out / "report.json").read_text())
    d = doc["data"]
    # contacts pin psi = 0, so the superconducting fixed point is the mixed kind
    assert d["status"] == "converged" and d["fixed_point"] == "mixed"
    assert d["h1"] == 0.0 and d["h2"] == 0.0
    assert d["identities_relative"]["energy"] < 1e-6
    assert doc["config"]["physics"]["kappa"] == 4.0
    for f in ("centerline.csv", "bn_contours.csv", "regions.json", "Bn.f8", "phin.f8",
              "state_final.bin", "state_final.json"):
        assert (out / f).exists()
    assert main(["report", str(out)]) == 0
    assert "hash=ok" in capsys.readouterr().out


def test_run_aspect_mismatch(env, capsys):
    assert main(["run", _cfg(env, BASE.replace("nx = 17", "nx = 9"))]) == 2
    err = capsys.readouterr().err
    assert "nx" in err and "ny" in err and ":5:" in err


def test_run_blowup(env, capsys):
    text = BASE.replace("profile = zero", "profile = constant").replace("amplitude = 0", "amplitude = 2")
    assert main(["run", _cfg(env, text + "dt_factor = 10\n")]) == 3
    err = capsys.readouterr().err
    assert "tdgl" in err and "at step 1" in err


def test_sweep_empty_values(env):
    assert main(["sweep", _cfg(env, BASE), "--param", "kappa", "--values", ","]) == 2
    assert main(["sweep", _cfg(env, BASE), "--param", "tau", "--values", "1"]) == 2


def test_parse_values():
    assert parse_values("1/8, 0.5,2") == [0.125, 0.5, 2.0]
    with pytest.raises(ConfigError):
        parse_values("1/0")


def test_sweep_delta_rows(env):
    text = BASE.replace("t_max = 3", "t_max = 0.05")
    code = main(["sweep", _cfg(env, text), "--param", "delta", "--values", "0.1,0.3"])
    assert code == 0
    lines = [ln for ln in (env / "out" / "sweep_delta.csv").read_text().splitlines()
             if not ln.startswith("#")]
    assert len(lines) == 3
    assert (env / "out" / "delta_0.1" / "report.json").exists()


def test_spectral_theta0_and_lambda(env, capsys):
    assert main(["spectral", "theta0"]) == 0
    val = float(capsys.readouterr().out.split()[1])
    assert 0.58 <= val <= 0.60
    assert main(["spectral", "lambda", "--h", "0.0625"]) == 0
    rows = [ln for ln in (env / "out" / "spectral.csv").read_text().splitlines()
            if not ln.startswith("#")]
    assert rows[0].startswith("quantity") and len(rows) == 4


def test_report_missing(env):
    assert main(["report", str(env / "none")]) == 2
