import json
import shutil
import subprocess

import numpy as np
import pytest

from bolab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from bolab.solver import load_trajectory


def write_config(path, **fields):
    path.write_text(json.dumps(dict(version=1, **fields)))
    return str(path)


def test_solve_zero_data(tmp_path):
    out = tmp_path / "z.bolab"
    assert main(["solve", "--u0", "zero", "--N", "16", "--T", "0.1", "--dt", "0.05", "--out", str(out)]) == EXIT_OK
    tr = load_trajectory(out)
    assert np.all(tr.coeffs == 0) and len(tr) == 3


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path / "c.json", command="solve", N=32, T=0.2, dt=0.1, u0="cos")
    out = tmp_path / "t.bolab"
    assert main(["solve", "--config", cfg, "--N", "16", "--out", str(out)]) == EXIT_OK
    tr = load_trajectory(out)
    assert tr.grid.num_modes == 16
    assert tr.times[-1] == pytest.approx(0.2)


@pytest.mark.parametrize("body,needle", [
    ('{"version": 1, "N": 16,\n  "T": }', ":2:"),
    ('{"version": 2}', "version"),
    ('{"version": 1, "colour": 3}', "unknown"),
    ('{"version": 1, "command": "strichartz"}', "not"),
    ('[1, 2]', "object"),
])
def test_bad_configs_are_usage_errors(tmp_path, capsys, body, needle):
    p = tmp_path / "bad.json"
    p.write_text(body)
    assert main(["solve", "--config", str(p)]) == EXIT_USAGE
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["solve", "--N", "seven"]) == EXIT_USAGE
    assert main(["solve", "--N", "7", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["strichartz", "--p", "6", "--out", str(tmp_path / "s")]) == EXIT_USAGE
    assert main(["solve", "--u0", "noise", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["solve", "--threads", "0", "--out", str(tmp_path / "x")]) == EXIT_USAGE


def test_threads_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("BOLAB_THREADS", "many")
    assert main(["solve", "--u0", "zero", "--N", "16", "--T", "0.1", "--out", str(tmp_path / "a")]) == EXIT_USAGE
    monkeypatch.setenv("BOLAB_THREADS", "1")
    assert main(["solve", "--u0", "zero", "--N", "16", "--T", "0.1", "--out", str(tmp_path / "a")]) == EXIT_OK


def test_gauge_check(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gauge-check", "--N", "32", "--T", "0.1", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert all(o >= 1.9 for o in d["orders"])
    assert main(["gauge-check", "--N", "32", "--T", "0.1", "--unphased", "--out", str(out)]) == EXIT_FAIL


def test_verify_lattice(tmp_path):
    out = tmp_path / "l.json"
    assert main(["verify-lattice", "--max-freq", "8", "--M", "2", "--limit", "forms=6", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert d["passed"] and d["checks"]["m3_11_forms"]["max_freq"] == 6
    assert main(["verify-lattice", "--limit", "nonsense", "--out", str(out)]) == EXIT_USAGE


def test_scan_reruns_are_byte_identical(tmp_path):
    args = ["strichartz", "--u0", "packet", "--band", "8", "--N", "32", "--T", "0.1", "--format", "csv"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert a.startswith(b"scan_type,seed,N,s,delta_or_p,t_or_band,value,comparator,ratio\n")
    assert not (tmp_path / "a.json").exists()


def test_difference_pair(tmp_path):
    out = tmp_path / "d"
    assert main(["difference", "--N", "32", "--T", "0.5", "--samples", "5",
                 "--pair", "IFRK4:0.01", "IFMidpoint:0.01", "--out", str(out)]) == EXIT_OK
    rep = json.loads((tmp_path / "d.json").read_text())
    assert rep["config"]["configs"][1]["scheme"] == "IFMidpoint"
    assert main(["difference", "--pair", "IFRK4", "IFRK4:0.01", "--out", str(out)]) == EXIT_USAGE


def test_nf_residual_small(tmp_path):
    out = tmp_path / "nf.json"
    code = main(["nf-residual", "--T", "0.05", "--store-every", "16", "--tol", "1e-3", "--out", str(out)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["passed"]


@pytest.mark.skipif(shutil.which("bolab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["bolab", "solve", "--u0", "zero", "--N", "16", "--T", "0.1",
                        "--out", str(tmp_path / "z.bolab")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run(["bolab", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "verify-lattice" in r.stdout
