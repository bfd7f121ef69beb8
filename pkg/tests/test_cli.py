import json
import os

import numpy as np
import pytest

from horizonwave import cli


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_defaults_without_config():
    cfg = cli.parse_config(None)
    assert cfg["model"]["ell"] == 2
    assert cfg["discretization"]["scheme"] == "collocation"
    assert cfg["window"] is None


def test_config_parse_and_overrides(tmp_path):
    path = _write(tmp_path, """
# comment
[model]
mass = 1.0
ell = 3
[discretization]
n = 48
[scan]
h_list = 1.0, 0.5
""")
    cfg = cli.parse_config(path)
    assert cfg["model"]["ell"] == 3
    assert cfg["discretization"]["n"] == 48
    assert cfg["scan"]["h_list"] == [1.0, 0.5]
    # untouched section keeps defaults
    assert cfg["band"]["b"] == 2.0


def test_config_errors_carry_line_numbers(tmp_path):
    with pytest.raises(cli.ConfigError, match="line 2"):
        cli.parse_config(_write(tmp_path, "\n[nosuch]\n"))
    with pytest.raises(cli.ConfigError, match="line 3"):
        cli.parse_config(_write(tmp_path, "\n[model]\nbogus = 1\n"))
    with pytest.raises(cli.ConfigError, match="line 3"):
        cli.parse_config(_write(tmp_path, "\n[model]\nmass = pear\n"))
    with pytest.raises(cli.ConfigError, match="outside"):
        cli.parse_config(_write(tmp_path, "mass = 1\n"))


def test_config_validation_rules(tmp_path):
    with pytest.raises(cli.ConfigError, match="scheme"):
        cli.parse_config(_write(tmp_path, "[discretization]\nscheme = magic\n"))
    with pytest.raises(cli.ConfigError, match="band"):
        cli.parse_config(_write(tmp_path, "[band]\na = 3.0\nb = 1.0\n"))


def test_bad_config_exit_code(tmp_path):
    path = _write(tmp_path, "[model]\nlam = -1\n")
    assert cli.main(["qnm", "--config", path,
                     "--out", str(tmp_path / "o")]) == 1


def test_qnm_pipeline_writes_outputs(tmp_path):
    path = _write(tmp_path, "[discretization]\nn = 48\n")
    out = tmp_path / "qnm"
    assert cli.main(["qnm", "--config", path, "--out", str(out)]) == 0
    body = (out / "resonances.csv").read_text().splitlines()
    assert body[0] == "re,im,residual,converged"
    assert len(body) > 1
    assert (out / "plot_qnm.py").exists()
    # fundamental pair present among converged rows
    rows = [ln.split(",") for ln in body[1:]]
    conv = np.array([[float(r[0]), float(r[1])] for r in rows if r[3] == "1"])
    assert np.min(np.abs(conv[:, 0] - 0.4371069) + np.abs(conv[:, 1] + 0.0768540)) < 1e-4


def test_decay_pipeline_writes_report(tmp_path):
    path = _write(tmp_path,
                  "[discretization]\nn = 48\n[decay]\nt_final = 50\n")
    out = tmp_path / "decay"
    assert cli.main(["decay", "--config", path, "--out", str(out)]) == 0
    rep = json.loads((out / "decay.json").read_text())
    assert np.isfinite(rep["log_constant"])
    assert rep["exp_rate"] < 0.0
