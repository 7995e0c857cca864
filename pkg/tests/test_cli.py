from __future__ import annotations

import json

import pytest

from esdgsem.cli import (
    EXIT_ADMISSIBILITY,
    EXIT_CONFIG,
    EXIT_OK,
    load_config,
    main,
    parse_ini,
)
from esdgsem.errors import ConfigurationError
from esdgsem.presets import PRESET_NAMES, preset
from esdgsem.presets import RP1_LEFT, RP1_RIGHT


def test_presets_valid():
    for name in PRESET_NAMES:
        preset(name).validate()
    with pytest.raises(ConfigurationError):
        preset("rp9")


def test_rp1_preset_matches_experiment():
    c = preset("rp1")
    assert (c.system, c.degree, c.n_cells, c.t_final, c.limiter) == ("baer_nunziato", 3, 100, 0.14, True)
    assert c.system_params == {"kappa": 1.0, "gamma1": 3.0, "gamma2": 1.5}
    assert c.initial["left"] == [0.1, 0.85, 0.4609513139, 0.96, 0.0839315299]
    assert c.initial["left"] == RP1_LEFT and c.initial["right"] == RP1_RIGHT
    rp0 = preset("rp0")
    assert (rp0.system, rp0.degree, rp0.n_cells, rp0.t_final) == ("ld2x2", 1, 250, 0.15)
    assert rp0.initial["left"] == [3.0, 0.5] and rp0.initial["right"] == [0.75, 1.0]
    rp3 = preset("rp3")
    assert rp3.system_params == {"kappa": 1.0e5, "gamma1": 1.4, "gamma2": 1.4} and rp3.t_final == 0.08


def test_ini_config(tmp_path):
    text = """[run]
preset = rp1
n_cells = 20
t_final = 0.01
limiter = off

[system]
kappa = 2.0
"""
    c = parse_ini(text)
    assert c.n_cells == 20 and c.t_final == 0.01 and c.limiter is False
    assert c.system_params == {"kappa": 2.0}
    assert c.initial == preset("rp1").initial


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("[run]\nsystem = burgers\nn_cells = ten\n", "run.n_cells", 3),
        ("[run]\nsystem = burgers\n\n[system]\nkappa = x\n", "system.kappa", 5),
        ("[run]\ncolour = red\n", "run.colour", 2),
        ("[initial]\nkind = riemann\nleft = 1, a\n", "initial.left", 3),
    ],
)
def test_config_error_key_and_line(tmp_path, capsys, text, key, line):
    with pytest.raises(ConfigurationError) as info:
        parse_ini(text)
    assert info.value.key == key and info.value.line == line
    path = tmp_path / "bad.ini"
    path.write_text(text)
    assert main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert key in err and f"line {line}" in err


def test_unknown_config_source():
    with pytest.raises(ConfigurationError):
        load_config("no-such-file.ini")


def small_run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["run", "bn-advection", "--N", "12", "--tfinal", "0.01", "--out-dir", str(out), *extra])
    return code, out


def test_run_outputs(tmp_path):
    code, out = small_run(tmp_path, "a")
    assert code == EXIT_OK
    files = sorted(p.name for p in out.iterdir())
    assert files == ["diagnostics.csv", "manifest.json", "snapshot_0000.csv"]
    header = (out / "snapshot_0000.csv").read_text().splitlines()[0].split(",")
    assert header[:6] == ["x", "alpha1", "alpha1_rho1", "alpha1_rho1_u1", "alpha2_rho2", "alpha2_rho2_u2"]
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("step,t,dt,total_entropy")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["t"] == 0.01
    assert {"config", "version", "wall_time"} <= set(manifest)


def test_outputs_byte_identical(tmp_path):
    _, a = small_run(tmp_path, "a", "--limiter", "on")
    _, b = small_run(tmp_path, "b", "--limiter", "on")
    for name in ("snapshot_0000.csv", "diagnostics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    ma.pop("wall_time"), mb.pop("wall_time")
    assert ma == mb


def test_manifest_round_trip(tmp_path):
    _, a = small_run(tmp_path, "a")
    config = load_config(str(a / "manifest.json"))
    assert config == preset("bn-advection").replace(n_cells=12, t_final=0.01)
    assert main(["run", str(a / "manifest.json"), "--out-dir", str(tmp_path / "b")]) == EXIT_OK
    assert (a / "snapshot_0000.csv").read_bytes() == (tmp_path / "b" / "snapshot_0000.csv").read_bytes()


def test_admissibility_abort(tmp_path):
    out = tmp_path / "rp0"
    code = main(["run", "rp0", "--mode", "original_dgsem", "--out-dir", str(out)])
    assert code == EXIT_ADMISSIBILITY
    failure = json.loads((out / "failure.json").read_text())
    assert failure["error"] == "AdmissibilityError"
    assert json.loads((out / "manifest.json").read_text())["status"] == "admissibility_abort"
    assert (out / "snapshot_0000.csv").exists()


def test_audit_deterministic(capsys):
    args = ["audit", "baer_nunziato", "ec", "--samples", "5000", "--seed", "7", "--beta", "2"]
    assert main(args) == EXIT_OK
    first = capsys.readouterr().out
    assert main(args) == EXIT_OK
    assert capsys.readouterr().out == first
    assert "result pass" in first


def test_audit_failure_verdict():
    from esdgsem.diagnostics import AUDIT_TOLERANCES, FluxAudit

    audit = FluxAudit("ld2x2", "ld2x2_ec", 1, 0, 1e-6, 0.0, 0.0, 0.0, True, dict(AUDIT_TOLERANCES))
    assert not audit.passed and audit.report().endswith("result fail\n")
    audit = FluxAudit("ld2x2", "ld2x2_es", 1, 0, 1.0, -1e-6, 0.0, 0.0, False, dict(AUDIT_TOLERANCES))
    assert not audit.passed


def test_audit_unknown_system(capsys):
    assert main(["audit", "maxwell", "ec", "--samples", "10"]) == EXIT_CONFIG


def test_converge_command(capsys):
    cfg = ["converge", "rp0", "--levels", "8", "16", "--reference", "32", "--tfinal", "0.01"]
    assert main(cfg) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "N,l1,l2,linf" and lines[-1].startswith("order,")
