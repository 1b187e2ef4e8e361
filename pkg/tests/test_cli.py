import json

import pytest

from uscsim.cli import main, to_json
from uscsim.version import __version__


def _spec(tmp_path, data, name="spec.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


QRM = {"model": "QRM", "qubit_freq": 1.0, "mode_freq": 1.0, "coupling": 0.0}


def test_header_and_zero_coupling_ground_energy(tmp_path, capsys):
    code, out, _ = _run(capsys, "spectrum", "--spec", _spec(tmp_path, QRM), "--nmax", "5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith(f"# uscsim {__version__} config=")
    config = json.loads(lines[0].split("config=", 1)[1])
    assert config["nmax"] == 5
    assert lines[1] == "index,energy,parity"
    assert float(lines[2].split(",")[1]) == pytest.approx(-0.5, abs=1e-15)


def test_output_is_byte_identical(tmp_path, capsys):
    spec = _spec(tmp_path, dict(QRM, coupling=0.7))
    a = _run(capsys, "spectrum", "--spec", spec, "--nmax", "20")[1]
    b = _run(capsys, "spectrum", "--spec", spec, "--nmax", "20")[1]
    assert a == b


def test_regime_in_json(tmp_path, capsys):
    code, out, _ = _run(capsys, "spectrum", "--spec", _spec(tmp_path, dict(QRM, coupling=1.34)),
                        "--nmax", "30", "--format", "json")
    assert code == 0
    doc = json.loads(out.split("\n", 1)[1])
    assert doc["regime"] == "perturbative-DSC"
    assert doc["coupling_ratio"] == pytest.approx(1.34)


def test_dry_run_prints_plan_only(tmp_path, capsys):
    code, out, _ = _run(capsys, "trotter", "--spec", _spec(tmp_path, QRM), "--dry-run", "--jobs", "3")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("# plan: run trotter")
    assert "jobs=3" in lines[1]


def test_malformed_json_is_a_parse_error(tmp_path, capsys):
    code, _, err = _run(capsys, "spectrum", "--spec", _spec(tmp_path, '{"model": "QRM",\n  oops}'))
    assert code == 2
    assert "line 2" in err


def test_unknown_subcommand_and_missing_file(tmp_path, capsys):
    assert _run(capsys, "frobnicate")[0] == 2
    assert _run(capsys, "spectrum", "--spec", str(tmp_path / "missing.json"))[0] == 2


def test_precondition_failures_exit_4(tmp_path, capsys):
    # an off-resonant probe cannot be mapped onto an effective Rabi model
    driven = {"model": "DrivenJC", "qubit_freq": 10.0, "mode_freq": 10.0, "coupling": 0.1,
              "carrier_amp": 0.1, "carrier_freq": 9.9, "probe_amp": 0.05, "probe_freq": 9.0}
    code, _, err = _run(capsys, "analog-compare", "--spec", _spec(tmp_path, driven), "--nmax", "4")
    assert code == 4
    assert "precondition" in err
    code, _, _ = _run(capsys, "trotter", "--spec", _spec(tmp_path, driven, "d.json"))
    assert code == 4


def test_nmax_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("USCSIM_NMAX", "3")
    out = _run(capsys, "spectrum", "--spec", _spec(tmp_path, dict(QRM, levels=100)))[1]
    assert len(out.splitlines()) == 2 + 8
    # the command line wins over the environment
    out = _run(capsys, "spectrum", "--spec", _spec(tmp_path, dict(QRM, levels=100)), "--nmax", "2")[1]
    assert len(out.splitlines()) == 2 + 6
    monkeypatch.setenv("USCSIM_NMAX", "many")
    assert _run(capsys, "spectrum", "--spec", _spec(tmp_path, QRM))[0] == 2


def test_tables_report_convention_conflict(tmp_path, capsys):
    code, out, _ = _run(capsys, "tables", "--spec", _spec(tmp_path, {"table": "table1"}))
    assert code == 0
    doc = json.loads(out.split("\n", 1)[1])
    assert doc["convention"] == "C1"
    assert doc["convention_conflict"] is True


def test_trotter_jobs_do_not_change_output(tmp_path, capsys):
    spec = _spec(tmp_path, dict(QRM, coupling=0.8, steps=[4, 8, 16]))
    serial = _run(capsys, "trotter", "--spec", spec, "--nmax", "15")[1]
    parallel = _run(capsys, "trotter", "--spec", spec, "--nmax", "15", "--jobs", "2")[1]
    assert serial.splitlines()[1:] == parallel.splitlines()[1:]


def test_out_file_and_circuit(tmp_path, capsys):
    target = tmp_path / "o.csv"
    spec = _spec(tmp_path, {"formula": "inductances", "params": {"critical_current": 1e-6}})
    assert _run(capsys, "circuit", "--spec", spec, "--out", str(target))[0] == 0
    text = target.read_text()
    assert "result.josephson,3.29" in text


def test_dynamics_and_master(tmp_path, capsys):
    spec = _spec(tmp_path, dict(QRM, coupling=0.1, t1=5.0, n_steps=10, observable="photons"))
    code, out, _ = _run(capsys, "dynamics", "--spec", spec, "--nmax", "6")
    assert code == 0
    assert float(out.splitlines()[2].split(",")[1]) == pytest.approx(0.0)
    spec = _spec(tmp_path, {"model": dict(QRM, coupling=0.5), "form": "dressed", "levels": 8}, "m.json")
    code, out, _ = _run(capsys, "master", "--spec", spec, "--nmax", "20", "--format", "json")
    doc = json.loads(out.split("\n", 1)[1])
    assert doc["ground_population"] == pytest.approx(1.0, abs=1e-9)
    assert doc["steady_flux"] == pytest.approx(0.0, abs=1e-12)


def test_json_writer_is_sorted_and_handles_non_finite():
    assert to_json({"b": 1.0, "a": [float("nan"), 2]}) == '{\n  "a": [null, 2],\n  "b": 1\n}'
