import csv
import io
import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kerrlhz.cli import main
from kerrlhz.io import ConfigError, Field, config_hash, csv_text, format_float, json_text, validate, write_atomic


def _run(tmp_path, capsys, experiment, config=None, extra=()):
    argv = []
    if config is not None:
        path = tmp_path / f"{experiment}.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config, indent=2))
        argv = ["--config", str(path)]
    prefix = str(tmp_path / "run")
    code = main([experiment, *argv, "--out", prefix, *extra])
    captured = capsys.readouterr()
    return code, prefix, captured


def _rows(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("".join(lines))))


# --- io helpers -----------------------------------------------------------------

@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


def test_csv_text_layout():
    text = csv_text(["a", "b", "c"], [[1, 0.1, True], [np.int64(2), np.float64(1e-300), "x"]], comments=["note"])
    assert text == "# note\na,b,c\n1,0.1,true\n2,1e-300,x\n"


def test_json_text_sorted_and_plain():
    text = json_text({"b": np.float64(0.5), "a": np.arange(2), "c": 1 + 2j})
    assert json.loads(text) == {"a": [0, 1], "b": 0.5, "c": [1.0, 2.0]}
    assert text.index('"a"') < text.index('"b"')


def test_validate_reports_key_and_line():
    schema = {"x": Field((int,), 1), "y": Field((float,), 0.5)}
    text = '{\n  "x": 2,\n  "bogus": 3\n}'
    with pytest.raises(ConfigError) as exc:
        validate(json.loads(text), schema, text)
    assert exc.value.key == "bogus" and exc.value.line == 3
    with pytest.raises(ConfigError):
        validate({"x": "two"}, schema)
    assert validate({}, schema) == {"x": 1, "y": 0.5}
    with pytest.raises(ConfigError):
        validate({"x": True}, schema)  # booleans are not integers


def test_write_atomic_replaces_file(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old")
    write_atomic(str(path), "new")
    assert path.read_text() == "new"
    assert sorted(os.listdir(tmp_path)) == ["out.txt"]


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# --- CLI ------------------------------------------------------------------------

def test_invalid_key_exit_status(tmp_path, capsys):
    code, _, cap = _run(tmp_path, capsys, "gap-stats", '{\n  "n_instances": 1,\n  "bogus": 2\n}')
    assert code == 2
    assert "bogus" in cap.err and "line 3" in cap.err


def test_invalid_json_exit_status(tmp_path, capsys):
    code, _, cap = _run(tmp_path, capsys, "coeffs", "{ not json")
    assert code == 2


def test_dimension_cap_exit_status(tmp_path, capsys):
    code, _, cap = _run(tmp_path, capsys, "lhz-anneal", {"dim": 12}, extra=["--dim-cap", "100"])
    assert code == 3
    assert "cap" in cap.err


def test_cat_adiabatic_row_count(tmp_path, capsys):
    cfg = {"T_ns": 40.0, "tau_ns": 25.0, "dim": 10}
    code, prefix, cap = _run(tmp_path, capsys, "cat-adiabatic", cfg)
    assert code == 0
    rows = _rows(prefix + "_observables.csv")
    assert rows[0] == ["t_ns", "n_avg", "P_e", "P_f", "fidelity"]
    assert len(rows) - 1 == 200
    manifest = json.loads(cap.out)
    assert manifest["experiment"] == "cat-adiabatic" and len(manifest["config_sha256"]) == 64
    state = json.loads(open(prefix + "_final_state.json").read())
    assert state["dims"] == [3, 10]


def test_gap_stats_rows_per_scheme(tmp_path, capsys):
    cfg = {"n_instances": 2, "C_values": [3.0]}
    code, prefix, _ = _run(tmp_path, capsys, "gap-stats", cfg, extra=["--seed", "4"])
    assert code == 0
    rows = _rows(prefix + "_gap_stats.csv")
    assert rows[0] == ["seed", "C_over_J", "scheme", "protocol", "gap_min"]
    body = rows[1:]
    for combo in (("lhz3", "ramp"), ("lhz4", "ramp"), ("lhz4", "always-on")):
        assert sum((r[2], r[3]) == combo for r in body) == 2
    assert {r[0] for r in body} == {"4", "5"}


def test_gap_stats_byte_identical_reruns(tmp_path, capsys):
    cfg = {"n_instances": 2, "C_values": [1.5, 3.0]}
    _run(tmp_path, capsys, "gap-stats", cfg)
    first = open(str(tmp_path / "run") + "_gap_stats.csv", "rb").read()
    _run(tmp_path, capsys, "gap-stats", cfg)
    assert open(str(tmp_path / "run") + "_gap_stats.csv", "rb").read() == first


def test_gap_stats_worker_count_does_not_change_output(tmp_path, capsys, monkeypatch):
    cfg = {"n_instances": 3, "C_values": [3.0]}
    _run(tmp_path, capsys, "gap-stats", cfg)
    serial = open(str(tmp_path / "run") + "_gap_stats.csv", "rb").read()
    monkeypatch.setenv("KERRLHZ_WORKERS", "2")
    _run(tmp_path, capsys, "gap-stats", cfg)
    assert open(str(tmp_path / "run") + "_gap_stats.csv", "rb").read() == serial


def test_spectrum_outputs(tmp_path, capsys):
    cfg = {"C_over_J": 3.0, "scheme": "lhz4", "k": 4, "n_s": 11}
    code, prefix, _ = _run(tmp_path, capsys, "spectrum", cfg, extra=["--seed", "1"])
    assert code == 0
    rows = _rows(prefix + "_spectrum.csv")
    assert rows[0] == ["s", "E_0", "E_1", "E_2", "E_3"] and len(rows) == 12
    mapping = json.loads(open(prefix + "_mapping.json").read())
    assert len(mapping["physical_spins"]) == 6 and mapping["constraint_offset"] == -9.0


def test_spectrum_rejects_unknown_scheme(tmp_path, capsys):
    code, _, _ = _run(tmp_path, capsys, "spectrum", {"scheme": "lhz5"})
    assert code == 2


def test_coeffs_record(tmp_path, capsys):
    code, prefix, _ = _run(tmp_path, capsys, "coeffs")
    assert code == 0
    rec = json.loads(open(prefix + "_coeffs.json").read())
    for key in ("S_GHz", "K_GHz", "P_GHz", "alpha", "J123_GHz", "Kj_GHz", "Kjk_GHz"):
        assert key in rec
    assert rec["K_GHz"] == pytest.approx(4.5e-4, rel=5e-3)


def test_wigner_output_has_convention_header(tmp_path, capsys):
    cfg = {"n_points": 5, "state": {"kind": "odd_cat", "dim": 20}}
    code, prefix, _ = _run(tmp_path, capsys, "wigner", cfg)
    assert code == 0
    first = open(prefix + "_wigner.csv").readline()
    assert first.startswith("# x=(a+a^dag)/sqrt2")
    rows = _rows(prefix + "_wigner.csv")
    assert len(rows) == 1 + 25
    centre = [r for r in rows[1:] if float(r[0]) == 0.0 and float(r[1]) == 0.0]
    assert float(centre[0][2]) < 0


def test_circuit_spectrum_outputs(tmp_path, capsys):
    cfg = {"n_flux": 3, "flux_start": 0.49, "flux_stop": 0.51}
    code, prefix, cap = _run(tmp_path, capsys, "circuit-spectrum", cfg)
    assert code == 0
    rows = _rows(prefix + "_circuit_spectrum.csv")
    assert rows[0][0] == "f" and len(rows) == 4
