"""Harness tests: config round-trips, file outputs, determinism, subcommands."""

import copy
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gaugenoise.cli import (
    CSV_HEADER,
    ConfigError,
    atomic_write_text,
    config_json_text,
    main,
    parse_config,
    read_trajectory_csv,
    resolve_generator_choice,
    serialize_config,
)


def base_doc(out_dir, **overrides):
    doc = {
        "schema_version": 1,
        "model": {"kind": "u1_qlm", "L": 2, "J": 1.0, "mu": 0.5},
        "initial_state": "u1_vacuum",
        "protection": {"V": 0.7, "sequence": "staggered", "generator_kind": "full"},
        "noise": {"gamma": 0.08, "beta": 1.0},
        "time_grid": {"t_max": 2.0, "samples_per_decade": 40},
        "outputs": {"out_dir": str(out_dir), "prefix": "case"},
    }
    for key, val in overrides.items():
        if isinstance(val, dict) and key in doc:
            doc[key] = {**doc[key], **val}
        else:
            doc[key] = val
    return doc


def write_doc(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_config_round_trip(tmp_path):
    doc = base_doc(tmp_path / "out")
    cfg = parse_config(doc)
    assert parse_config(serialize_config(cfg)) == cfg
    text = config_json_text(cfg)
    assert config_json_text(parse_config(json.loads(text))) == text


def test_config_round_trip_explicit_rationals(tmp_path):
    doc = base_doc(
        tmp_path,
        protection={
            "V": 16.0,
            "sequence": [[-1, 1], [1, 1]],
            "generator_kind": "full",
        },
    )
    cfg = parse_config(doc)
    assert cfg.sequence_name is None
    assert serialize_config(cfg)["protection"]["sequence"] == [[-1, 1], [1, 1]]
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_errors_list_fields(tmp_path):
    doc = base_doc(tmp_path)
    del doc["model"]
    doc["noise"]["beta"] = 2.5
    doc["protection"]["generator_kind"] = "half"
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    msg = str(err.value)
    assert "model: missing" in msg
    assert "noise.beta" in msg
    assert "generator_kind" in msg


def test_config_rejects_float_sequence(tmp_path):
    doc = base_doc(tmp_path, protection={"sequence": [[1.5, 1], [1, 1]]})
    with pytest.raises(ConfigError, match="integer"):
        parse_config(doc)


def test_config_sequence_length_mismatch(tmp_path):
    doc = base_doc(tmp_path, protection={"sequence": [[1, 1]]})
    with pytest.raises(ConfigError, match="1 weights for 2 sites"):
        parse_config(doc)


def test_config_pseudo_on_u1_rejected(tmp_path):
    doc = base_doc(tmp_path, protection={"generator_kind": "pseudo"})
    with pytest.raises(ConfigError, match="z2_lgt only"):
        parse_config(doc)


def test_empty_time_grid_rejected(tmp_path):
    doc = base_doc(tmp_path, time_grid={"t_max": 0.0, "samples_per_decade": 40})
    with pytest.raises(ConfigError, match="time_grid.t_max"):
        parse_config(doc)


def test_generator_auto_resolution(tmp_path):
    protected = parse_config(base_doc(tmp_path))
    assert resolve_generator_choice(protected) == "banded"
    free = parse_config(base_doc(tmp_path, protection={"V": 0.0}))
    assert resolve_generator_choice(free) == "jumps"


def test_invalid_json_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1,,}')
    code = main(["run", "--config", str(bad)])
    assert code == 2
    err = capsys.readouterr().err
    assert "config error" in err and "bad.json:1" in err


def test_run_outputs_and_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    cfg_path = write_doc(tmp_path, base_doc(out_a))
    assert main(["run", "--config", cfg_path]) == 0
    assert main(["run", "--config", cfg_path, "--out-dir", str(out_b)]) == 0

    csv_a = (out_a / "case.csv").read_bytes()
    csv_b = (out_b / "case.csv").read_bytes()
    assert csv_a == csv_b
    assert csv_a.decode().splitlines()[0] == CSV_HEADER

    meta = json.loads((out_a / "case.metadata.json").read_text())
    assert meta["schema_version"] == 1
    assert meta["sequence_rationals"] == [[-1, 1], [1, 1]]
    assert meta["generator"] == "banded"
    assert meta["config"]["noise"]["gamma"] == 0.08

    validity = json.loads((out_a / "case.validity.json").read_text())
    assert "max_escape_rate" in validity and "rate_to_gap_ratio" in validity

    cols = read_trajectory_csv(out_a / "case.csv")
    assert cols["t"][0] == 0.0
    assert cols["condensate"] is not None
    assert cols["min_eig"] is None  # banded runs skip positivity sampling
    assert np.all(cols["epsilon"] >= -1e-10)


def test_run_jumps_generator_tracks_positivity(tmp_path):
    out = tmp_path / "out"
    doc = base_doc(out, protection={"V": 0.0})
    assert main(["run", "--config", write_doc(tmp_path, doc)]) == 0
    cols = read_trajectory_csv(out / "case.csv")
    assert cols["min_eig"] is not None
    assert np.min(cols["min_eig"]) > -1e-7


def test_sweep_gamma_fit(tmp_path):
    out = tmp_path / "sweep"
    doc = base_doc(out, protection={"V": 0.0})
    cfg_path = write_doc(tmp_path, doc)
    code = main(
        ["sweep", "--config", cfg_path, "--axis", "gamma", "--values", "0.02,0.04,0.08"]
    )
    assert code == 0
    record = json.loads((out / "case.fit.json").read_text())
    assert record["axis"] == "gamma"
    assert len(record["eps_at_tfix"]) == 3
    assert abs(record["fit"]["exponent"] - 1.0) < 0.15
    for run in record["runs"]:
        assert Path(run["csv"]).exists()


def test_sweep_single_value_no_fit(tmp_path, capsys):
    out = tmp_path / "one"
    cfg_path = write_doc(tmp_path, base_doc(out, protection={"V": 0.0}))
    code = main(
        ["sweep", "--config", cfg_path, "--axis", "gamma", "--values", "0.05"]
    )
    assert code == 0
    assert "fewer than 3" in capsys.readouterr().err
    record = json.loads((out / "case.fit.json").read_text())
    assert "fit" not in record


def test_sweep_worker_pool_matches_serial(tmp_path, monkeypatch):
    serial = tmp_path / "serial"
    pooled = tmp_path / "pooled"
    doc = base_doc(serial, protection={"V": 0.0})
    doc["time_grid"]["t_max"] = 2.0
    cfg = write_doc(tmp_path, doc)
    assert main(["sweep", "--config", cfg, "--axis", "gamma", "--values", "0.02,0.04,0.08"]) == 0
    monkeypatch.setenv("GAUGENOISE_WORKERS", "2")
    assert (
        main(
            [
                "sweep",
                "--config",
                cfg,
                "--out-dir",
                str(pooled),
                "--axis",
                "gamma",
                "--values",
                "0.02,0.04,0.08",
            ]
        )
        == 0
    )
    a = (serial / "case_gamma0.04.csv").read_bytes()
    b = (pooled / "case_gamma0.04.csv").read_bytes()
    assert a == b


def test_validate_reports_compliance(tmp_path, capsys):
    out = tmp_path / "val"
    cfg_path = write_doc(tmp_path, base_doc(out))
    assert main(["validate", "--config", cfg_path]) == 0
    text = capsys.readouterr().out
    assert "noncompliant" in text
    payload = json.loads((out / "case.validate.json").read_text())
    assert payload["compliance"]["compliant"] is False
    assert payload["compliance"]["witness"] is not None
    assert "golden_rule" in payload


def test_validate_compliant_sequence(tmp_path):
    out = tmp_path / "val4"
    doc = base_doc(
        out,
        model={"kind": "u1_qlm", "L": 4, "J": 1.0, "mu": 0.5},
        protection={"V": 32.0, "sequence": "paper-u1-compliant"},
    )
    assert main(["validate", "--config", write_doc(tmp_path, doc)]) == 0
    payload = json.loads((out / "case.validate.json").read_text())
    assert payload["compliance"]["compliant"] is True
    assert payload["compliance"]["witness"] is None


def test_oracle_compare_small_lattice(tmp_path):
    out = tmp_path / "oc"
    doc = base_doc(out, time_grid={"t_max": 5.0, "samples_per_decade": 30})
    assert main(["oracle-compare", "--config", write_doc(tmp_path, doc)]) == 0
    payload = json.loads((out / "case.oracle.json").read_text())
    assert payload["superoperator_max_abs_diff"] < 1e-8
    assert payload["max_violation_diff"] < 1e-6
    assert payload["slope_relative_diff"] < 1e-2


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "x" / "data.txt"
    atomic_write_text(target, "first\n")
    atomic_write_text(target, "second\n")
    assert target.read_text() == "second\n"
    assert list(target.parent.iterdir()) == [target]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gaugenoise", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip()
