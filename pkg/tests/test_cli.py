import json
import os
import subprocess
import sys

import jsonschema
import pytest

from ohjb.cli import EXIT_CONFIG, EXIT_IO, EXIT_USAGE, main
from ohjb.io import SUMMARY_SCHEMA


def _short_config(tmp_path, **extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"t_max": 20.0, **extra}))
    return p


def test_single_run_writes_outputs(tmp_path):
    out = tmp_path / "results"
    rc = main(["--algo", "ohjb", "--seed", "7", "--out", str(out),
               "--config", str(_short_config(tmp_path))])
    assert rc == 0
    assert (out / "series.csv").is_file()
    doc = json.loads((out / "summary.json").read_text())
    jsonschema.validate(doc, SUMMARY_SCHEMA)
    assert doc["seed"] == 7 and doc["algo"] == "ohjb"
    assert not (out / "trajectory.svg").exists()


def test_svg_flag(tmp_path):
    out = tmp_path / "r"
    assert main(["--seed", "1", "--svg", "--out", str(out),
                 "--config", str(_short_config(tmp_path))]) == 0
    assert (out / "trajectory.svg").is_file()


def test_batch_aggregates_recomputable(tmp_path):
    out = tmp_path / "b"
    rc = main(["--algo", "ahjb", "--no-power-control", "--seeds", "3", "--out", str(out),
               "--config", str(_short_config(tmp_path))])
    assert rc == 0
    batch = json.loads((out / "batch.json").read_text())
    assert batch["n"] == 3 and "reach_rate" in batch
    per_seed = [json.loads((out / f"seed_{k}" / "summary.json").read_text())
                for k in range(3)]
    assert batch["summaries"] == per_seed
    assert batch["reach_rate"] == sum(s["reached"] for s in per_seed) / 3
    assert all(s["power_control"] is False and s["algo"] == "ahjb" for s in per_seed)
    assert batch["config"]["protocol"]["power_control"] is False


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["source"] == [150.0, 100.0]
    assert doc["protocol"]["dn_th"] == 50 and doc["protocol"]["alpha"] == 0.2
    assert doc["channel"]["P_ul_max"] == 26.0


def test_unknown_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--bogus"])
    assert e.value.code == EXIT_USAGE
    assert "unrecognized arguments" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"nope": 1}')
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_unwritable_out_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--out", str(blocker / "sub")]) == EXIT_IO
    assert "I/O error" in capsys.readouterr().err


def test_error_codes_distinct():
    assert len({EXIT_USAGE, EXIT_CONFIG, EXIT_IO}) == 3 and 0 not in {EXIT_USAGE, EXIT_CONFIG, EXIT_IO}


def test_rerun_identical_bytes(tmp_path):
    cfg = _short_config(tmp_path)
    out = tmp_path / "o"
    args = ["--seed", "3", "--out", str(out), "--config", str(cfg)]
    main(args)
    first = [(out / f).read_bytes() for f in ("series.csv", "summary.json")]
    main(args)
    assert [(out / f).read_bytes() for f in ("series.csv", "summary.json")] == first


def test_module_entry_point(tmp_path):
    env = {**os.environ, "MPLBACKEND": "agg"}
    r = subprocess.run([sys.executable, "-m", "ohjb", "--print-defaults"],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 0 and '"dn_th": 50' in r.stdout
