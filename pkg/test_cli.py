"""
Command-line surface: sweep CSV, validation exit codes, single-point commands and config errors.
"""
import csv
import io
from pathlib import Path

import pytest

from sweep.config import load_config
from sweep.runner import CSV_HEADER
from utils.errors import ConfigError
from worker.run import main

CONFIGS = Path(__file__).parent / "configs"

BASE = """\
# two 2-antenna nodes, unit channel powers, no interference
n1 = 2
n2 = 2
correlation = identity
omega1 = 1
omega2 = 1
gamma_th_db = 5
snr_db = 10
users = 2
sweep = snr_db
start = 10
stop = 12
step = 2
methods = exact, mc
trials = 200000
seed = 7
"""


def _config(tmp_path, text=BASE, **extra):
    lines = [text] + [f"{k} = {v}\n" for k, v in extra.items()]
    path = tmp_path / "scenario.cfg"
    path.write_text("".join(lines))
    return path


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_writes_sorted_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(_config(tmp_path)), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    rows = _rows(text)
    assert len(rows) == 4
    keys = [(float(r["value"]), r["method"]) for r in rows]
    assert keys == sorted(keys)
    assert {r["method"] for r in rows} == {"exact-user2", "mc-user2"}
    for r in rows:
        assert 0.0 <= float(r["p"]) <= 1.0
        if r["method"].startswith("mc-"):
            assert int(r["trials"]) == 200000 and int(r["seed"]) == 7
        else:
            assert r["stderr"] == "" and r["trials"] == ""


def test_sweep_output_independent_of_workers(tmp_path):
    config = str(_config(tmp_path))
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main(["sweep", "--config", config, "--out", str(serial), "--trials", "10000", "--workers", "1"]) == 0
    assert main(["sweep", "--config", config, "--out", str(parallel), "--trials", "10000", "--workers", "2"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_reversed_grid_fails_without_output(tmp_path, capsys):
    text = BASE.replace("start = 10", "start = 12").replace("stop = 12", "stop = 10")
    out = tmp_path / "never.csv"
    code = main(["sweep", "--config", str(_config(tmp_path, text)), "--out", str(out)])
    assert code != 0
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_unknown_key_is_rejected(tmp_path):
    code = main(["sweep", "--config", str(_config(tmp_path, colour="blue")), "--out", str(tmp_path / "x.csv")])
    assert code != 0


def test_missing_config_is_rejected(tmp_path):
    assert main(["user-outage", "--config", str(tmp_path / "absent.cfg")]) != 0


def test_validate_passes_on_correct_closed_form(tmp_path, capsys):
    out = tmp_path / "validation.csv"
    assert main(["validate", "--config", str(_config(tmp_path)), "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 2
    assert all(r["status"] == "PASS" for r in rows)
    assert out.read_text() == capsys.readouterr().out


def test_validate_catches_corrupted_gain(tmp_path):
    assert main(["validate", "--config", str(_config(tmp_path)), "--corrupt-gain", "2"]) == 1


def test_user_outage_prints_point_rows(tmp_path, capsys):
    assert main(["user-outage", "--config", str(_config(tmp_path))]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["method"] for r in rows] == ["exact-user2", "mc-user2"]
    exact, mc = (float(r["p"]) for r in rows)
    assert abs(exact - mc) <= 4.0 * float(rows[1]["stderr"])


def test_system_outage_prints_union_bounds(tmp_path, capsys):
    assert main(["system-outage", "--config", str(_config(tmp_path))]) == 0
    rows = {r["method"]: float(r["p"]) for r in _rows(capsys.readouterr().out)}
    assert {"system", "union-lower", "union-upper", "mc-system"} <= set(rows)
    assert rows["union-lower"] <= rows["system"] * (1 + 1e-9)
    assert rows["system"] <= rows["union-upper"] * (1 + 1e-9)


def test_config_rules(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_config(tmp_path, BASE.replace("exact, mc", "exact, asymptotic"), inr_ratio="0.1"))
    with pytest.raises(ConfigError):
        load_config(_config(tmp_path, BASE.replace("exact, mc", "system"), inr_db="1"))
    with pytest.raises(ConfigError):
        load_config(_config(tmp_path, BASE.replace("omega2 = 1\n", "")))
    config = load_config(_config(tmp_path), {"trials": 50000, "seed": None})
    assert config.trials == 50000 and config.seed == 7


def test_bundled_configs_load():
    fig1 = load_config(CONFIGS / "fig1.cfg")
    assert len(fig1.sweep_spec().points()) == 21
    assert [label for label, _ in fig1.curves()] == ["@rho=0.2", "@rho=0.5", "@rho=0.8"]
    fig4 = load_config(CONFIGS / "fig4.cfg")
    assert len(fig4.sweep_spec().points()) == 19
    assert [s.antennas for _, s in fig4.curves()] == [(2, 2), (2, 4)]
    for name in ("fig2.cfg", "fig3.cfg"):
        load_config(CONFIGS / name).sweep_spec()


def test_asymptote_rows_are_clipped_to_probabilities(tmp_path):
    text = (CONFIGS / "fig2.cfg").read_text()
    text = text.replace("stop = 40", "stop = 4").replace("methods = exact, asymptotic, mc", "methods = exact, asymptotic")
    out = tmp_path / "asymptote.csv"
    assert main(["sweep", "--config", str(_config(tmp_path, text)), "--out", str(out)]) == 0
    rows = [r for r in _rows(out.read_text()) if r["method"].startswith("asymptotic-")]
    assert rows
    assert all(0.0 <= float(r["p"]) <= 1.0 for r in rows)
    # the (2,2) asymptote exceeds one at 0 dB
    assert any(float(r["value"]) == 0.0 and float(r["p"]) == 1.0 for r in rows if "2x2" in r["method"])
