"""
Tests for the qkdgrid command line
"""

import json

from qkdgrid.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, _floats, main


def test_float_lists_and_ranges():
    assert _floats("1,5,10") == [1.0, 5.0, 10.0]
    assert _floats("5e-4:7e-4:1e-4") == [5e-4, 6e-4, 7e-4]


def test_keyrate(capsys):
    assert main(["keyrate", "--length-km", "5"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    name, value = out[0].split("=")
    assert name == "ell"
    assert abs(int(value) - 2_542_979) <= 2
    assert out[1] == "n_pulses=1134034833"


def test_keyrate_without_key_prints_a_reason(capsys):
    assert main(["keyrate", "--length-km", "250"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ell=0" in out
    assert "reason=" in out


def test_invalid_parameters_exit_with_config_error(capsys):
    assert main(["keyrate", "--e-mis", "2"]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_sweep_writes_csv(tmp_path):
    output = tmp_path / "grid.csv"
    args = ["sweep", "--lengths", "5,10", "--e-mis-values", "5e-4,6e-4"]
    assert main([*args, "--output", str(output)]) == EXIT_OK
    lines = output.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "L_km,e_mis,eta_bob,speed_bps"
    assert len(lines) == 5


def test_simulate_from_config(tmp_path, capsys):
    config = tmp_path / "scenario.json"
    config.write_text(
        json.dumps(
            {
                "duration": 2.0,
                "tx_rate": 10.0,
                "channels": [{"controller_id": 1, "initial_bits": 640}],
            }
        ),
        encoding="utf-8",
    )
    out_dir = tmp_path / "out"
    args = ["simulate", "--config", str(config), "--output-dir", str(out_dir)]
    assert main(args) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["final_levels"] == {"1": 0}
    assert sorted(p.name for p in out_dir.iterdir()) == [
        "blocks.csv",
        "events.csv",
        "intervals.csv",
        "packets.csv",
        "pools.csv",
    ]


def test_missing_config_is_an_io_error(tmp_path):
    missing = tmp_path / "nope.json"
    assert main(["simulate", "--config", str(missing)]) == EXIT_IO


def test_invalid_config_is_a_config_error(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text('{"duration": -1}', encoding="utf-8")
    assert main(["simulate", "--config", str(config)]) == EXIT_CONFIG
