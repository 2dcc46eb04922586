"""
Tests for the CSV tables
"""

import csv

import pytest

from qkdgrid.core.exceptions import ParameterValidationError
from qkdgrid.models.scenario import ChannelConfig, SimConfig
from qkdgrid.models.trace import Trace
from qkdgrid.services.csv_writer import HEADERS, emit_csv, emit_trace
from qkdgrid.services.simulator import run_simulation
from qkdgrid.services.sweep import SweepRow


@pytest.fixture(scope="module")
def transfer_trace():
    cfg = SimConfig(
        duration=1.0,
        channels=[
            ChannelConfig(controller_id=1, initial_bits=5_100),
            ChannelConfig(controller_id=2, initial_bits=60_000),
        ],
        kps_enabled=True,
    )
    return run_simulation(cfg)


def read(path):
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_empty_trace_writes_only_the_header(tmp_path):
    path = emit_csv(Trace(duration=1.0), "pools", tmp_path / "pools.csv")
    assert path.read_bytes() == b"time_s,pool_id,level_bits\r\n"


def test_every_trace_table_is_written(tmp_path, transfer_trace):
    paths = emit_trace(transfer_trace, tmp_path, prefix="run_")
    assert [p.name for p in paths] == [
        "run_pools.csv",
        "run_events.csv",
        "run_packets.csv",
        "run_blocks.csv",
        "run_intervals.csv",
    ]
    for path in paths:
        table = path.name[len("run_") : -len(".csv")]
        assert read(path)[0] == HEADERS[table]
        assert b"\r\n" in path.read_bytes()


def test_transfer_row_layout(tmp_path, transfer_trace):
    rows = read(emit_csv(transfer_trace, "events", tmp_path / "events.csv"))
    transfers = [r for r in rows[1:] if r[3] == "transfer"]
    assert transfers
    time_s, pool_id, level, _, delta, counterpart, counterpart_delta = transfers[0]
    assert (pool_id, delta, counterpart, counterpart_delta) == (
        "1",
        "19872",
        "2",
        "-20000",
    )
    assert time_s == "0.010000"
    assert int(level) == 5_100 - 2 * 64 - 128 + 20_000


def test_deposit_rows_leave_the_counterpart_blank(tmp_path, transfer_trace):
    rows = read(emit_csv(transfer_trace, "events", tmp_path / "events.csv"))
    deposit = next(r for r in rows[1:] if r[3] == "deposit")
    assert deposit[5:] == ["", ""]


def test_packet_table_has_one_row_per_channel(tmp_path, transfer_trace):
    rows = read(emit_csv(transfer_trace, "packets", tmp_path / "packets.csv"))
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    header = rows[0]
    assert int(rows[1][header.index("control_sent")]) == 100


def test_sweep_table(tmp_path):
    rows = [SweepRow(5.0, 5e-4, 0.1, 10987.8312), SweepRow(10.0, 6e-4, 0.1, 0.0)]
    lines = read(emit_csv(rows, "sweep", tmp_path / "sweep.csv"))
    assert lines == [
        ["L_km", "e_mis", "eta_bob", "speed_bps"],
        ["5", "0.0005", "0.1", "10987.831"],
        ["10", "0.0006", "0.1", "0.000"],
    ]


def test_unknown_table_and_mismatched_sources(tmp_path):
    with pytest.raises(ParameterValidationError):
        emit_csv(Trace(duration=1.0), "bogus", tmp_path / "x.csv")
    with pytest.raises(ParameterValidationError):
        emit_csv(Trace(duration=1.0), "sweep", tmp_path / "x.csv")
    with pytest.raises(ParameterValidationError):
        emit_csv([], "pools", tmp_path / "x.csv")
