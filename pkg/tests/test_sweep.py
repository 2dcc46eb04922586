"""
Tests for key-rate sweeps
"""

import pytest

from qkdgrid.core.exceptions import ParameterValidationError
from qkdgrid.engine import key_generation_speed
from qkdgrid.models.qkd import ChannelModel, ProtocolParams
from qkdgrid.services.sweep import SweepRow, frange, sweep_keyrate


def test_frange_is_inclusive_and_clean():
    assert frange(5e-4, 9e-4, 1e-4) == [5e-4, 6e-4, 7e-4, 8e-4, 9e-4]
    assert frange(0.10, 0.50, 0.05)[-1] == 0.5
    assert len(frange(0.10, 0.50, 0.05)) == 9
    with pytest.raises(ParameterValidationError):
        frange(0, 1, 0)


def test_rows_are_sorted_lexicographically():
    rows = sweep_keyrate([20, 5, 5], [7e-4, 5e-4], [0.2, 0.1])
    keys = [(r.length_km, r.e_mis, r.eta_bob) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 8
    assert keys[0] == (5, 5e-4, 0.1)


def test_single_point_matches_the_engine():
    (row,) = sweep_keyrate([5], [5e-4])
    expected = key_generation_speed(ProtocolParams(), ChannelModel(length_km=5))
    assert row == SweepRow(5, 5e-4, 0.1, expected)


def test_base_channel_is_kept_for_other_fields():
    base = ChannelModel(pulse_rate=1e6)
    (row,) = sweep_keyrate([5], [5e-4], channel=base)
    assert row.speed == pytest.approx(10_987.8 * 1e6 / 4.9e6, rel=1e-3)


def test_process_pool_gives_the_same_rows():
    lengths = [1, 10, 40]
    e_mis = frange(5e-4, 9e-4, 2e-4)
    assert sweep_keyrate(lengths, e_mis, workers=2) == sweep_keyrate(lengths, e_mis)


def test_long_links_yield_zero_not_errors():
    (row,) = sweep_keyrate([200], [9e-4])
    assert row.speed == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lengths=[], e_mis_values=[5e-4]),
        dict(lengths=[5], e_mis_values=[]),
        dict(lengths=[5], e_mis_values=[5e-4], eta_bob_values=[]),
        dict(lengths=[5], e_mis_values=[5e-4], workers=0),
    ],
)
def test_invalid_grids(kwargs):
    with pytest.raises(ParameterValidationError):
        sweep_keyrate(**kwargs)
