"""
Tests for the in-process datagram transport
"""

import pytest

from qkdgrid.core.exceptions import ParameterValidationError, UnknownEndpointError
from qkdgrid.services.transport import SimulatedTransport


def make(latency=0.0, drops=None):
    transport = SimulatedTransport(latency, drops)
    for endpoint in (0, 1, 2):
        transport.register(endpoint)
    return transport


def test_datagrams_arrive_after_the_latency():
    transport = make(latency=0.004)
    receipt = transport.send(1, 0, b"m", now=1.0)
    assert receipt.due_at == pytest.approx(1.004)
    assert transport.poll(1.003) == []
    assert [d.payload for d in transport.poll(1.004)] == [b"m"]
    assert transport.in_flight == 0


def test_zero_latency_delivers_on_the_same_tick():
    transport = make()
    transport.send(0, 2, b"c", now=0.5)
    (datagram,) = transport.poll(0.5)
    assert (datagram.src, datagram.dst, datagram.sent_at) == (0, 2, 0.5)


def test_links_are_fifo():
    transport = make(latency=0.001)
    for i in range(5):
        transport.send(1, 0, bytes([i]), now=0.0)
    delivered = transport.poll(0.001)
    assert [d.payload for d in delivered] == [bytes([i]) for i in range(5)]
    assert [d.ordinal for d in delivered] == [1, 2, 3, 4, 5]


def test_delivery_order_is_stable_across_links():
    transport = make()
    transport.send(2, 0, b"b", now=0.0)
    transport.send(1, 0, b"a", now=0.0)
    assert [d.payload for d in transport.poll(0.0)] == [b"a", b"b"]


def test_drop_schedule():
    transport = make(drops={(1, 0): [2]})
    assert not transport.send(1, 0, b"1", now=0.0).dropped
    assert transport.send(1, 0, b"2", now=0.0).dropped
    assert not transport.send(1, 0, b"3", now=0.0).dropped
    assert not transport.send(2, 0, b"x", now=0.0).dropped
    assert [d.payload for d in transport.poll(0.0)] == [b"1", b"3", b"x"]
    assert [d.payload for d in transport.dropped] == [b"2"]


def test_handlers_receive_their_datagrams():
    transport = SimulatedTransport()
    seen = []
    transport.register(0, seen.append)
    transport.register(1)
    transport.send(1, 0, b"hello", now=0.0)
    transport.send(0, 1, b"back", now=0.0)
    transport.poll(0.0)
    assert [d.payload for d in seen] == [b"hello"]


def test_unknown_endpoint():
    transport = make()
    with pytest.raises(UnknownEndpointError):
        transport.send(1, 9, b"", now=0.0)
    with pytest.raises(KeyError):
        transport.send(9, 1, b"", now=0.0)


def test_negative_latency_is_rejected():
    with pytest.raises(ParameterValidationError):
        SimulatedTransport(latency=-0.1)
