"""
Tests for the MGCC, local controller and attacker endpoints
"""

import pytest

from qkdgrid.agents.attacker import Attacker
from qkdgrid.agents.controller import LocalController
from qkdgrid.agents.mgcc import LinkState, MgccMode, MgccServer
from qkdgrid.models.frames import CipherMode, Frame
from qkdgrid.models.trace import PacketOutcome
from qkdgrid.services.keypool import KeyMirror, KeyPool, KeyPoolManager


class Link:
    """MGCC and one controller sharing a single pool"""

    def __init__(self, bits=64, authenticate=False, encrypt_measurements=False):
        self.manager = KeyPoolManager([KeyPool(1)])
        if bits:
            self.manager.deposit_block(1, bits)
        self.link = LinkState(controller_id=1, pool_id=1)
        mirror = KeyMirror()
        options = dict(
            authenticate=authenticate, encrypt_measurements=encrypt_measurements
        )
        self.mgcc = MgccServer(self.manager, mirror, [self.link], **options)
        self.controller = LocalController(self.link, self.manager, mirror, **options)

    def cycle(self, now=0.0):
        measurement = self.controller.make_measurement(now)
        control, outcomes = self.mgcc.on_measurement(measurement, now)
        return measurement, control, outcomes


def test_one_packet_of_key_keys_one_control_frame():
    net = Link(bits=64)
    net.mgcc.schedule_reference(1, 2.5, -1.0)
    measurement, control, outcomes = net.cycle()

    assert measurement.mode is CipherMode.PLAIN
    assert outcomes == [PacketOutcome.SENT]
    assert control.mode is CipherMode.OTP
    assert net.manager[1].level == 0
    assert net.mgcc.mode is MgccMode.LISTENING
    assert net.mgcc.sending_transitions == 1

    assert net.controller.on_control(control, 0.0) == [PacketOutcome.APPLIED]
    plant = net.controller.plant
    assert (plant.p_ref, plant.q_ref) == (2.5, -1.0)
    assert [c.source for c in plant.history] == ["mgcc"]


def test_empty_pool_suppresses_the_control_frame():
    net = Link(bits=0)
    _, control, outcomes = net.cycle()
    assert control is None
    assert outcomes == [PacketOutcome.SHORTAGE]
    assert net.link.degraded
    assert net.link.counters.shortages == 1
    assert net.mgcc.sending_transitions == 0


def test_replayed_control_frame_is_rejected():
    net = Link(bits=64)
    _, control, _ = net.cycle()
    net.controller.on_control(control, 0.0)
    assert net.controller.on_control(control, 0.01) == [
        PacketOutcome.DECRYPTION_MISMATCH
    ]


def test_forge_is_accepted_only_once_keys_run_out():
    net = Link(bits=64)
    attacker = Attacker(seed=1)
    measurement, control, _ = net.cycle(0.0)
    attacker.observe(measurement)
    attacker.observe(control)
    net.controller.on_control(control, 0.0)

    guess = attacker.forge(1, -6.0, 0.0, 0.005)
    assert guess.mode is CipherMode.OTP
    assert net.controller.on_control(guess, 0.005) == [
        PacketOutcome.DECRYPTION_MISMATCH
    ]
    assert not net.controller.plant.compromised

    measurement, control, _ = net.cycle(0.01)
    attacker.observe(measurement)
    assert control is None
    assert not attacker.keys_flowing(1)

    forged = attacker.forge(1, -6.0, 0.0, 0.015)
    assert forged.mode is CipherMode.PLAIN
    assert net.controller.on_control(forged, 0.015) == [
        PacketOutcome.UNAUTHENTICATED_APPLIED
    ]
    plant = net.controller.plant
    assert plant.compromised
    assert plant.p_ref == -6.0
    assert len(attacker.attempts) == 2


def test_fresh_key_restores_mgcc_control():
    net = Link(bits=0)
    net.cycle(0.0)
    net.controller.on_control(Frame(1, 0, 1, CipherMode.PLAIN, 0), 0.0)
    assert net.controller.plant.compromised

    net.manager.deposit_block(1, 64, time=0.5)
    _, control, _ = net.cycle(0.5)
    assert not net.link.degraded
    assert net.controller.on_control(control, 0.5) == [PacketOutcome.APPLIED]
    assert not net.controller.plant.compromised


def test_plain_frame_on_a_keyed_link_is_rejected():
    net = Link(bits=640)
    attacker = Attacker()
    attacker.observe(net.controller.make_measurement(0.0))
    forged = attacker.forge(1, -6.0, 0.0, 0.0)
    assert forged.mode is CipherMode.PLAIN
    assert net.controller.on_control(forged, 0.0) == [
        PacketOutcome.DECRYPTION_MISMATCH
    ]
    assert net.controller.plant.history == []


def test_authenticated_links_detect_tag_tampering():
    net = Link(bits=128, authenticate=True)
    _, control, _ = net.cycle()
    assert net.manager[1].level == 0
    assert control.tag is not None

    tampered = Frame(
        control.seq,
        control.src,
        control.dst,
        control.mode,
        control.payload,
        control.tag ^ 1,
    )
    assert net.controller.on_control(tampered, 0.0) == [
        PacketOutcome.AUTHENTICATION_FAILURE
    ]
    assert net.link.counters.authentication_failures == 1


def test_encrypted_measurements_use_the_same_pool():
    net = Link(bits=128, encrypt_measurements=True)
    net.controller.schedule_measurement(1.5, 0.25)
    measurement, control, outcomes = net.cycle()
    assert measurement.mode is CipherMode.OTP
    assert outcomes == [PacketOutcome.SENT]
    assert net.mgcc.measurements[1] == (1.5, 0.25)
    assert net.manager[1].level == 0
    assert net.controller.make_measurement(0.01) is None


@pytest.mark.parametrize(
    "frame",
    [
        Frame(1, 9, 0, CipherMode.PLAIN, 0),
        Frame(1, 1, 0, CipherMode.OTP, 0),
    ],
)
def test_mgcc_rejects_unexpected_measurements(frame):
    net = Link()
    control, outcomes = net.mgcc.on_measurement(frame, 0.0)
    assert control is None
    assert outcomes == [PacketOutcome.MALFORMED]
    assert net.manager[1].level == 64


def test_block_mode_control_frames_are_malformed():
    net = Link()
    frame = Frame(1, 0, 1, CipherMode.BLOCK, 0)
    assert net.controller.on_control(frame, 0.0) == [PacketOutcome.MALFORMED]


def test_status_reports():
    net = Link()
    net.cycle()
    status = net.mgcc.get_status()
    assert status["mode"] == "listening"
    assert status["links"][1]["control_sent"] == 1
    assert net.controller.get_status()["seq_out"] == 1
    assert Attacker().get_status() == {"attempts": 0, "streams": {}}
