"""
Scenario builders and attack injection
"""

from typing import Literal, Optional

import structlog

from qkdgrid.core.exceptions import ScenarioError
from qkdgrid.engine.finite_key import evaluate_key_rate
from qkdgrid.models.qkd import ChannelModel, ProtocolParams
from qkdgrid.models.scenario import (
    Attack,
    ChannelConfig,
    ForgeAttack,
    KpsPolicy,
    NoiseAttack,
    ScheduledValue,
    SimConfig,
)

logger = structlog.get_logger(__name__)


def block_period(
    channel: Optional[ChannelModel] = None, protocol: Optional[ProtocolParams] = None
) -> float:
    """Seconds between key-block deposits on a channel"""
    channel = channel or ChannelModel()
    result = evaluate_key_rate(protocol or ProtocolParams(), channel)
    return result.n_pulses / channel.pulse_rate


def inject_attack(
    cfg: SimConfig,
    t: float,
    kind: Literal["noise", "forge"],
    channel: Optional[int] = None,
    e_mis: Optional[float] = None,
    p_mw: float = -6.0,
    q_mvar: float = 0.0,
) -> SimConfig:
    """Return a copy of `cfg` with one more scheduled attack.

    Noise changes the channel's e_mis for key blocks starting at or after
    `t`; forge sends an attacker control frame at `t`.
    """
    if not 0 <= t <= cfg.duration:
        raise ScenarioError(f"attack time {t} s outside [0, {cfg.duration}] s")
    if channel is None:
        channel = cfg.channels[0].controller_id
    if channel not in {c.controller_id for c in cfg.channels}:
        raise ScenarioError(f"unknown channel {channel}")

    attack: Attack
    if kind == "noise":
        if e_mis is None:
            raise ScenarioError("noise attacks need a new e_mis")
        attack = NoiseAttack(time=t, channel=channel, e_mis=e_mis)
    elif kind == "forge":
        attack = ForgeAttack(time=t, channel=channel, p_mw=p_mw, q_mvar=q_mvar)
    else:
        raise ScenarioError(f"unknown attack kind {kind!r}")

    logger.info("Attack scheduled", kind=kind, t=t, channel=channel)
    return cfg.model_copy(update={"attacks": [*cfg.attacks, attack]})


def exhaustion_scenario(
    tx_rate: float, duration: Optional[float] = None, length_km: float = 50.0
) -> SimConfig:
    """One channel at L = 50 km, primed with one key block, for one block period"""
    channel = ChannelModel(length_km=length_km)
    return SimConfig(
        duration=duration or block_period(channel),
        tx_rate=tx_rate,
        channels=[ChannelConfig(controller_id=1, channel=channel)],
        sample_interval=10.0,
    )


def kps_scenario(
    enabled: bool,
    duration: Optional[float] = None,
    length_km: float = 14.0,
    tx_rate: float = 100.0,
) -> SimConfig:
    """Two controllers, the first on a noisier channel (e_mis 8e-4 vs 5e-4).

    At L = 14 km and 100 packets/s the first pool runs dry shortly before
    each new block arrives unless KPS refills it from the second pool.
    """
    noisy = ChannelModel(length_km=length_km, e_mis=8e-4)
    quiet = ChannelModel(length_km=length_km, e_mis=5e-4)
    return SimConfig(
        duration=duration or round(1.5 * block_period(noisy), 3),
        tx_rate=tx_rate,
        channels=[
            ChannelConfig(controller_id=1, channel=noisy),
            ChannelConfig(controller_id=2, channel=quiet),
        ],
        kps=KpsPolicy(threshold=5_000, transfer_size=20_000),
        kps_enabled=enabled,
    )


def attack_scenario(
    forge_time: float = 16.0,
    exhausted_from: float = 10.0,
    duration: float = 30.0,
    tx_rate: float = 20.0,
) -> SimConfig:
    """A controller whose pool runs dry at `exhausted_from`, forged at `forge_time`.

    The pool starts with exactly enough key for the packets sent before
    `exhausted_from`; the next key block is far beyond `duration`.
    """
    packets = int(round(exhausted_from * tx_rate))
    cfg = SimConfig(
        duration=duration,
        tx_rate=tx_rate,
        channels=[
            ChannelConfig(
                controller_id=1,
                channel=ChannelModel(length_km=50.0),
                initial_bits=64 * packets,
            )
        ],
        references=[ScheduledValue(time=0.0, channel=1, p_mw=0.0, q_mvar=0.0)],
        sample_interval=1.0,
    )
    return inject_attack(cfg, forge_time, "forge", channel=1, p_mw=-6.0, q_mvar=0.0)
