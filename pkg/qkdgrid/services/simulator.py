"""
Discrete-event simulation of the QKD-secured control network
"""

import functools
import math
import time as wallclock
from enum import IntEnum
from typing import Any, Callable, Dict, List, Optional, Set, Tuple

import numpy as np
import simpy
import structlog
from simpy.events import Event

from qkdgrid.agents.attacker import ATTACKER_ID, Attacker
from qkdgrid.agents.controller import LocalController
from qkdgrid.agents.mgcc import LinkState, MgccServer
from qkdgrid.core.exceptions import MalformedFrameError, UnreachableTargetError
from qkdgrid.core.metrics import (
    EXHAUSTION_INTERVALS,
    KEY_BITS_DEPOSITED,
    KPS_TRANSFERS,
    PACKETS,
    SIMULATION_DURATION,
)
from qkdgrid.engine.finite_key import evaluate_key_rate
from qkdgrid.models.frames import MGCC_ID
from qkdgrid.models.qkd import KeyRateResult
from qkdgrid.models.scenario import ChannelConfig, ForgeAttack, NoiseAttack, SimConfig
from qkdgrid.models.trace import (
    EventType,
    Interval,
    KeyBlock,
    PacketOutcome,
    PoolEvent,
    PoolSample,
    Trace,
)
from qkdgrid.services.keypool import KeyMirror, KeyPool, KeyPoolManager
from qkdgrid.services.secure_link import frame_decode, frame_encode
from qkdgrid.services.transport import Datagram, SimulatedTransport

logger = structlog.get_logger(__name__)


class Priority(IntEnum):
    """Processing order of events sharing a timestamp"""

    SCHEDULE = 0
    KEY_BLOCK = 1
    PACKET = 2
    FORGE = 3
    SAMPLE = 4


Handler = Callable[[Any], None]


class Occurrence(Event):
    """A simpy Timeout carrying one of the Priority levels"""

    def __init__(
        self,
        env: simpy.Environment,
        delay: float,
        priority: Priority,
        value: Tuple[float, Handler, Any],
    ):
        super().__init__(env)
        self._ok = True
        self._value = value
        env.schedule(self, int(priority), delay)


def delay_until(now: float, at: float) -> float:
    """Delay that lands exactly on `at` when added to `now`"""
    delay = at - now
    while delay > 0 and now + delay > at:
        delay = math.nextafter(delay, 0.0)
    while now + delay < at:
        delay = math.nextafter(delay, math.inf)
    return max(delay, 0.0)


class Simulation:
    """One run of a SimConfig; use run_simulation() for the common case"""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.trace = Trace(duration=cfg.duration)
        self.ids = sorted(c.controller_id for c in cfg.channels)

        pools = [
            KeyPool(
                c.controller_id,
                threshold=cfg.pool_threshold(c.controller_id),
                capacity=c.capacity,
                seed=cfg.seed,
            )
            for c in cfg.channels
        ]
        self.manager = KeyPoolManager(pools, cfg.kps, cfg.kps_enabled)
        self.mirror = KeyMirror()
        self.links = {cid: LinkState(cid, pool_id=cid) for cid in self.ids}
        self.trace.packet_counters = {cid: self.links[cid].counters for cid in self.ids}

        options = dict(
            authenticate=cfg.authenticate,
            encrypt_measurements=cfg.encrypt_measurements,
        )
        self.mgcc = MgccServer(
            self.manager, self.mirror, self.links.values(), **options
        )
        self.controllers = {
            cid: LocalController(self.links[cid], self.manager, self.mirror, **options)
            for cid in self.ids
        }
        self.attacker = Attacker(seed=cfg.seed)

        self.transport = SimulatedTransport(latency=cfg.latency)
        self.transport.register(MGCC_ID, self._deliver_to_mgcc)
        self.transport.register(ATTACKER_ID)
        for cid in self.ids:
            self.transport.register(cid, self._deliver_to_controller)

        self.e_mis = {c.controller_id: c.channel.e_mis for c in cfg.channels}
        self._pending_block: Dict[int, KeyRateResult] = {}
        self._block_emis: Dict[int, float] = dict(self.e_mis)
        self._rate_cache: Dict[Tuple[int, float], KeyRateResult] = {}
        self._block_index: Dict[int, int] = {cid: 0 for cid in self.ids}
        self._deposited: Dict[int, int] = {cid: 0 for cid in self.ids}
        self._open_exhaustion: Dict[int, Interval] = {}
        self._open_compromise: Dict[int, Interval] = {}
        self._delivery_times: Set[float] = set()
        self.env = simpy.Environment()
        self.now = 0.0

    # Event queue

    def _push(
        self,
        at: float,
        priority: Priority,
        handler: Handler,
        data: Any = None,
        inclusive: bool = False,
    ) -> None:
        """Schedule `handler(data)` at the absolute time `at`.

        Generated events run strictly before `duration`; configured items
        (`inclusive`) may also sit exactly on it.
        """
        end = self.cfg.duration
        if at < end or (inclusive and at == end):
            delay = delay_until(self.env.now, at)
            event = Occurrence(self.env, delay, priority, (at, handler, data))
            event.callbacks.append(self._dispatch)

    def _dispatch(self, event: Event) -> None:
        at, handler, data = event.value
        self.now = at
        handler(data)
        self._pump()
        self._record_kps()

    def _seed_events(self) -> None:
        cfg = self.cfg
        push = functools.partial(self._push, inclusive=True)
        scheduled: List[Tuple[str, Any]] = [
            *(("ref", item) for item in cfg.references),
            *(("meas", item) for item in cfg.measurements),
        ]
        for tag, item in scheduled:
            push(item.time, Priority.SCHEDULE, self._on_schedule, (tag, item))
        for attack in cfg.attacks:
            if isinstance(attack, NoiseAttack):
                data = ("noise", attack)
                push(attack.time, Priority.SCHEDULE, self._on_schedule, data)
            else:
                push(attack.time, Priority.FORGE, self._on_forge, attack)
        for cid in self.ids:
            self._push(0.0, Priority.KEY_BLOCK, self._on_key_block, cid)
        self._push(0.0, Priority.PACKET, self._on_cycle, 0)
        self._push(0.0, Priority.SAMPLE, self._on_sample, 0)

    def prime(self) -> None:
        """Fill every pool with its t = 0 key material without running events"""
        for cid in self.ids:
            self._on_key_block(cid)
        self.env = simpy.Environment()
        self._record_kps()

    def run(self) -> Trace:
        started = wallclock.perf_counter()
        logger.info(
            "Simulation started",
            duration=self.cfg.duration,
            tx_rate=self.cfg.tx_rate,
            channels=self.ids,
            kps_enabled=self.cfg.kps_enabled,
        )
        self._seed_events()
        self.env.run()

        self._finish()
        elapsed = wallclock.perf_counter() - started
        SIMULATION_DURATION.observe(elapsed)
        logger.info(
            "Simulation finished", elapsed_s=round(elapsed, 3), **self._log_summary()
        )
        return self.trace

    # Handlers

    def _on_schedule(self, data: Tuple[str, Any]) -> None:
        tag, item = data
        if tag == "ref":
            self.mgcc.schedule_reference(item.channel, item.p_mw, item.q_mvar)
        elif tag == "meas":
            self.controllers[item.channel].schedule_measurement(item.p_mw, item.q_mvar)
        else:
            self.e_mis[item.channel] = item.e_mis
            self._pool_event(item.channel, EventType.NOISE_ATTACK)
            logger.warning(
                "Noise attack", t=self.now, channel=item.channel, e_mis=item.e_mis
            )

    def _key_rate(self, channel: ChannelConfig) -> KeyRateResult:
        cid = channel.controller_id
        e_mis = self.e_mis[cid]
        ch = channel.channel.model_copy(update={"e_mis": e_mis})
        if self.cfg.statistics == "sampled":
            seed = np.random.SeedSequence(
                [self.cfg.seed, cid, self._block_index[cid]]
            ).generate_state(1)[0]
            return evaluate_key_rate(channel.protocol, ch, "sampled", int(seed))
        key = (cid, e_mis)
        if key not in self._rate_cache:
            self._rate_cache[key] = evaluate_key_rate(channel.protocol, ch)
        return self._rate_cache[key]

    def _next_block(self, channel: ChannelConfig) -> Optional[KeyRateResult]:
        cid = channel.controller_id
        try:
            result = self._key_rate(channel)
        except UnreachableTargetError as e:
            logger.warning("Channel produces no key blocks", pool=cid, error=str(e))
            return None
        self._block_index[cid] += 1
        self._block_emis[cid] = self.e_mis[cid]
        return result

    def _deposit(self, cid: int, bits: int, result: Optional[KeyRateResult]) -> None:
        receipt = self.manager.deposit_block(cid, bits, self.now)
        self._deposited[cid] += bits
        self._pool_event(cid, EventType.DEPOSIT, receipt.accepted)
        if receipt.overflow:
            self._pool_event(cid, EventType.OVERFLOW, -receipt.overflow)
        self._record_kps()
        if result is not None:
            self.trace.blocks.append(
                KeyBlock(self.now, cid, bits, result.n_pulses, self._block_emis[cid])
            )
        logger.info(
            "Key block deposited",
            t=self.now,
            pool=cid,
            bits=bits,
            level=self.manager[cid].level,
        )

    def _on_key_block(self, cid: int) -> None:
        """Deposit the block that just completed and start the next one"""
        channel = self.cfg.channel_config(cid)
        if cid in self._pending_block:
            result = self._pending_block.pop(cid)
            self._deposit(cid, result.ell, result)
        elif channel.initial_bits is None:
            primer = self._next_block(channel)
            if primer is not None:
                self._deposit(cid, primer.ell, primer)
        elif channel.initial_bits:
            self._deposit(cid, channel.initial_bits, None)

        result = self._next_block(channel)
        if result is None:
            return
        self._pending_block[cid] = result
        period = result.n_pulses / channel.channel.pulse_rate
        self._push(self.now + period, Priority.KEY_BLOCK, self._on_key_block, cid)

    def _on_cycle(self, index: int) -> None:
        for cid in self.ids:
            frame = self.controllers[cid].make_measurement(self.now)
            self._record_kps()
            if frame is None:
                self._mark_shortage(cid)
                continue
            self.attacker.observe(frame)
            self._send(cid, MGCC_ID, frame_encode(frame))
        next_at = (index + 1) / self.cfg.tx_rate
        self._push(next_at, Priority.PACKET, self._on_cycle, index + 1)

    def _on_delivery(self, _: Any) -> None:
        self._delivery_times.discard(self.now)

    def _on_forge(self, attack: ForgeAttack) -> None:
        frame = self.attacker.forge(
            attack.channel, attack.p_mw, attack.q_mvar, self.now
        )
        self.links[attack.channel].counters.forge_attempts += 1
        self._pool_event(attack.channel, EventType.FORGE_ATTACK)
        self._send(ATTACKER_ID, attack.channel, frame_encode(frame))

    def _on_sample(self, index: int) -> None:
        for cid in self.ids:
            level = self.manager[cid].level
            self.trace.samples.append(PoolSample(self.now, cid, level))
        next_at = (index + 1) * self.cfg.sample_interval
        self._push(next_at, Priority.SAMPLE, self._on_sample, index + 1)

    # Transport plumbing

    def _send(self, src: int, dst: int, octets: bytes) -> None:
        receipt = self.transport.send(src, dst, octets, self.now)
        if receipt.dropped:
            cid = dst if src in (MGCC_ID, ATTACKER_ID) else src
            self.links[cid].counters.dropped += 1
        elif receipt.due_at > self.now and receipt.due_at not in self._delivery_times:
            self._delivery_times.add(receipt.due_at)
            self._push(receipt.due_at, Priority.PACKET, self._on_delivery)

    def _pump(self) -> None:
        while self.transport.poll(self.now):
            pass

    def _deliver_to_mgcc(self, datagram: Datagram) -> None:
        try:
            frame = frame_decode(datagram.payload)
        except MalformedFrameError:
            if datagram.src in self.links:
                self.links[datagram.src].counters.malformed += 1
            return
        control, outcomes = self.mgcc.on_measurement(frame, self.now)
        self._record_kps()
        if PacketOutcome.SHORTAGE in outcomes:
            self._mark_shortage(frame.src)
        if control is not None:
            self._mark_success(control.dst)
            self.attacker.observe(control)
            self._send(MGCC_ID, control.dst, frame_encode(control))

    def _deliver_to_controller(self, datagram: Datagram) -> None:
        cid = datagram.dst
        counters = self.links[cid].counters
        try:
            frame = frame_decode(datagram.payload)
        except MalformedFrameError:
            counters.malformed += 1
            return
        plant = self.controllers[cid].plant
        was_compromised = plant.compromised
        outcomes = self.controllers[cid].on_control(frame, self.now)

        if datagram.src == ATTACKER_ID and (
            PacketOutcome.APPLIED in outcomes
            or PacketOutcome.UNAUTHENTICATED_APPLIED in outcomes
        ):
            counters.forge_accepted += 1
        if plant.compromised and not was_compromised:
            self._open_compromise[cid] = Interval(cid, self.now)
        elif was_compromised and not plant.compromised:
            self._close(self._open_compromise, cid, self.trace.compromised_intervals)

    # Bookkeeping

    def _pool_event(
        self,
        cid: int,
        event_type: EventType,
        delta: int = 0,
        counterpart_id: Optional[int] = None,
        counterpart_delta: Optional[int] = None,
    ) -> None:
        self.trace.events.append(
            PoolEvent(
                self.now,
                cid,
                self.manager[cid].level,
                event_type,
                delta,
                counterpart_id,
                counterpart_delta,
            )
        )

    def _mark_shortage(self, cid: int) -> None:
        if cid in self._open_exhaustion:
            return
        self._open_exhaustion[cid] = Interval(cid, self.now)
        self._pool_event(cid, EventType.EXHAUSTION_START)
        logger.warning(
            "Key pool exhausted", t=self.now, pool=cid, level=self.manager[cid].level
        )

    def _mark_success(self, cid: int) -> None:
        if cid not in self._open_exhaustion:
            return
        interval = self._close(
            self._open_exhaustion, cid, self.trace.exhaustion_intervals
        )
        self._pool_event(cid, EventType.EXHAUSTION_END)
        logger.info(
            "Key pool recovered", t=self.now, pool=cid, exhausted_s=interval.length
        )

    def _close(
        self, open_intervals: Dict[int, Interval], cid: int, into: List[Interval]
    ) -> Interval:
        interval = open_intervals.pop(cid)
        interval.end = self.now
        into.append(interval)
        return interval

    def _record_kps(self) -> None:
        for event in self.manager.drain_events():
            self.trace.transfers.append(event)
            if event.kind is EventType.TRANSFER:
                self._pool_event(
                    event.recipient_id,
                    EventType.TRANSFER,
                    event.recipient_gain,
                    event.donor_id,
                    -event.transferred_bits,
                )
            else:
                self._pool_event(event.recipient_id, event.kind, 0, event.donor_id)
                logger.warning(
                    "Key pool sharing stalled",
                    t=self.now,
                    pool=event.recipient_id,
                    reason=event.kind.value,
                )

    def _finish(self) -> None:
        self.now = self.cfg.duration
        for cid in sorted(self._open_exhaustion):
            self._close(self._open_exhaustion, cid, self.trace.exhaustion_intervals)
        for cid in sorted(self._open_compromise):
            self._close(self._open_compromise, cid, self.trace.compromised_intervals)
        self.trace.exhaustion_intervals.sort(key=lambda i: (i.start, i.pool_id))
        self.trace.compromised_intervals.sort(key=lambda i: (i.start, i.pool_id))
        self.trace.reference_changes = sorted(
            (change for c in self.controllers.values() for change in c.plant.history),
            key=lambda change: (change.time, change.controller_id),
        )
        self.trace.ledger = self.manager.ledger
        self.trace.final_levels = {cid: self.manager[cid].level for cid in self.ids}

        for cid in self.ids:
            KEY_BITS_DEPOSITED.labels(pool=str(cid)).inc(self._deposited[cid])
            EXHAUSTION_INTERVALS.labels(pool=str(cid)).inc(
                len(self.trace.intervals_for(cid))
            )
            for outcome, count in self.links[cid].counters.as_dict().items():
                if count:
                    PACKETS.labels(channel=str(cid), outcome=outcome).inc(count)
        KPS_TRANSFERS.inc(
            sum(1 for t in self.trace.transfers if t.kind is EventType.TRANSFER)
        )

    def _log_summary(self) -> Dict[str, Any]:
        return {
            "key_blocks": len(self.trace.blocks),
            "exhaustion_intervals": len(self.trace.exhaustion_intervals),
            "compromised_intervals": len(self.trace.compromised_intervals),
            "final_levels": self.trace.final_levels,
        }

    def get_status(self) -> Dict[str, Any]:
        """Live status of the endpoints"""
        return {
            "time": self.now,
            "mgcc": self.mgcc.get_status(),
            "controllers": {cid: c.get_status() for cid, c in self.controllers.items()},
            "attacker": self.attacker.get_status(),
            "ledger": self.manager.ledger.as_dict(),
        }


def run_simulation(cfg: SimConfig) -> Trace:
    """Execute a scenario and return its trace"""
    return Simulation(cfg).run()
