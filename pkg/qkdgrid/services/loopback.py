"""
Loopback UDP transport for integration runs over real sockets
"""

import asyncio
import time
from dataclasses import dataclass
from typing import Awaitable, Callable, Dict, List, Optional, Tuple

import structlog

from qkdgrid.agents.controller import LocalController
from qkdgrid.agents.mgcc import MgccServer
from qkdgrid.core.config import get_settings
from qkdgrid.core.exceptions import MalformedFrameError, UnknownEndpointError
from qkdgrid.models.frames import MGCC_ID
from qkdgrid.models.scenario import SimConfig
from qkdgrid.models.trace import PacketCounters, TransferEvent
from qkdgrid.services.secure_link import frame_decode, frame_encode
from qkdgrid.services.simulator import Simulation

logger = structlog.get_logger(__name__)

Address = Tuple[str, int]
# Queue of (payload, sender address)
DatagramQueue = asyncio.Queue
LoopbackHandler = Callable[[int, int, bytes], Awaitable[None]]


class _EndpointProtocol(asyncio.DatagramProtocol):
    """Hands received datagrams to the endpoint queue"""

    def __init__(self, endpoint_id: int, queue: DatagramQueue):
        self.endpoint_id = endpoint_id
        self.queue = queue

    def datagram_received(self, data: bytes, addr: Address) -> None:
        self.queue.put_nowait((data, addr))

    def error_received(self, exc: Exception) -> None:
        logger.warning(
            "Loopback socket error", endpoint=self.endpoint_id, error=str(exc)
        )


@dataclass
class _Endpoint:
    endpoint_id: int
    transport: asyncio.DatagramTransport
    queue: DatagramQueue
    address: Address
    task: Optional["asyncio.Task[None]"] = None


class LoopbackTransport:
    """One UDP socket per emulated endpoint on the loopback interface.

    Ports are `base_port + endpoint_id` when a base port is configured, and
    ephemeral otherwise.
    """

    def __init__(self, host: Optional[str] = None, base_port: Optional[int] = None):
        settings = get_settings()
        self.host = host or settings.loopback_host
        self.base_port = settings.loopback_base_port if base_port is None else base_port
        self.endpoints: Dict[int, _Endpoint] = {}
        self._by_address: Dict[Address, int] = {}

    async def register(
        self, endpoint_id: int, handler: Optional[LoopbackHandler] = None
    ) -> Address:
        """Bind a socket for the endpoint; a handler consumes its queue"""
        loop = asyncio.get_running_loop()
        queue: DatagramQueue = asyncio.Queue()
        port = self.base_port + endpoint_id if self.base_port else 0
        transport, _ = await loop.create_datagram_endpoint(
            lambda: _EndpointProtocol(endpoint_id, queue),
            local_addr=(self.host, port),
        )
        address = transport.get_extra_info("sockname")[:2]
        endpoint = _Endpoint(endpoint_id, transport, queue, address)
        if handler is not None:
            endpoint.task = asyncio.create_task(self._receive_loop(endpoint, handler))
        self.endpoints[endpoint_id] = endpoint
        self._by_address[address] = endpoint_id
        logger.info("Loopback endpoint bound", endpoint=endpoint_id, address=address)
        return address

    def send(self, src: int, dst: int, payload: bytes) -> None:
        for endpoint_id in (src, dst):
            if endpoint_id not in self.endpoints:
                raise UnknownEndpointError(endpoint_id)
        self.endpoints[src].transport.sendto(payload, self.endpoints[dst].address)

    async def receive(
        self, endpoint_id: int, timeout: float = 1.0
    ) -> Tuple[int, bytes]:
        """Next datagram for an endpoint without a handler, as (src, payload)"""
        endpoint = self.endpoints[endpoint_id]
        payload, addr = await asyncio.wait_for(endpoint.queue.get(), timeout)
        return self._by_address.get(addr, -1), payload

    async def _receive_loop(self, endpoint: _Endpoint, handler: LoopbackHandler):
        while True:
            payload, addr = await endpoint.queue.get()
            src = self._by_address.get(addr, -1)
            try:
                await handler(src, endpoint.endpoint_id, payload)
            except Exception as e:
                logger.error(
                    "Error handling datagram",
                    endpoint=endpoint.endpoint_id,
                    error=str(e),
                )

    async def close(self) -> None:
        for endpoint in self.endpoints.values():
            if endpoint.task is not None:
                endpoint.task.cancel()
            endpoint.transport.close()
        self.endpoints.clear()
        self._by_address.clear()
        logger.info("Loopback transport closed")


def _drain_sharing(
    sim: Simulation,
    now: float,
    on_sharing: Optional[Callable[[TransferEvent], None]],
) -> int:
    events = sim.manager.drain_events()
    for event in events:
        logger.info(
            "Key pool sharing",
            t=now,
            pool=event.recipient_id,
            kind=event.kind.value,
            donor=event.donor_id,
        )
        if on_sharing is not None:
            on_sharing(event)
    return len(events)


async def run_loopback_session(
    cfg: SimConfig,
    cycles: int,
    throttle: bool = False,
    timeout: float = 1.0,
    on_sharing: Optional[Callable[[TransferEvent], None]] = None,
) -> Dict[int, PacketCounters]:
    """Drive the MGCC and controllers over loopback sockets for `cycles` cycles.

    Pools hold their t = 0 key material only; no blocks arrive during the
    session. With `throttle` the cycles are paced at cfg.tx_rate in wall time.
    Key pool sharing events are drained after every cycle and handed to
    `on_sharing`.
    """
    sim = Simulation(cfg)
    sim.prime()
    mgcc: MgccServer = sim.mgcc
    controllers: Dict[int, LocalController] = sim.controllers
    transport = LoopbackTransport()
    now = 0.0
    answered: "asyncio.Queue[int]" = asyncio.Queue()

    async def on_mgcc(src: int, dst: int, payload: bytes) -> None:
        try:
            frame = frame_decode(payload)
        except MalformedFrameError:
            sim.links[src].counters.malformed += 1
            await answered.put(src)
            return
        control, _ = mgcc.on_measurement(frame, now)
        if control is None:
            await answered.put(frame.src)
        else:
            transport.send(MGCC_ID, control.dst, frame_encode(control))

    async def on_controller(src: int, dst: int, payload: bytes) -> None:
        try:
            controllers[dst].on_control(frame_decode(payload), now)
        except MalformedFrameError:
            sim.links[dst].counters.malformed += 1
        await answered.put(dst)

    await transport.register(MGCC_ID, on_mgcc)
    for cid in sim.ids:
        await transport.register(cid, on_controller)

    started = time.monotonic()
    shared = 0
    try:
        for index in range(cycles):
            now = index / cfg.tx_rate
            if throttle:
                delay = started + now - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
            pending: List[int] = []
            for cid in sim.ids:
                frame = controllers[cid].make_measurement(now)
                if frame is not None:
                    transport.send(cid, MGCC_ID, frame_encode(frame))
                    pending.append(cid)
            for _ in pending:
                await asyncio.wait_for(answered.get(), timeout)
            shared += _drain_sharing(sim, now, on_sharing)
    finally:
        await transport.close()

    logger.info(
        "Loopback session finished",
        cycles=cycles,
        elapsed_s=round(time.monotonic() - started, 3),
        levels={cid: sim.manager[cid].level for cid in sim.ids},
        sharing_events=shared,
    )
    return {cid: sim.links[cid].counters for cid in sim.ids}
