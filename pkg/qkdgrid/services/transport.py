"""
In-process datagram transport for the simulated control network
"""

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Deque, Dict, Iterable, List, Optional, Set, Tuple

import structlog

from qkdgrid.core.exceptions import ParameterValidationError, UnknownEndpointError

logger = structlog.get_logger(__name__)

Link = Tuple[int, int]
DatagramHandler = Callable[["Datagram"], None]


@dataclass(frozen=True)
class Datagram:
    src: int
    dst: int
    payload: bytes
    sent_at: float
    due_at: float
    ordinal: int


@dataclass(frozen=True)
class DeliveryReceipt:
    """Result of a send: `dropped` datagrams are never delivered"""

    link: Link
    ordinal: int
    due_at: float
    dropped: bool = False


class SimulatedTransport:
    """Zero-jitter datagram layer on a virtual clock.

    Every link (src, dst) delivers FIFO after a fixed latency. The drop
    schedule maps a link to 1-based datagram ordinals that are discarded.
    """

    def __init__(
        self,
        latency: float = 0.0,
        drops: Optional[Dict[Link, Iterable[int]]] = None,
    ):
        if latency < 0:
            raise ParameterValidationError("latency must be >= 0")
        self.latency = latency
        self.endpoints: Dict[int, Optional[DatagramHandler]] = {}
        self.drops: Dict[Link, Set[int]] = {
            link: set(ordinals) for link, ordinals in (drops or {}).items()
        }
        self.dropped: List[Datagram] = []
        self._queues: Dict[Link, Deque[Datagram]] = defaultdict(deque)
        self._ordinals: Dict[Link, int] = defaultdict(int)

    def register(self, endpoint_id: int, handler: Optional[DatagramHandler] = None):
        """Register an endpoint, optionally with a delivery handler"""
        self.endpoints[endpoint_id] = handler

    def send(self, src: int, dst: int, payload: bytes, now: float) -> DeliveryReceipt:
        for endpoint in (src, dst):
            if endpoint not in self.endpoints:
                raise UnknownEndpointError(endpoint)

        link = (src, dst)
        self._ordinals[link] += 1
        ordinal = self._ordinals[link]
        datagram = Datagram(src, dst, payload, now, now + self.latency, ordinal)

        if ordinal in self.drops.get(link, ()):
            self.dropped.append(datagram)
            logger.debug("Datagram dropped", src=src, dst=dst, ordinal=ordinal)
            return DeliveryReceipt(link, ordinal, datagram.due_at, dropped=True)

        self._queues[link].append(datagram)
        return DeliveryReceipt(link, ordinal, datagram.due_at)

    def poll(self, at_time: float) -> List[Datagram]:
        """Datagrams due at or before `at_time`, FIFO per link.

        Registered handlers are invoked for each delivered datagram.
        """
        delivered = []
        for link in sorted(self._queues):
            queue = self._queues[link]
            while queue and queue[0].due_at <= at_time:
                delivered.append(queue.popleft())
        delivered.sort(key=lambda d: (d.due_at, d.src, d.dst, d.ordinal))

        for datagram in delivered:
            handler = self.endpoints.get(datagram.dst)
            if handler is not None:
                handler(datagram)
        return delivered

    @property
    def in_flight(self) -> int:
        return sum(len(q) for q in self._queues.values())
