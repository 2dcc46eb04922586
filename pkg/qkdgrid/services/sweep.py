"""
Key-rate sweeps over fiber length, misalignment error and detector efficiency
"""

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import structlog

from qkdgrid.core.exceptions import ParameterValidationError
from qkdgrid.engine.finite_key import key_generation_speed
from qkdgrid.models.qkd import ChannelModel, ProtocolParams

logger = structlog.get_logger(__name__)

GridPoint = Tuple[float, float, float]


@dataclass(frozen=True)
class SweepRow:
    length_km: float
    e_mis: float
    eta_bob: float
    speed: float


def _evaluate(job: Tuple[ProtocolParams, ChannelModel, GridPoint]) -> SweepRow:
    p, base, (length_km, e_mis, eta_bob) = job
    ch = base.model_copy(
        update={"length_km": length_km, "e_mis": e_mis, "eta_bob": eta_bob}
    )
    return SweepRow(length_km, e_mis, eta_bob, key_generation_speed(p, ch))


def sweep_keyrate(
    lengths: Iterable[float],
    e_mis_values: Iterable[float],
    eta_bob_values: Optional[Iterable[float]] = None,
    protocol: Optional[ProtocolParams] = None,
    channel: Optional[ChannelModel] = None,
    workers: int = 1,
) -> List[SweepRow]:
    """Key generation speed on the Cartesian grid, sorted by (L, e_mis, eta_bob).

    Grid points are independent; with workers > 1 they are evaluated in a
    process pool.
    """
    protocol = protocol or ProtocolParams()
    channel = channel or ChannelModel()
    if eta_bob_values is None:
        eta_bob_values = [channel.eta_bob]
    axes: Sequence[List[float]] = [
        sorted(set(lengths)),
        sorted(set(e_mis_values)),
        sorted(set(eta_bob_values)),
    ]
    if not all(axes):
        raise ParameterValidationError("sweep grid axes must be non-empty")
    if workers < 1:
        raise ParameterValidationError("workers must be >= 1")

    jobs = [(protocol, channel, point) for point in itertools.product(*axes)]
    logger.info("Key-rate sweep started", points=len(jobs), workers=workers)
    if workers == 1:
        rows = [_evaluate(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate, jobs, chunksize=4))
    logger.info("Key-rate sweep finished", points=len(rows))
    return rows


def frange(start: float, stop: float, step: float) -> List[float]:
    """Inclusive float range, rounded to the precision of `step`"""
    if step <= 0:
        raise ParameterValidationError("step must be > 0")
    digits = max(0, -int(f"{step:e}".split("e")[1])) + 2
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, digits) for i in range(max(count, 0))]
