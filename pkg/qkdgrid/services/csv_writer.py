"""
CSV tables for simulation traces and sweeps
"""

import csv
from dataclasses import fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence, Union

import structlog

from qkdgrid.core.exceptions import ParameterValidationError
from qkdgrid.models.trace import PacketCounters, Trace
from qkdgrid.services.sweep import SweepRow

logger = structlog.get_logger(__name__)

Row = List[object]

HEADERS: Dict[str, List[str]] = {
    "pools": ["time_s", "pool_id", "level_bits"],
    "events": [
        "time_s",
        "pool_id",
        "level_bits",
        "event_type",
        "delta_bits",
        "counterpart_id",
        "counterpart_delta_bits",
    ],
    "packets": ["channel_id", *(f.name for f in fields(PacketCounters))],
    "blocks": ["time_s", "pool_id", "ell_bits", "n_pulses", "e_mis"],
    "intervals": ["kind", "pool_id", "start_s", "end_s", "length_s"],
    "sweep": ["L_km", "e_mis", "eta_bob", "speed_bps"],
}
TABLES = tuple(HEADERS)


def _t(seconds: float) -> str:
    return f"{seconds:.6f}"


def _g(value: float) -> str:
    return f"{value:.10g}"


def _blank(value: object) -> object:
    return "" if value is None else value


def pool_rows(trace: Trace) -> Iterable[Row]:
    for s in trace.samples:
        yield [_t(s.time), s.pool_id, s.level]


def event_rows(trace: Trace) -> Iterable[Row]:
    for e in trace.events:
        yield [
            _t(e.time),
            e.pool_id,
            e.level,
            e.event_type.value,
            e.delta,
            _blank(e.counterpart_id),
            _blank(e.counterpart_delta),
        ]


def packet_rows(trace: Trace) -> Iterable[Row]:
    for channel_id in sorted(trace.packet_counters):
        counters = trace.packet_counters[channel_id].as_dict()
        yield [channel_id, *counters.values()]


def block_rows(trace: Trace) -> Iterable[Row]:
    for b in trace.blocks:
        yield [_t(b.time), b.pool_id, b.ell, b.n_pulses, _g(b.e_mis)]


def interval_rows(trace: Trace) -> Iterable[Row]:
    for kind, intervals in (
        ("exhaustion", trace.exhaustion_intervals),
        ("compromised", trace.compromised_intervals),
    ):
        for i in intervals:
            end = trace.duration if i.end is None else i.end
            yield [kind, i.pool_id, _t(i.start), _t(end), _t(end - i.start)]


def sweep_rows(rows: Sequence[SweepRow]) -> Iterable[Row]:
    for r in rows:
        yield [_g(r.length_km), _g(r.e_mis), _g(r.eta_bob), f"{r.speed:.3f}"]


_TRACE_TABLES: Dict[str, Callable[[Trace], Iterable[Row]]] = {
    "pools": pool_rows,
    "events": event_rows,
    "packets": packet_rows,
    "blocks": block_rows,
    "intervals": interval_rows,
}


def emit_csv(
    source: Union[Trace, Sequence[SweepRow]], which: str, path: Union[str, Path]
) -> Path:
    """Write one table as CSV (CRLF line endings, fixed header) and return its path"""
    if which not in HEADERS:
        raise ParameterValidationError(f"unknown table {which!r}; expected {TABLES}")
    if which == "sweep":
        if isinstance(source, Trace):
            raise ParameterValidationError("the sweep table needs sweep rows")
        rows = sweep_rows(source)
    else:
        if not isinstance(source, Trace):
            raise ParameterValidationError(f"the {which} table needs a trace")
        rows = _TRACE_TABLES[which](source)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(HEADERS[which])
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.info("CSV written", table=which, path=str(path), rows=count)
    return path


def emit_trace(
    trace: Trace, output_dir: Union[str, Path], prefix: str = ""
) -> List[Path]:
    """Write every trace table into `output_dir`"""
    return [
        emit_csv(trace, which, Path(output_dir) / f"{prefix}{which}.csv")
        for which in _TRACE_TABLES
    ]
