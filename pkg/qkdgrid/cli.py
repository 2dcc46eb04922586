"""
Command-line entry point for qkdgrid
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import structlog

from qkdgrid.core.config import get_settings
from qkdgrid.core.exceptions import QkdGridError
from qkdgrid.core.logging import configure_logging
from qkdgrid.engine.finite_key import evaluate_key_rate
from qkdgrid.models.qkd import ChannelModel, ProtocolParams
from qkdgrid.models.scenario import SimConfig
from qkdgrid.services.csv_writer import emit_csv, emit_trace
from qkdgrid.services.scenarios import kps_scenario
from qkdgrid.services.simulator import run_simulation
from qkdgrid.services.sweep import frange, sweep_keyrate

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def _floats(text: str) -> List[float]:
    """Comma list ("1,5,10") or inclusive range ("5e-4:9e-4:1e-4")"""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        return frange(start, stop, step)
    return [float(v) for v in text.split(",") if v.strip()]


def _channel_args(parser: argparse.ArgumentParser) -> None:
    defaults = ChannelModel()
    parser.add_argument("--length-km", type=float, default=defaults.length_km)
    parser.add_argument("--e-mis", type=float, default=defaults.e_mis)
    parser.add_argument("--eta-bob", type=float, default=defaults.eta_bob)
    parser.add_argument("--pulse-rate", type=float, default=None)
    parser.add_argument(
        "--ec-leakage", choices=["phase_error", "qber"], default="phase_error"
    )


def _channel_from(args: argparse.Namespace) -> ChannelModel:
    fields = dict(length_km=args.length_km, e_mis=args.e_mis, eta_bob=args.eta_bob)
    if args.pulse_rate is not None:
        fields["pulse_rate"] = args.pulse_rate
    return ChannelModel(**fields)


def _build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    p = argparse.ArgumentParser(
        prog="qkdgrid", description="QKD-secured microgrid control simulator"
    )
    p.add_argument("--log-level", default=None)
    p.add_argument("--log-format", choices=["json", "console"], default=None)
    sub = p.add_subparsers(dest="cmd", required=True)

    k = sub.add_parser("keyrate", help="evaluate one key block")
    _channel_args(k)
    k.add_argument("--statistics", choices=["expected", "sampled"], default="expected")
    k.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("sweep", help="key generation speed over a grid")
    _channel_args(s)
    s.add_argument("--lengths", type=_floats, default=[1, 5, 10, 20, 40, 80])
    s.add_argument("--e-mis-values", type=_floats, default=frange(5e-4, 9e-4, 1e-4))
    s.add_argument("--eta-bob-values", type=_floats, default=None)
    s.add_argument("--workers", type=int, default=settings.sweep_workers)
    s.add_argument("--output", type=Path, default=None)

    r = sub.add_parser("simulate", help="run a scenario and write its trace CSVs")
    r.add_argument("--config", type=Path, default=None, help="SimConfig JSON file")
    r.add_argument("--output-dir", type=Path, default=Path(settings.output_dir))
    r.add_argument("--prefix", default="")

    d = sub.add_parser("kps-demo", help="two-controller run with and without KPS")
    d.add_argument("--duration", type=float, default=None)
    d.add_argument("--output-dir", type=Path, default=Path(settings.output_dir))

    v = sub.add_parser("serve", help="serve the HTTP API")
    v.add_argument("--host", default=settings.api_host)
    v.add_argument("--port", type=int, default=settings.api_port)
    v.add_argument("--reload", action="store_true", default=settings.api_reload)
    return p


def _run_keyrate(args: argparse.Namespace) -> None:
    protocol = ProtocolParams(ec_leakage=args.ec_leakage)
    result = evaluate_key_rate(
        protocol, _channel_from(args), args.statistics, args.seed
    )
    print(f"ell={result.ell}")
    print(f"n_pulses={result.n_pulses}")
    print(f"speed_bps={result.speed:.3f}")
    if result.ell == 0:
        print(f"reason={result.diagnostics.get('reason', '')}")


def _run_sweep(args: argparse.Namespace) -> None:
    eta_bob = args.eta_bob_values or [args.eta_bob]
    rows = sweep_keyrate(
        args.lengths,
        args.e_mis_values,
        eta_bob,
        protocol=ProtocolParams(ec_leakage=args.ec_leakage),
        channel=_channel_from(args),
        workers=args.workers,
    )
    output = args.output or Path(get_settings().output_dir) / "sweep.csv"
    emit_csv(rows, "sweep", output)
    print(output)


def _run_simulate(args: argparse.Namespace) -> None:
    if args.config is None:
        cfg = SimConfig()
    else:
        cfg = SimConfig.model_validate_json(args.config.read_text(encoding="utf-8"))
    trace = run_simulation(cfg)
    emit_trace(trace, args.output_dir, args.prefix)
    print(json.dumps(trace.summary(), indent=2, sort_keys=True, default=str))


def _run_kps_demo(args: argparse.Namespace) -> None:
    report = {}
    for enabled in (False, True):
        trace = run_simulation(kps_scenario(enabled, duration=args.duration))
        prefix = "kps_on_" if enabled else "kps_off_"
        emit_trace(trace, args.output_dir, prefix)
        report[prefix.rstrip("_")] = {
            "exhausted_s": {
                pool: round(trace.exhausted_time(pool), 3)
                for pool in trace.final_levels
            },
            "min_level": {pool: trace.min_level(pool) for pool in trace.final_levels},
            "transfers": trace.summary()["transfers"],
        }
    print(json.dumps(report, indent=2, sort_keys=True))


def _run_serve(args: argparse.Namespace) -> None:
    import uvicorn

    uvicorn.run("qkdgrid.main:app", host=args.host, port=args.port, reload=args.reload)


COMMANDS = {
    "keyrate": _run_keyrate,
    "sweep": _run_sweep,
    "simulate": _run_simulate,
    "kps-demo": _run_kps_demo,
    "serve": _run_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    try:
        COMMANDS[args.cmd](args)
    except OSError as e:
        logger.error("I/O error", command=args.cmd, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, QkdGridError) as e:
        # pydantic ValidationError is a ValueError
        logger.error("Invalid configuration", command=args.cmd, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
