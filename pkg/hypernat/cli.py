"""
``hypernat`` command line: trace generation, simulation runs, sweeps, timeline
and RTT studies, availability analysis.

Exit codes: 0 success, 1 usage, 2 parse/validation/config error or missing
file, 3 runtime failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from dotenv import find_dotenv, load_dotenv

from config.fabric_config import DEFAULT_CONFIG_PATH, FabricConfigLoader
from hypernat import analytics
from hypernat.descriptions import (
    ANALYZE_DESCRIPTION,
    CALIBRATION_NOTE,
    GEN_TRACE_DESCRIPTION,
    RTT_DESCRIPTION,
    SIMULATE_DESCRIPTION,
    SWEEP_DESCRIPTION,
    TIMELINE_DESCRIPTION,
)
from hypernat.errors import ConfigError, HyperNATError, ParseError, ValidationError
from hypernat.nic import InstallMode
from hypernat.simnet import gateway
from hypernat.simnet.fabric import FabricConfig, Topology, config_for
from hypernat.simnet.trace import gen_trace, load_trace, write_trace

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3

DEFAULT_SWEEP_FLOWS = [10_000, 50_000, 100_000, 200_000]
SWEEP_HEADER = ["topology", "n_flows", "throughput_pps", "p50_us", "p99_us", "failed_flows", "seed"]
RTT_SUMMARY_HEADER = ["offered_pps", "p50_us", "p90_us", "p98.6_us", "p99_us", "tail_fraction", "tail_us", "seed"]


class UsageError(Exception):
    """Bad or incompatible command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("fabric configuration (defaults < --config file < flags)")
    group.add_argument(
        "--config",
        type=Path,
        default=None,
        help=f"key=value profile; default $HYPERNAT_CONFIG or {DEFAULT_CONFIG_PATH.name}",
    )
    for name, info in FabricConfig.model_fields.items():
        flags = [_flag(name)] + (["--nics"] if name == "n_nics" else [])
        kwargs: Dict[str, Any] = {"dest": name, "default": None, "help": info.description}
        if info.annotation is InstallMode:
            kwargs["choices"] = [mode.value for mode in InstallMode]
        else:
            kwargs["type"] = info.annotation
        group.add_argument(*flags, **kwargs)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in FabricConfig.model_fields if getattr(args, name, None) is not None}


def _load_config(args: argparse.Namespace) -> FabricConfig:
    path = args.config or os.environ.get("HYPERNAT_CONFIG") or DEFAULT_CONFIG_PATH
    return FabricConfigLoader(path).build(**_overrides(args))


def _topology_config(args: argparse.Namespace, topology: Topology) -> FabricConfig:
    if topology is not Topology.HYPERNAT and args.n_nics is not None and args.n_nics != 1:
        raise UsageError(f"--topology {topology.value} has a single element; --nics {args.n_nics} does not apply")
    return config_for(_load_config(args), topology)


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)


def _provenance(cfg: FabricConfig, seed: Optional[int], command: str) -> Dict[str, Any]:
    return {"command": command, "seed": seed, "config": cfg.echo(), "calibration": CALIBRATION_NOTE}


def cmd_simulate(args: argparse.Namespace) -> int:
    topology = Topology(args.topology)
    cfg = _topology_config(args, topology)
    if args.trace is not None:
        trace = load_trace(args.trace, cfg.address_spaces())
    else:
        trace = gen_trace(args.flows, args.pkts_per_flow, cfg.sender_rate_pps, args.seed, cfg.address_spaces(), cfg.proto, cfg.size_bytes)

    result = gateway.run(cfg, trace, topology, emit_events=args.emit_events)
    out = _out_dir(args.out)
    report = result.to_report()
    generated = args.trace is None
    report.update(
        seed=args.seed,
        trace=None if generated else str(args.trace),
        flows=args.flows if generated else None,
        pkts_per_flow=args.pkts_per_flow if generated else None,
    )
    _write_json(out / "report.json", report)
    analytics.write_cdf_csv(out / "rtt_cdf.csv", result.metrics.rtt_samples_us)
    if args.emit_events:
        gateway.write_event_log(out / "events.csv", result.events)

    print(
        f"{topology.value}: {result.metrics.throughput_pps:.1f} pps, "
        f"consistency {'pass' if result.audit['passed'] else 'FAIL'}, report in {out}"
    )
    return 0 if result.audit["passed"] else EXIT_RUNTIME


def _sweep_cell(cell: Dict[str, Any]) -> Dict[str, Any]:
    cfg = FabricConfig.build(cell["config"])
    topology = Topology(cell["topology"])
    result = gateway.saturate_run(
        cfg, topology, cell["offered_pps"], n_flows=cell["n_flows"], total_packets=cell["packets"], seed=cell["seed"]
    )
    report = result.to_report()
    report.update(seed=cell["seed"], offered_pps=cell["offered_pps"], total_packets=cell["packets"])
    _write_json(Path(cell["out"]) / f"cell_{topology.value}_{cell['n_flows']}.json", report)
    pct = result.metrics.percentiles
    return {
        "topology": topology.value,
        "n_flows": cell["n_flows"],
        "throughput_pps": result.metrics.throughput_pps,
        "p50_us": pct.get("p50"),
        "p99_us": pct.get("p99"),
        "failed_flows": result.metrics.failed_flows,
        "seed": cell["seed"],
    }


def cmd_sweep(args: argparse.Namespace) -> int:
    topologies = [Topology(t) for t in args.topologies]
    if any(t is not Topology.HYPERNAT for t in topologies) and args.n_nics not in (None, 1):
        logger.info("baselines run with one element regardless of --nics %d", args.n_nics)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cfg = _load_config(args)
    out = _out_dir(args.out)
    cells = [
        {
            "config": config_for(cfg, topology).echo(),
            "topology": topology.value,
            "n_flows": n_flows,
            "packets": args.packets,
            "offered_pps": args.offered_pps,
            "seed": args.seed,
            "out": str(out),
        }
        for topology in topologies
        for n_flows in args.flows
    ]
    if args.jobs == 1:
        rows = [_sweep_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as executor:
            rows = list(executor.map(_sweep_cell, cells))

    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SWEEP_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    _write_json(out / "sweep_config.json", _provenance(cfg, args.seed, "sweep"))
    print(f"{len(rows)} cells written to {out / 'sweep.csv'}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.mc_trials < 1:
        raise UsageError("--mc-trials must be >= 1")
    if args.x_over_f:
        reports = analytics.availability_sweep(args.F, args.x_over_f, args.nic_counts or [args.N], args.mc_trials, args.seed)
        if args.out is not None:
            analytics.write_sweep_csv(args.out, reports)
            print(f"{len(reports)} rows written to {args.out}")
        else:
            print(json.dumps([r.to_dict() for r in reports], indent=2))
        return 0

    if args.X is None:
        raise UsageError("--X is required unless --x-over-f is given")
    params = analytics.AvailabilityParams(args.X, args.F, args.N)
    report = analytics.availability_report(params, args.mc_trials, args.seed).to_dict()
    payload = json.dumps(report, indent=2)
    if args.out is not None:
        args.out.write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0


def cmd_gen_trace(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    rate = args.rate or cfg.sender_rate_pps
    records = gen_trace(args.flows, args.pkts_per_flow, rate, args.seed, cfg.address_spaces(), cfg.proto, cfg.size_bytes)
    count = write_trace(args.out, records)
    print(f"{count} packets of {args.flows} flows written to {args.out}")
    return 0


def cmd_timeline(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    report = gateway.timeline(cfg, repeat=args.repeat)
    out = _out_dir(args.out)
    with open(out / "timeline.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["event", "first_us", "steady_us"])
        writer.writerows(report.rows())
    payload = report.to_dict()
    payload.update(_provenance(cfg, None, "timeline"))
    _write_json(out / "timeline.json", payload)

    print(f"connection {report.tuple}: rule on NIC {report.owner_nic}, return via NIC {report.return_nic}")
    for event, first, steady in report.rows():
        print(f"  {event:<18} {'' if first is None else f'{first:g}':>8} {'' if steady is None else f'{steady:g}':>8}")
    return 0


def cmd_rtt(args: argparse.Namespace) -> int:
    """RTT CDF per offered load on the multi-NIC gateway, plus a percentile summary."""
    cfg = _load_config(args)
    out = _out_dir(args.out)
    rows = []
    for rate in args.rates:
        result = gateway.saturate_run(cfg, Topology.HYPERNAT, rate, args.flows, args.packets, args.seed)
        samples = result.metrics.rtt_samples_us
        analytics.write_cdf_csv(out / f"rtt_cdf_{rate}.csv", samples)
        pct = result.metrics.percentiles
        rows.append(
            [
                rate,
                pct.get("p50"),
                pct.get("p90"),
                pct.get("p98.6"),
                pct.get("p99"),
                analytics.tail_fraction(samples, args.tail_us),
                args.tail_us,
                args.seed,
            ]
        )
    with open(out / "rtt_summary.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RTT_SUMMARY_HEADER)
        writer.writerows(rows)
    _write_json(out / "rtt_config.json", _provenance(cfg, args.seed, "rtt"))
    print(f"{len(rows)} RTT distributions written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypernat", description="HyperNAT gateway simulator and availability analysis.")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log verbosity on stderr; default $HYPERNAT_LOG_LEVEL or WARNING.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", description=SIMULATE_DESCRIPTION, help="run one trace")
    p.add_argument("--topology", choices=[t.value for t in Topology], default=Topology.HYPERNAT.value)
    p.add_argument("--trace", type=Path, help="trace CSV; generated from --flows/--pkts-per-flow when omitted")
    p.add_argument("--flows", type=int, default=1000)
    p.add_argument("--pkts-per-flow", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--emit-events", action="store_true", help="also write events.csv")
    p.add_argument("--out", type=Path, default=Path("out"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", description=SWEEP_DESCRIPTION, help="throughput across topologies and flow counts")
    p.add_argument("--topologies", nargs="+", choices=[t.value for t in Topology], default=[t.value for t in Topology])
    p.add_argument("--flows", type=int, nargs="+", default=DEFAULT_SWEEP_FLOWS)
    p.add_argument("--packets", type=int, default=400_000, help="total packets per cell")
    p.add_argument("--offered-pps", type=float, default=2_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1, help="cells evaluated in parallel")
    p.add_argument("--out", type=Path, default=Path("out/sweep"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", description=ANALYZE_DESCRIPTION, help="availability bounds")
    p.add_argument("--X", type=int, help="simultaneous flows")
    p.add_argument("--F", type=int, default=2**32, help="external space size")
    p.add_argument("--N", type=int, default=2, help="NICs")
    p.add_argument("--mc-trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x-over-f", type=float, nargs="+", help="sweep these X/F ratios instead of one X")
    p.add_argument("--nic-counts", type=int, nargs="+", help="NIC counts for --x-over-f")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen-trace", description=GEN_TRACE_DESCRIPTION, help="synthetic trace CSV")
    p.add_argument("--flows", type=int, required=True)
    p.add_argument("--pkts", "--pkts-per-flow", dest="pkts_per_flow", type=int, required=True)
    p.add_argument("--rate", type=int, help="aggregate packets/s; default sender_rate_pps")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("trace.csv"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("timeline", description=TIMELINE_DESCRIPTION, help="event timeline of one connection")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out/timeline"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("rtt", description=RTT_DESCRIPTION, help="RTT distribution per offered load")
    p.add_argument("--rates", type=int, nargs="+", default=[800_000, 1_600_000], help="offered gateway load, pps")
    p.add_argument("--flows", type=int, default=10_000)
    p.add_argument("--packets", type=int, default=200_000)
    p.add_argument("--tail-us", type=float, default=1000.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out/rtt"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_rtt)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"hypernat: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    level = args.log_level or os.environ.get("HYPERNAT_LOG_LEVEL", "WARNING")
    logging.basicConfig(level=level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        return args.func(args)
    except UsageError as e:
        print(f"hypernat {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"hypernat {args.command}: file not found: {e.filename or e}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, ValidationError, ConfigError) as e:
        print(f"hypernat {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"hypernat {args.command}: invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    except HyperNATError as e:
        logger.debug("run failed", exc_info=True)
        print(f"hypernat {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception("unexpected failure")
        print(f"hypernat {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
