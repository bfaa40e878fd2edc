"""Command line entry point: ``vpki <group> <command> ...``."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from .errors import ChainMismatch, VpkiError


def _seconds_to_ms(s: float) -> int:
    return int(round(s * 1000))


# -- deploy -------------------------------------------------------------------------

def cmd_deploy_init(args) -> int:
    from .deploy import create_deployment
    from .policy import PolicyKind

    clock = None
    if args.compression:
        import time
        clock = {"kind": "compressed", "sim_origin_ms": _seconds_to_ms(args.sim_origin),
                 "factor": args.compression, "wall_origin": time.time() + args.start_in}
    scale = args.compression or 1.0
    out = create_deployment(
        args.out, policy=PolicyKind.parse(args.policy), tau_p_ms=_seconds_to_ms(args.tau),
        gamma_ms=_seconds_to_ms(args.gamma), t_date_ms=args.t_date,
        skew_ms=_seconds_to_ms(args.skew * scale), grace_ms=_seconds_to_ms(args.grace * scale),
        clock=clock, tls_enabled=not args.no_tls,
    )
    print(out)
    return 0


# -- servers ------------------------------------------------------------------------

def _serve(loader, args) -> int:
    from .deploy import serve_forever
    from .bench import configure_logging

    configure_logging()
    spec = loader(args.config)
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        spec.host, spec.port = host or "127.0.0.1", int(port)
    asyncio.run(serve_forever(spec))
    return 0


def cmd_ltca_serve(args) -> int:
    from .deploy import load_ltca
    return _serve(load_ltca, args)


def cmd_pca_serve(args) -> int:
    from .deploy import load_pca
    return _serve(load_pca, args)


# -- resolution ---------------------------------------------------------------------

def _read_pseudonym(path):
    from .codec import decode
    from .model import Pseudonym

    raw = Path(path).read_bytes()
    try:
        raw = bytes.fromhex(raw.decode("ascii").strip())
    except (UnicodeDecodeError, ValueError):
        pass
    return decode(raw, Pseudonym)


def cmd_ra_resolve(args) -> int:
    from .deploy import load_client
    from .resolution import resolve
    from .transport import TcpTransport

    client = load_client(args.deployment)
    pseudonym = _read_pseudonym(args.pseudonym)
    pca = TcpTransport.from_address(args.pca, client.pca_ssl)
    ltca = TcpTransport.from_address(args.ltca, client.ra_ssl)
    try:
        result = asyncio.run(resolve(pseudonym, pca, ltca, client.ra_credential,
                                     pca_public_key=client.pca_public_key,
                                     ltca_public_key=client.ltca_public_key))
    except ChainMismatch as exc:
        print(json.dumps({"chain_valid": False, "broken_link": exc.link}))
        return 2
    print(json.dumps(result.as_dict(), indent=2))
    return 0


# -- traces -------------------------------------------------------------------------

def cmd_trace_synth(args) -> int:
    from .trace import synth_trace

    synth_trace(args.trips, args.window, args.mean_duration, args.seed, args.out, bimodal=args.bimodal)
    print(args.out)
    return 0


def cmd_trace_stats(args) -> int:
    from .trace import parse_trace, trace_stats

    s = trace_stats(parse_trace(args.input, sort=args.sort))
    print(json.dumps({"count": s.count, "mean_duration_s": s.mean_duration,
                      "min_duration_s": s.min_duration, "max_duration_s": s.max_duration}, indent=2))
    return 0


# -- bench --------------------------------------------------------------------------

def cmd_bench_run(args) -> int:
    from .bench import BenchConfig, configure_logging, load_config, run_experiment

    configure_logging()
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = BenchConfig()
    overrides = {
        "trace": args.trace, "policy": args.policy, "gamma_s": args.gamma, "tau_s": args.tau,
        "compression": args.compression, "ltca": args.ltca, "pca": args.pca, "out": args.out,
        "seed": args.seed, "mode": args.mode, "concurrency": args.concurrency,
        "connections": args.connections, "deployment": args.deployment,
        "abort_error_rate": args.abort_error_rate, "saturation_probe": args.saturation_probe,
        "protocol_clock": args.protocol_clock,
        "origin_offset_s": args.offset, "sort_trace": args.sort or None,
        "outage_s": tuple(args.outage) if args.outage else None,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if args.launch_servers:
        cfg.launch_servers = True
    elif args.ltca or args.pca:
        cfg.launch_servers = False
    cfg.__post_init__()
    result = run_experiment(cfg)
    report = {"summary": result.summary.as_dict() if result.summary else None,
              "records": len(result.records), "error_rate": result.audit["error_rate"],
              "out": str(result.out) if result.out else None}
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpki", description="Vehicular PKI services and replay harness")
    groups = p.add_subparsers(dest="group", required=True)

    dep = groups.add_parser("deploy", help="key material and configs").add_subparsers(dest="cmd", required=True)
    d = dep.add_parser("init", help="create a deployment directory")
    d.add_argument("--out", required=True)
    d.add_argument("--policy", default="p3", choices=["p1", "p2", "p3"])
    d.add_argument("--tau", type=float, default=30.0, help="pseudonym lifetime, seconds")
    d.add_argument("--gamma", type=float, default=300.0, help="refill interval, seconds")
    d.add_argument("--t-date", type=int, default=0, help="P3 grid anchor, epoch ms")
    d.add_argument("--skew", type=float, default=60.0, help="freshness window, seconds")
    d.add_argument("--grace", type=float, default=60.0, help="ticket grace after window end, seconds")
    d.add_argument("--compression", type=float, default=None, help="use a compressed clock")
    d.add_argument("--sim-origin", type=float, default=0.0, help="simulated epoch seconds at clock start")
    d.add_argument("--start-in", type=float, default=5.0, help="wall seconds until the clock starts")
    d.add_argument("--no-tls", action="store_true")
    d.set_defaults(func=cmd_deploy_init)

    for role, func in (("ltca", cmd_ltca_serve), ("pca", cmd_pca_serve)):
        sp = groups.add_parser(role, help=f"{role.upper()} server").add_subparsers(dest="cmd", required=True)
        s = sp.add_parser("serve")
        s.add_argument("--config", required=True)
        s.add_argument("--listen", help="host:port, overrides the config")
        s.set_defaults(func=func)

    ra = groups.add_parser("ra", help="resolution authority").add_subparsers(dest="cmd", required=True)
    r = ra.add_parser("resolve", help="trace a pseudonym back to its LTC")
    r.add_argument("--pseudonym", required=True, help="encoded pseudonym, binary or hex")
    r.add_argument("--pca", required=True, help="host:port")
    r.add_argument("--ltca", required=True, help="host:port")
    r.add_argument("--deployment", required=True, help="deployment directory with credentials")
    r.set_defaults(func=cmd_ra_resolve)

    tr = groups.add_parser("trace", help="trip traces").add_subparsers(dest="cmd", required=True)
    t = tr.add_parser("synth", help="generate a synthetic trace")
    t.add_argument("--trips", type=int, required=True)
    t.add_argument("--window", type=float, required=True, help="departure window, seconds")
    t.add_argument("--mean-duration", type=float, required=True, help="seconds")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--bimodal", action="store_true", help="two rush-hour departure peaks")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_trace_synth)
    t = tr.add_parser("stats", help="trip count and duration statistics")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--sort", action="store_true", help="accept unsorted input")
    t.set_defaults(func=cmd_trace_stats)

    be = groups.add_parser("bench", help="replay harness").add_subparsers(dest="cmd", required=True)
    b = be.add_parser("run", help="replay a trace and record latencies")
    b.add_argument("--config", help="JSON file with BenchConfig fields")
    b.add_argument("--trace")
    b.add_argument("--policy", choices=["p1", "p2", "p3"])
    b.add_argument("--gamma", type=float, help="seconds")
    b.add_argument("--tau", type=float, help="seconds")
    b.add_argument("--compression", type=float)
    b.add_argument("--ltca", help="host:port of a running LTCA")
    b.add_argument("--pca", help="host:port of a running PCA")
    b.add_argument("--deployment", help="deployment directory of the running servers")
    b.add_argument("--launch-servers", action="store_true")
    b.add_argument("--out")
    b.add_argument("--seed", type=int)
    b.add_argument("--mode", choices=["realtime", "virtual"])
    b.add_argument("--concurrency", type=int)
    b.add_argument("--connections", choices=["per-acquisition", "pooled"])
    b.add_argument("--offset", type=float, help="trace origin after t_date, seconds")
    b.add_argument("--sort", action="store_true", help="sort the trace by departure")
    b.add_argument("--outage", type=float, nargs=2, metavar=("START", "END"),
                   help="refuse PCA connections between these trace seconds")
    b.add_argument("--abort-error-rate", type=float)
    b.add_argument("--saturation-probe", type=int, help="burst size for the throughput probe")
    b.add_argument("--protocol-clock", choices=["trigger", "compressed"],
                   help="time source for message timestamps during an acquisition")
    b.set_defaults(func=cmd_bench_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VpkiError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
