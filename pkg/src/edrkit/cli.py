"""Command-line entry points: serve, agent, synth, eval, bench, taxonomy.

Reports print as simple human-readable tables by default; pass --json for
machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .events import DatasetSplit
from .harness import cmd_eval, cmd_synth, run_bench
from .ingest import PipelineConfig


def _parse_split(text: str) -> DatasetSplit:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split must be three comma-separated fractions")
    try:
        return DatasetSplit(*parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edrkit",
        description="Desk-scale endpoint detection and response toolkit.",
    )
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the management server")
    p_serve.add_argument("--config", help="server config JSON path")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--data-dir", help="override data directory")

    p_agent = sub.add_parser("agent", help="run an endpoint agent")
    p_agent.add_argument("--config", help="agent config JSON path")
    p_agent.add_argument("--source", help="replay:PATH[:RATE] or synth:SCENARIO:N:FRAC:SEED")
    p_agent.add_argument("--mode", choices=["local", "forward"])
    p_agent.add_argument("--server")
    p_agent.add_argument("--agent-id")
    p_agent.add_argument("--state-dir")
    p_agent.add_argument("--enrollment-token")
    p_agent.add_argument("--model")
    p_agent.add_argument("--json", action="store_true")

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p_synth.add_argument("--scenario", default="baseline")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--frac", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--split", type=_parse_split, default=DatasetSplit())
    p_synth.add_argument("--json", action="store_true")

    p_eval = sub.add_parser("eval", help="score alerts against labeled ground truth")
    p_eval.add_argument("--alerts", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--json", action="store_true")

    p_bench = sub.add_parser("bench", help="measure pipeline throughput and latency")
    p_bench.add_argument("--n", type=int, default=100_000)
    p_bench.add_argument("--seed", type=int, default=7)
    p_bench.add_argument("--scenario", default="credential_theft")
    p_bench.add_argument("--frac", type=float, default=0.02)
    p_bench.add_argument("--score-interval", type=int, default=50)
    p_bench.add_argument("--json", action="store_true")

    p_tax = sub.add_parser("taxonomy", help="taxonomy utilities")
    tax_sub = p_tax.add_subparsers(dest="tax_command", required=True)
    p_check = tax_sub.add_parser("check", help="validate a taxonomy file")
    p_check.add_argument("path")
    p_check.add_argument("--json", action="store_true")

    return parser


def _cmd_serve(args) -> int:
    import uvicorn
    from .server import ServerConfig, create_app

    try:
        config = ServerConfig.from_file(args.config) if args.config else ServerConfig()
        if args.data_dir:
            config.data_dir = args.data_dir
        app = create_app(config)
    except (ValueError, OSError) as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_agent(args) -> int:
    from .agentd import AgentConfig, SourceSpec, run_agent

    try:
        config = AgentConfig.from_file(args.config) if args.config else AgentConfig()
        if args.source:
            config.source = SourceSpec.parse(args.source)
        if args.mode:
            config.mode = args.mode
        if args.server:
            config.server_url = args.server
        if args.agent_id:
            config.agent_id = args.agent_id
        if args.state_dir:
            config.state_dir = args.state_dir
        if args.enrollment_token:
            config.enrollment_token = args.enrollment_token
        if args.model:
            config.model_path = args.model
    except (ValueError, OSError) as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return 2

    try:
        summary = run_agent(config)
    except RuntimeError as exc:
        print(f"agent failed to start: {exc}", file=sys.stderr)
        return 2

    if args.json:
        print(json.dumps(summary.as_dict(), indent=2))
    else:
        print("agent run summary")
        for key, value in summary.as_dict().items():
            print(f"  {key:24s} {value}")
        print(f"  {'conservation_ok':24s} {summary.conservation_ok()}")
    return 0 if summary.conservation_ok() else 1


def _cmd_synth(args) -> int:
    report = cmd_synth(args.scenario, args.n, args.frac, args.seed,
                       args.out, split=args.split)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"wrote corpus to {args.out} (labeled events: {report['labeled']})")
        for name in ("full", "train", "val", "test"):
            print(f"  {name:6s} {report[name]['events']:8d}  {report[name]['path']}")
    return 0


def _cmd_eval(args) -> int:
    report = cmd_eval(args.alerts, args.truth)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(f"confusion: tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}")
        for name, value in report.overall.items():
            print(f"  {name:10s} {value:.4f}")
        if report.per_technique:
            print("per-technique recall:")
            for tid, metrics in report.per_technique.items():
                print(f"  {tid:12s} recall={metrics['recall']:.3f} "
                      f"precision={metrics['precision']:.3f}")
        if report.id_mismatches:
            print(f"  warning: {report.id_mismatches} evidence ids missing from truth")
    return 0


def _cmd_bench(args) -> int:
    config = PipelineConfig(score_interval=args.score_interval)
    report = run_bench(args.n, seed=args.seed, scenario=args.scenario,
                       anomaly_frac=args.frac, config=config)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(f"events:            {report.n_events}")
        print(f"duration:          {report.duration_seconds:.2f} s")
        print(f"events/second:     {report.events_per_second:.0f}")
        print(f"latency p50/p95/p99: {report.latency_ms['p50']:.2f} / "
              f"{report.latency_ms['p95']:.2f} / {report.latency_ms['p99']:.2f} ms "
              f"({report.latency_samples} samples)")
        print(f"alerts:            {report.alerts}")
        for key, value in report.counters.items():
            print(f"  {key:18s} {value}")
    return 0


def _cmd_taxonomy(args) -> int:
    from .taxonomy import TaxonomyError, load_taxonomy

    if args.tax_command == "check":
        try:
            tax = load_taxonomy(args.path)
        except (TaxonomyError, ValueError, OSError) as exc:
            print(f"invalid taxonomy: {exc}", file=sys.stderr)
            return 1
        summary = {"version": tax.version, "tactics": len(tax.tactics),
                   "techniques": len(tax.techniques)}
        if args.json:
            print(json.dumps(summary))
        else:
            print(f"taxonomy {tax.version}: {len(tax.tactics)} tactics, "
                  f"{len(tax.techniques)} techniques")
        return 0
    return 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    handlers = {
        "serve": _cmd_serve,
        "agent": _cmd_agent,
        "synth": _cmd_synth,
        "eval": _cmd_eval,
        "bench": _cmd_bench,
        "taxonomy": _cmd_taxonomy,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
