"""Command line entry point: ``forkwatch {gen-graph,analyze,simulate,experiment,report}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .graph import GraphError
from .harness import (
    SpecError,
    apply_desk,
    cmd_analyze,
    cmd_experiment,
    cmd_gen_graph,
    cmd_report,
    cmd_simulate,
    default_workers,
    load_json,
    load_spec,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forkwatch",
        description="Network connectivity vs. PoW consensus security: analysis and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--spec", required=True, help="experiment spec (JSON)")
        p.add_argument("--out", help="output directory (default: spec 'outputs')")
        p.add_argument("--seed", type=int, action="append", help="simulation seed, repeatable")
        p.add_argument("--slots", type=int, help="slots per simulation run")
        p.add_argument("--workers", type=int, help="parallel runs (env FORKWATCH_WORKERS)")
        p.add_argument("--desk", action="store_true", help="CI preset: N=100, 10^6 slots")

    for name, help_ in (
        ("gen-graph", "generate the spec's graph and write graph.json"),
        ("analyze", "analytical model only"),
        ("simulate", "simulation runs only"),
        ("experiment", "analysis, simulation and comparison metrics"),
    ):
        common(sub.add_parser(name, help=help_))

    rep = sub.add_parser("report", help="render a saved analysis/experiment JSON")
    rep.add_argument("inputs", nargs="+", help="analysis.json or experiment.json files")
    rep.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    rep.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            for path in args.inputs:
                files = cmd_report(load_json(path), args.format)
                outdir = Path(args.out)
                if len(args.inputs) > 1:
                    outdir = outdir / Path(path).stem
                for p in write_outputs(outdir, files):
                    print(p)
            return 0

        spec = load_spec(args.spec, {"seeds": args.seed, "slots": args.slots})
        if args.desk:
            spec = apply_desk(spec)
        workers = args.workers if args.workers is not None else default_workers()
        if args.command == "gen-graph":
            files = cmd_gen_graph(spec)
        elif args.command == "analyze":
            files = cmd_analyze(spec)
        elif args.command == "simulate":
            files = cmd_simulate(spec, workers)
        else:
            files = cmd_experiment(spec, workers)
        for p in write_outputs(args.out or spec.outputs, files):
            print(p)
    except SpecError as exc:
        for problem in exc.problems:
            print(f"invalid spec: {problem}", file=sys.stderr)
        return 2
    except GraphError as exc:
        print(f"graph error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
