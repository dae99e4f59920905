"""Command line entry point: ``linkanomaly {run,generate,sweep}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import PostParseError, StreamOrderError
from .pipeline import PipelineConfig, emit_results, read_posts, rho_sweep, run_pipeline, write_posts
from .synthetic import SyntheticScenario, generate_synthetic_stream

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INSUFFICIENT = 0, 1, 2, 3

_TYPES = {"int": int, "float": float, "str": str}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_dataclass_flags(parser: argparse.ArgumentParser, cls, skip=("seed",)) -> None:
    group = parser.add_argument_group(f"{cls.__name__} fields")
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = f.type.replace(" | None", "")
        if kind == "bool":
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction,
                               default=argparse.SUPPRESS, help=f"(default: {f.default})")
        else:
            group.add_argument(flag, dest=f.name, type=_TYPES[kind], default=argparse.SUPPRESS,
                               metavar=kind.upper(), help=f"(default: {f.default})")


def _overrides(args: argparse.Namespace, cls) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in vars(args).items() if k in names}


def _load(args, cls):
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(json.load(fh))
    values.update(_overrides(args, cls))
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if cls is PipelineConfig:
        return PipelineConfig.from_mapping(values)
    return cls(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linkanomaly", description="Emerging-topic detection from mention anomalies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="score a post stream and run the detectors")
    run.add_argument("--input", "-i", required=True, help="post records (JSON lines or TSV); '-' for stdin")
    run.add_argument("--output", "-o", default="results", help="directory for result files")
    run.add_argument("--config", help="JSON object of PipelineConfig fields")
    run.add_argument("--seed", type=int, default=None)
    _add_dataclass_flags(run, PipelineConfig)

    sweep = sub.add_parser("sweep", help="alarm counts of the change-point path over several rho values")
    sweep.add_argument("--input", "-i", required=True)
    sweep.add_argument("--output", "-o", default=None, help="optional path of a CSV to write")
    sweep.add_argument("--rhos", default="0.01,0.05,0.1", help="comma-separated rho values")
    sweep.add_argument("--config")
    sweep.add_argument("--seed", type=int, default=None)
    _add_dataclass_flags(sweep, PipelineConfig)

    gen = sub.add_parser("generate", help="write a synthetic post stream")
    gen.add_argument("--output", "-o", required=True, help="JSON lines file to write")
    gen.add_argument("--config", help="JSON object of SyntheticScenario fields")
    gen.add_argument("--seed", type=int, default=None)
    _add_dataclass_flags(gen, SyntheticScenario)
    return parser


def _read_input(path: str):
    return list(read_posts(sys.stdin if path == "-" else path))


def _cmd_run(args) -> int:
    config = _load(args, PipelineConfig)
    art = run_pipeline(_read_input(args.input), config)
    emit_results(art, args.output)
    summary = art.summary()
    for kind in ("changepoint", "burst"):
        block = summary[kind]
        print(f"{kind}: {block['status']}, {block['# of detections']} detections, "
              f"1st detection time {block['1st detection time']}")
    return EXIT_INSUFFICIENT if art.insufficient else EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args, PipelineConfig).replace(burst=False)
    try:
        rhos = [float(v) for v in args.rhos.split(",") if v.strip()]
    except ValueError:
        print(f"linkanomaly sweep: error: bad --rhos {args.rhos!r}", file=sys.stderr)
        return EXIT_USAGE
    art = run_pipeline(_read_input(args.input), config)
    if art.change is None:
        for d in art.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_INSUFFICIENT
    rows = rho_sweep(art, rhos)
    lines = ["rho,detections,first_detection_time"]
    lines += [f"{r['rho']},{r['# of detections']},{'' if r['1st detection time'] is None else r['1st detection time']}"
              for r in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_generate(args) -> int:
    scenario = _load(args, SyntheticScenario)
    n = write_posts(generate_synthetic_stream(scenario), args.output)
    print(f"wrote {n} posts to {args.output} (emergence at t={scenario.emergence_at})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "generate": _cmd_generate}[args.command]
    try:
        return handler(args)
    except (PostParseError, StreamOrderError) as exc:
        print(f"linkanomaly: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        print(f"linkanomaly: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"linkanomaly: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
