"""Command-line driver: ``approxify run|sites|transform|simulate``."""

import argparse
import logging
import os
import sys

from ..energy import (
    CapacitorSpec, SimulationError, TraceError, load_trace, simulate_intermittent, write_event_log,
)
from ..interp.inputs import InputCase
from ..interp.machine import RuntimeFault
from ..interp.platform import get_platform
from ..lang import ApproxCError, load_source, pretty_print
from ..transform import TransformError, apply_technique, enumerate_blocks, find_block, make_technique
from .config import SEED_ENV, ConfigError, RunConfig, config_from_dict, load_config
from .corpus import Benchmark, corpus, generate, trace_paths
from .files import InputFormatError, load_manifest, read_numbers, read_pgm, write_pgm
from .pipeline import (
    EXIT_CONFIG, EXIT_NO_FEASIBLE_POINT, EXIT_NO_VIABLE_CAPACITOR, EXIT_OK, EXIT_SOURCE,
    CapacitorRun, PipelineError, Report, run_pipeline,
)
from .report import emit_report, render

DEFAULT_OUT = "approxify-out"


def _fail(msg: str, code: int) -> int:
    print(f"approxify: {msg}", file=sys.stderr)
    return code


def _load(path):
    try:
        return load_source(path), None
    except ApproxCError as exc:
        return None, _fail(f"{path}: {exc}", EXIT_SOURCE)
    except OSError as exc:
        return None, _fail(f"cannot read {path}: {exc.strerror}", EXIT_SOURCE)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    out_dir = args.out or cfg.output_dir or os.path.join(
        DEFAULT_OUT, os.path.splitext(os.path.basename(args.config))[0])
    try:
        report = run_pipeline(cfg)
    except PipelineError as exc:
        return _fail(str(exc), exc.exit_code)
    for path in emit_report(report, out_dir):
        print(path)
    for run in report.runs:
        if run.selection is not None:
            sel = run.selection
            print(f"{run.cap_uf:g} uF: {sel.record.l} {sel.record.l_p:g} / {sel.record.m} {sel.record.f_p:g}"
                  f" e_m={sel.e_m:.4f} c={sel.c:.4f} reduction={(1 - sel.c) * 100:.4f}%")
        else:
            print(f"{run.cap_uf:g} uF: {run.status}: {run.message}")
    return report.exit_code


def cmd_sites(args) -> int:
    program, err = _load(args.source)
    if err is not None:
        return err
    for b in enumerate_blocks(program):
        print(b.describe())
    return EXIT_OK


def cmd_transform(args) -> int:
    program, err = _load(args.source)
    if err is not None:
        return err
    blocks = enumerate_blocks(program)
    try:
        tech = make_technique(args.technique, args.intensity, args.seed, args.capacity)
        chosen = [find_block(blocks, b) for b in args.block] if args.block else blocks
        if args.block:
            for b in chosen:
                if not tech.applies_to(b):
                    raise TransformError(f"{args.technique} does not apply to {b.describe()}")
        out = apply_technique(program, chosen, tech, args.seed)
    except (KeyError, ValueError) as exc:
        return _fail(str(exc).strip("'\""), EXIT_CONFIG)
    text = pretty_print(out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    program, err = _load(args.source)
    if err is not None:
        return err
    try:
        plat = get_platform(args.platform)
        trace = load_trace(args.trace, repeat=args.repeat)
        cases = load_manifest(args.inputs, program.output_decl.kind) if args.inputs else [InputCase()]
        if args.case:
            cases = [c for c in cases if c.id == args.case]
            if not cases:
                raise ValueError(f"no case {args.case!r} in {args.inputs}")
        cap = CapacitorSpec.from_uf(args.cap_uf, v_chk=args.v_chk, harvest_while_on=args.harvest_while_on)
    except TraceError as exc:
        return _fail(f"{args.trace}:{exc.line}: {exc}", EXIT_CONFIG)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    code = EXIT_OK
    for case in cases:
        try:
            r = simulate_intermittent(program, case, plat, cap, trace)
        except SimulationError as exc:
            print(f"{case.id}: {type(exc).__name__}: {exc}")
            code = EXIT_NO_VIABLE_CAPACITOR
            continue
        except RuntimeFault as exc:
            print(f"{case.id}: {type(exc).__name__}: {exc}")
            code = EXIT_SOURCE
            continue
        value = r.output.value if r.output.kind != "image" else f"image {r.output.shape}"
        print(f"{case.id}: checkpoints={r.checkpoints} reboots={r.reboots} cycles={r.total_cycles} "
              f"program_cycles={r.program_cycles} time_ms={r.sim_time_ms:.3f} output={value}")
        if args.events:
            path = args.events if len(cases) == 1 else f"{os.path.splitext(args.events)[0]}_{case.id}.csv"
            write_event_log(r.event_log, path)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="approxify",
                                 description="Trade output accuracy for fewer checkpoints on intermittent power.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides the config)")
    run.set_defaults(func=cmd_run)

    sites = sub.add_parser("sites", help="list loops and functions that can be approximated")
    sites.add_argument("source")
    sites.set_defaults(func=cmd_sites)

    tr = sub.add_parser("transform", help="apply one technique and print the rewritten source")
    tr.add_argument("source")
    tr.add_argument("--technique", required=True, choices=["truncation", "sampling", "random", "memoization"])
    tr.add_argument("--intensity", required=True, type=float)
    tr.add_argument("--block", action="append", help="block id (repeatable; default: every applicable block)")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--capacity", type=int, default=16, help="memo cache entries")
    tr.add_argument("-o", "--output")
    tr.set_defaults(func=cmd_transform)

    sim = sub.add_parser("simulate", help="simulate a program under an energy trace")
    sim.add_argument("--source", required=True)
    sim.add_argument("--trace", required=True)
    sim.add_argument("--cap-uf", required=True, type=float)
    sim.add_argument("--platform", default="cortex-m")
    sim.add_argument("--inputs", help="input manifest")
    sim.add_argument("--case", help="only this case id")
    sim.add_argument("--v-chk", type=float, help="checkpoint threshold voltage")
    sim.add_argument("--harvest-while-on", action="store_true")
    sim.add_argument("--repeat", action="store_true", help="loop the trace")
    sim.add_argument("--events", help="write the event log CSV here")
    sim.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


__all__ = [
    "Benchmark", "CapacitorRun", "ConfigError", "InputFormatError", "PipelineError", "Report",
    "RunConfig", "SEED_ENV", "build_parser", "config_from_dict", "corpus", "emit_report", "generate",
    "load_config", "load_manifest", "main", "read_numbers", "read_pgm", "render", "run_pipeline",
    "trace_paths", "write_pgm", "EXIT_OK", "EXIT_CONFIG", "EXIT_SOURCE",
    "EXIT_NO_VIABLE_CAPACITOR", "EXIT_NO_FEASIBLE_POINT",
]
