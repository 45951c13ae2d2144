"""Parse, probe, sweep and select for every configured capacitor size."""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

from ..energy import CapacitorSpec, SimulationError, TraceError, load_trace
from ..interp.machine import RuntimeFault
from ..lang import ApproxCError, load_source
from ..metrics import DEFAULT_CLASS, ErrorClass
from ..search import (
    NoFeasiblePoint, ProbeResult, Selection, SweepRecord, Validator, probe_safety,
    select_best, sweep,
)
from ..transform import Block, apply_config, enumerate_blocks
from .config import RunConfig
from .files import InputFormatError, load_manifest

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOURCE = 3
EXIT_NO_VIABLE_CAPACITOR = 4
EXIT_NO_FEASIBLE_POINT = 5

STATUS_OK = "ok"
STATUS_NO_VIABLE = "NoViableCapacitor"
STATUS_NO_FEASIBLE = "NoFeasiblePoint"


class PipelineError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class CapacitorRun:
    cap_uf: float
    status: str
    baseline_checkpoints: int = 0
    baseline_cycles: int = 0
    probes: List[ProbeResult] = field(default_factory=list)
    safe: List[Block] = field(default_factory=list)
    records: List[SweepRecord] = field(default_factory=list)
    selection: Optional[Selection] = None
    error_mode: Optional[str] = None
    checkpoints_a: Optional[int] = None
    events: list = field(default_factory=list)
    message: str = ""


@dataclass
class Report:
    config: RunConfig
    error_class: ErrorClass
    output_kind: str
    blocks: List[Block]
    cases: int
    runs: List[CapacitorRun]

    @property
    def exit_code(self) -> int:
        statuses = {r.status for r in self.runs}
        if STATUS_NO_VIABLE in statuses:
            return EXIT_NO_VIABLE_CAPACITOR
        if STATUS_NO_FEASIBLE in statuses:
            return EXIT_NO_FEASIBLE_POINT
        return EXIT_OK


def _load_program(cfg: RunConfig):
    try:
        return load_source(cfg.source)
    except ApproxCError as exc:
        raise PipelineError(f"{cfg.source}: {exc}", EXIT_SOURCE) from None
    except OSError as exc:
        raise PipelineError(f"cannot read {cfg.source}: {exc.strerror}", EXIT_SOURCE) from None


def _load_traces(cfg: RunConfig):
    traces = []
    for path in cfg.traces:
        try:
            traces.append(load_trace(path, repeat=cfg.repeat_traces))
        except TraceError as exc:
            raise PipelineError(f"{path}:{exc.line}: {exc}", EXIT_CONFIG) from None
        except OSError as exc:
            raise PipelineError(f"cannot read trace {path}: {exc.strerror}", EXIT_CONFIG) from None
    return traces


def run_capacitor(program, blocks, cases, cfg: RunConfig, error_class, traces, cap_uf) -> CapacitorRun:
    cap = CapacitorSpec.from_uf(cap_uf)
    try:
        validator = Validator(program, cases, cfg.platform, cap, traces, error_class, cfg.error_bound,
                              cfg.sweep.watchdog_multiplier, cfg.seed)
    except SimulationError as exc:
        return CapacitorRun(cap_uf, STATUS_NO_VIABLE, events=exc.event_log or [],
                            message=f"{type(exc).__name__}: {exc}")
    except RuntimeFault as exc:
        raise PipelineError(f"original program fails on its inputs: {type(exc).__name__}: {exc}",
                            EXIT_SOURCE) from None
    base = validator.baseline
    run = CapacitorRun(cap_uf, STATUS_OK, base.checkpoints, base.cycles, events=base.results[0].event_log)
    run.safe, run.probes = probe_safety(program, blocks, validator)
    run.records = sweep(run.safe, program, validator, cfg.sweep)
    try:
        sel = select_best(run.records, cfg.error_bound, cfg.seed, cfg.sweep.memo_capacity)
    except NoFeasiblePoint as exc:
        run.status = STATUS_NO_FEASIBLE
        run.message = str(exc) if run.records else "no approximation-safe blocks to sweep"
        return run
    approx = apply_config(program, run.safe, sel.config)
    ev = validator.run(approx)
    report, _ = validator.score(ev)
    run.selection = sel
    run.error_mode = report.mode
    run.checkpoints_a = ev.checkpoints
    run.events = ev.results[0].event_log
    return run


def run_pipeline(cfg: RunConfig) -> Report:
    """Run every stage; configuration and source problems raise
    :class:`PipelineError`, per-capacitor outcomes land in the report."""
    program = _load_program(cfg)
    try:
        cases = load_manifest(cfg.inputs, program.output_decl.kind)
    except (InputFormatError, ValueError) as exc:
        raise PipelineError(str(exc), EXIT_CONFIG) from None
    error_class = cfg.error_class or DEFAULT_CLASS[program.output_decl.kind]
    if error_class.kind != program.output_decl.kind:
        raise PipelineError(f"error class {error_class.value} does not fit {program.output_decl.kind} output",
                            EXIT_CONFIG)
    traces = _load_traces(cfg)
    blocks = enumerate_blocks(program)
    runs = []
    for cap_uf in cfg.capacitors_uf:
        log.info("capacitor %g uF", cap_uf)
        runs.append(run_capacitor(program, blocks, cases, cfg, error_class, traces, cap_uf))
    return Report(cfg, error_class, program.output_decl.kind, blocks, len(cases), runs)


def source_name(cfg: RunConfig) -> str:
    return os.path.basename(cfg.source)
