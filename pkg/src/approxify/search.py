"""Safety probing, the intensity sweep and configuration selection."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .energy import CapacitorSpec, EnergyTrace, SimResult, SimulationError, simulate_intermittent
from .interp.compiler import compile_program
from .interp.inputs import InputCase
from .interp.machine import Machine, RuntimeFault
from .interp.platform import PlatformModel, get_platform
from .lang import nodes as n
from .metrics import ErrorClass, ErrorReport, checkpoint_ratio, error_metric
from .transform import (
    COUNTED_LOOP, FUNCTION, GENERAL_LOOP, ApproxConfig, Block, Memoization, Sampling,
    Truncation, apply_config, make_technique,
)

log = logging.getLogger(__name__)

KEY_DIGITS = 10
PROBE_TRUNCATION = 0.25
PROBE_SAMPLING = 2
PROBE_MEMO_FRACTION = 0.01


class NoFeasiblePoint(Exception):
    pass


# -- settings ----------------------------------------------------------------------


def _schedule(start: float, step: float, stop: float, geometric: bool = False) -> Tuple[float, ...]:
    out = []
    k = 0
    while True:
        v = start * step ** k if geometric else start + k * step
        v = round(v, KEY_DIGITS)
        if v > stop + 1e-9:
            break
        out.append(v)
        k += 1
    return tuple(out)


@dataclass(frozen=True)
class SweepSettings:
    e_b: float = 0.35
    truncation: Tuple[float, float, float] = (0.05, 0.05, 0.95)  # start, step, max
    sampling: Tuple[int, int, int] = (2, 1, 10)
    random: Tuple[float, float, float] = (0.05, 0.05, 0.95)
    memo: Tuple[float, float, float] = (0.01, 2.0, 0.64)  # start, multiplier, max
    memo_capacity: int = 16
    loop_techniques: Tuple[str, ...] = ("truncation", "sampling", "random")
    memo_techniques: Tuple[str, ...] = ("memoization",)
    watchdog_multiplier: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.e_b <= 1:
            raise ValueError("e_b must lie in (0, 1]")
        for name in ("truncation", "sampling", "random"):
            start, step, stop = getattr(self, name)
            if step <= 0 or stop < start:
                raise ValueError(f"{name} schedule must be finite and increasing")
        start, mult, stop = self.memo
        if start <= 0 or mult <= 1 or stop < start:
            raise ValueError("memo schedule needs start > 0, multiplier > 1, max >= start")
        if self.truncation[2] >= 1 or self.random[2] >= 1 or self.sampling[0] < 1:
            raise ValueError("perforation schedules exceed the technique's parameter range")
        if self.watchdog_multiplier < 1:
            raise ValueError("watchdog_multiplier must be >= 1")
        unknown = set(self.loop_techniques) - {"truncation", "sampling", "random"}
        unknown |= set(self.memo_techniques) - {"memoization"}
        if unknown:
            raise ValueError(f"unknown techniques {sorted(unknown)}")

    def schedule(self, technique: str) -> Tuple[float, ...]:
        if technique == "memoization":
            return _schedule(*self.memo, geometric=True)
        if technique == "sampling":
            return tuple(int(v) for v in _schedule(*self.sampling))
        return _schedule(*getattr(self, technique))


# -- evaluation --------------------------------------------------------------------


@dataclass
class Evaluation:
    status: str  # "ok" or the name of the failure
    outputs: list = field(default_factory=list)
    checkpoints: int = 0
    cycles: int = 0
    results: List[SimResult] = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class Validator:
    """Runs programs on every (case, trace) pair and scores them against the
    original program's baseline."""

    def __init__(self, program: n.Program, cases: Sequence[InputCase], platform, capacitor: CapacitorSpec,
                 traces: Sequence[EnergyTrace], error_class, e_b: float,
                 watchdog_multiplier: float = 4.0, seed: int = 0, base_cycle_budget: int = 10**7):
        if not cases:
            raise ValueError("at least one input case is required")
        if not traces:
            raise ValueError("at least one energy trace is required")
        self.program = program
        self.cases = list(cases)
        self.platform = get_platform(platform)
        self.capacitor = capacitor
        self.traces = list(traces)
        self.error_class = ErrorClass.parse(error_class)
        self.e_b = e_b
        self.seed = seed
        self.cycle_budget = base_cycle_budget
        # baseline failures (faults, undersized capacitor) propagate to the caller
        self.baseline = self._simulate_all(program)
        self._cache: Dict[n.Program, Evaluation] = {program: self.baseline}
        max_cycles = max(r.program_cycles for r in self.baseline.results)
        self.cycle_budget = int(max_cycles * watchdog_multiplier) + 1

    @property
    def ground_truth(self):
        return [c.ground_truth for c in self.cases]

    def _simulate_all(self, program: n.Program) -> Evaluation:
        cp = compile_program(program, self.platform)
        ev = Evaluation("ok")
        for case in self.cases:
            for i, trace in enumerate(self.traces):
                r = simulate_intermittent(cp, case, self.platform, self.capacitor, trace,
                                          cycle_budget=self.cycle_budget)
                if i == 0:
                    ev.outputs.append(r.output)
                ev.checkpoints += r.checkpoints
                ev.cycles += r.total_cycles
                ev.results.append(r)
        return ev

    def run(self, program: n.Program) -> Evaluation:
        """Evaluate ``program``; faults become a failed Evaluation."""
        hit = self._cache.get(program)
        if hit is not None:
            return hit
        try:
            ev = self._simulate_all(program)
        except (RuntimeFault, SimulationError) as exc:
            ev = Evaluation(type(exc).__name__, message=str(exc))
        self._cache[program] = ev
        return ev

    def score(self, ev: Evaluation) -> Tuple[Optional[ErrorReport], float]:
        if not ev.ok:
            return None, math.inf
        report = error_metric(self.baseline.outputs, ev.outputs, self.error_class, self.ground_truth)
        return report, checkpoint_ratio(self.baseline.checkpoints, ev.checkpoints)


# -- safety probing ---------------------------------------------------------------------


def observed_argument_ranges(program: n.Program, cases: Sequence[InputCase], platform) -> Dict[str, float]:
    """Largest (max - min) over any argument position, per called function."""
    cp = compile_program(program, get_platform(platform))
    lo: Dict[str, list] = {}
    hi: Dict[str, list] = {}

    def observe(name, args):
        if name not in lo:
            lo[name], hi[name] = list(args), list(args)
            return
        l, h = lo[name], hi[name]
        for k, a in enumerate(args):
            if a < l[k]:
                l[k] = a
            elif a > h[k]:
                h[k] = a

    for case in cases:
        m = Machine(cp, case)
        m.call_observer = observe
        m.run(10**8)
    return {name: max((h - l for l, h in zip(lo[name], hi[name])), default=0.0) for name in lo}


def probe_technique(block: Block, arg_ranges: Dict[str, float]):
    if block.kind == COUNTED_LOOP:
        return Truncation(PROBE_TRUNCATION)
    if block.kind == GENERAL_LOOP:
        return Sampling(PROBE_SAMPLING)
    return Memoization(PROBE_MEMO_FRACTION * float(arg_ranges.get(block.function, 0.0)))


@dataclass(frozen=True)
class ProbeResult:
    block: Block
    technique: object
    status: str
    e_m: float
    c: float
    safe: bool
    reason: str

    def describe(self) -> str:
        verdict = "safe" if self.safe else f"excluded ({self.reason})"
        return f"{self.block.describe()}: e_m={self.e_m:.4f} c={self.c:.4f} {verdict}"


def probe_safety(program: n.Program, blocks: Sequence[Block], validator: Validator) -> Tuple[List[Block], List[ProbeResult]]:
    """Keep blocks whose mild approximation reduces checkpoints (c < 1),
    stays within the error bound and runs without faults."""
    ranges = observed_argument_ranges(program, validator.cases, validator.platform)
    safe, results = [], []
    for b in blocks:
        if b.kind == FUNCTION and not b.memoizable:
            results.append(ProbeResult(b, None, "skipped", math.nan, math.nan, False, "not memoizable"))
            continue
        tech = probe_technique(b, ranges)
        config = ApproxConfig(tech, None, validator.seed) if b.is_loop else ApproxConfig(None, tech)
        ev = validator.run(apply_config(program, [b], config))
        report, c = validator.score(ev)
        e_m = report.e_m if report else math.inf
        if not ev.ok:
            reason = f"crash: {ev.status}"
        elif not c < 1:
            reason = "no checkpoint reduction"
        elif e_m > validator.e_b:
            reason = "error above bound"
        else:
            reason = ""
        results.append(ProbeResult(b, tech, ev.status, e_m, c, not reason, reason))
        if not reason:
            safe.append(b)
    return safe, results


# -- sweep --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    l: str
    m: str
    l_p: float
    f_p: float
    step: int
    e_t: float
    c: float
    cycles: int
    checkpoints_a: int
    status: str

    @property
    def key(self) -> tuple:
        return (self.l, self.m, self.l_p, self.f_p)

    @property
    def objective(self) -> float:
        return self.e_t + self.c

    @property
    def feasible_status(self) -> bool:
        return self.status == "ok"

    def config(self, seed: int = 0, memo_capacity: int = 16) -> ApproxConfig:
        return ApproxConfig(make_technique(self.l, self.l_p, seed),
                            make_technique(self.m, self.f_p, seed, memo_capacity), seed)


def sweep(safe: Sequence[Block], program: n.Program, validator: Validator,
          settings: SweepSettings) -> List[SweepRecord]:
    """Walk each (loop technique, memo technique) ladder, raising loop and memo
    intensity together until the measured error reaches the bound.

    The shorter schedule holds its last value while the longer one continues;
    a technique with no applicable safe block contributes a single value.
    """
    records: List[SweepRecord] = []
    if not safe:
        log.warning("no approximation-safe blocks; sweep is empty")
        return records
    for l in settings.loop_techniques:
        l_sched = settings.schedule(l)
        l_blocks = [b for b in safe if make_technique(l, l_sched[0]).applies_to(b)]
        for m in settings.memo_techniques:
            m_sched = settings.schedule(m)
            m_blocks = [b for b in safe if make_technique(m, m_sched[0]).applies_to(b)]
            if not l_blocks and not m_blocks:
                continue
            if not l_blocks:
                l_sched = l_sched[:1]
            if not m_blocks:
                m_sched = m_sched[:1]
            e_t = 0.0
            step = 0
            while e_t < settings.e_b and step < max(len(l_sched), len(m_sched)):
                l_p = l_sched[min(step, len(l_sched) - 1)]
                f_p = m_sched[min(step, len(m_sched) - 1)]
                rec = SweepRecord(l, m, l_p, f_p, step, 0.0, 0.0, 0, 0, "ok")
                cfg = rec.config(settings.seed, settings.memo_capacity)
                approx = apply_config(program, list(safe), cfg)
                ev = validator.run(approx)
                report, c = validator.score(ev)
                if not ev.ok:
                    records.append(SweepRecord(l, m, l_p, f_p, step, math.inf, math.inf, 0, 0, ev.status))
                    break
                e_t = report.e_m
                records.append(SweepRecord(l, m, l_p, f_p, step, e_t, c, ev.cycles, ev.checkpoints, "ok"))
                step += 1
    return records


# -- selection ------------------------------------------------------------------------


@dataclass(frozen=True)
class Selection:
    record: SweepRecord
    config: ApproxConfig
    e_m: float
    c: float

    @property
    def objective(self) -> float:
        return self.e_m + self.c

    @property
    def reduction_pct(self) -> float:
        return (1.0 - self.c) * 100.0


def select_best(records: Sequence[SweepRecord], e_b: float, seed: int = 0,
                memo_capacity: int = 16) -> Selection:
    """Minimize e_t + c over records with e_t <= e_b and no failure.

    Ties go to the smaller e_t, then the earlier ladder step, then the
    earlier record.
    """
    best = None
    best_key = None
    for pos, r in enumerate(records):
        if r.status != "ok" or not r.e_t <= e_b:
            continue
        key = (r.e_t + r.c, r.e_t, r.step, pos)
        if best_key is None or key < best_key:
            best, best_key = r, key
    if best is None:
        raise NoFeasiblePoint(f"no sweep point has error <= {e_b}")
    return Selection(best, best.config(seed, memo_capacity), best.e_t, best.c)


# -- reference model ------------------------------------------------------------------------


def reference_curves(a: float) -> Tuple[float, float]:
    """Modeled (error, checkpoint ratio) at intensity ``a``; for report overlays only."""
    if a < 0:
        raise ValueError("intensity must be >= 0")
    return math.expm1(a / 2.0), math.exp(-2.0 * a)


def reference_minimizer() -> float:
    """Intensity minimizing the summed reference curves: 0.5 e^{a/2} = 2 e^{-2a}."""
    return math.log(4.0) / 2.5
