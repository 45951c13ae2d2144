"""Intermittent-power simulation: capacitor, harvested trace, checkpoints.

Time advances on a 1 ms grid. While OFF the capacitor charges through the
source resistance (explicit Euler, no reverse current). While ON it drains at
the platform's active current; voltage falls linearly per executed cycle, so
death, checkpoint commits and completion are resolved at sub-tick precision.
"""

import bisect
import csv
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from .interp.compiler import CompiledProgram, compile_program
from .interp.inputs import InputCase, ProgramOutput
from .interp.machine import HALTED, TRIGGERED, Machine, WatchdogExceeded, snapshot
from .interp.platform import PlatformModel, get_platform
from .lang.nodes import Program

EPS = 1e-12


class SimulationError(Exception):
    def __init__(self, message: str, event_log=None):
        super().__init__(message)
        self.event_log = list(event_log or [])


class NonProgressive(SimulationError):
    """Repeated power failures without committing any checkpoint."""


class TraceExhausted(SimulationError):
    pass


class SimulationTimeout(SimulationError):
    pass


class NoViableCapacitor(SimulationError):
    pass


class TraceError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ParseError(TraceError):
    pass


class NonMonotoneTime(TraceError):
    pass


# -- traces ----------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyTrace:
    """Harvested source voltage over time, linearly interpolated."""

    times: Tuple[float, ...]
    volts: Tuple[float, ...]
    repeat: bool = False

    def __post_init__(self):
        if not self.times or len(self.times) != len(self.volts):
            raise ValueError("trace needs matching, non-empty time and voltage samples")
        for i in range(1, len(self.times)):
            if self.times[i] <= self.times[i - 1]:
                raise NonMonotoneTime("time must be strictly increasing", i + 1)
        if any(v < 0 for v in self.volts):
            raise ValueError("trace voltages must be >= 0")

    @classmethod
    def from_samples(cls, samples: Sequence[Tuple[float, float]], repeat: bool = False) -> "EnergyTrace":
        return cls(tuple(float(t) for t, _ in samples), tuple(float(v) for _, v in samples), repeat)

    @classmethod
    def constant(cls, volts: float, duration_ms: float = 1e7) -> "EnergyTrace":
        return cls((0.0, float(duration_ms)), (float(volts), float(volts)))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def start_ms(self) -> float:
        return self.times[0]

    @property
    def end_ms(self) -> float:
        return math.inf if self.repeat else self.times[-1]

    @property
    def peak(self) -> float:
        return max(self.volts)

    def voltage(self, t: float) -> float:
        ts = self.times
        if self.repeat and len(ts) > 1:
            period = ts[-1] - ts[0]
            t = ts[0] + (t - ts[0]) % period
        if t <= ts[0]:
            return self.volts[0]
        if t >= ts[-1]:
            return self.volts[-1]
        i = bisect.bisect_right(ts, t)
        t0, t1 = ts[i - 1], ts[i]
        v0, v1 = self.volts[i - 1], self.volts[i]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def load_trace(path, repeat: bool = False) -> EnergyTrace:
    """Read a ``time_ms,volts`` CSV."""
    times: List[float] = []
    volts: List[float] = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["time_ms", "volts"]:
            raise ParseError("expected header 'time_ms,volts'", 1)
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
            if not (math.isfinite(t) and math.isfinite(v)) or v < 0:
                raise ParseError(f"invalid sample {row!r}", lineno)
            if times and t <= times[-1]:
                raise NonMonotoneTime(f"time {t} does not increase past {times[-1]}", lineno)
            times.append(t)
            volts.append(v)
    if not times:
        raise ParseError("trace has no samples", 2)
    return EnergyTrace(tuple(times), tuple(volts), repeat)


def write_trace(trace: EnergyTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("time_ms,volts\n")
        for t, v in zip(trace.times, trace.volts):
            fh.write(f"{t:g},{v:.6f}\n")


# -- capacitor -------------------------------------------------------------------


@dataclass(frozen=True)
class CapacitorSpec:
    capacitance_f: float
    v_on: float = 3.3
    v_off: float = 1.8
    v_chk: Optional[float] = None  # None: derived from the platform
    source_resistance_ohm: float = 500.0
    harvest_while_on: bool = False

    def __post_init__(self):
        if self.capacitance_f <= 0:
            raise ValueError("capacitance_f must be positive")
        if self.source_resistance_ohm <= 0:
            raise ValueError("source_resistance_ohm must be positive")
        if not 0 <= self.v_off < self.v_on:
            raise ValueError("need 0 <= v_off < v_on")
        if self.v_chk is not None and not self.v_off < self.v_chk <= self.v_on:
            raise ValueError("need v_off < v_chk <= v_on")

    @classmethod
    def from_uf(cls, microfarads: float, **kw) -> "CapacitorSpec":
        return cls(microfarads * 1e-6, **kw)

    @property
    def microfarads(self) -> float:
        return self.capacitance_f * 1e6

    def volts_per_cycle(self, plat: PlatformModel) -> float:
        return plat.active_current_a / (self.capacitance_f * plat.clock_hz)

    def burst_cycles(self, plat: PlatformModel) -> float:
        """Cycles one full v_on -> v_off discharge pays for, with no harvest."""
        return (self.v_on - self.v_off) / self.volts_per_cycle(plat)

    def checkpoint_threshold(self, plat: PlatformModel, trigger_gap_cycles: Optional[float] = None) -> float:
        """Trigger voltage: explicit v_chk, else enough charge to reach the next
        trigger point and complete one save there, capped at v_on.

        ``trigger_gap_cycles`` is the longest run between trigger points; one
        tick of cycles is assumed when it is unknown.
        """
        if self.v_chk is not None:
            return self.v_chk
        gap = plat.cycles_per_ms if trigger_gap_cycles is None else trigger_gap_cycles
        reserve = plat.checkpoint_cost_cycles + gap + 1
        return min(self.v_on, self.v_off + reserve * self.volts_per_cycle(plat))

    def to_dict(self) -> dict:
        return {
            "capacitance_uf": self.microfarads, "v_on": self.v_on, "v_off": self.v_off,
            "v_chk": self.v_chk, "source_resistance_ohm": self.source_resistance_ohm,
            "harvest_while_on": self.harvest_while_on,
        }


def rc_charge_time_ms(cap: CapacitorSpec, v_source: float, v_from: float, v_to: float) -> float:
    """Analytic RC charging time between two voltages under a constant source."""
    rc = cap.source_resistance_ohm * cap.capacitance_f
    return 1000.0 * rc * math.log((v_source - v_from) / (v_source - v_to))


# -- simulation --------------------------------------------------------------------


@dataclass
class SimResult:
    output: Optional[ProgramOutput]
    total_cycles: int
    checkpoints: int
    reboots: int
    completed: bool
    sim_time_ms: float
    event_log: List[Tuple[float, float, str]] = field(default_factory=list)
    program_cycles: int = 0
    boots: int = 0
    failed_checkpoints: int = 0


def _compiled(program, plat: PlatformModel) -> CompiledProgram:
    if isinstance(program, CompiledProgram):
        return program
    return compile_program(program, plat)


def max_trigger_gap(cp: CompiledProgram, case: InputCase, cycle_budget: int = 10**7) -> int:
    """Most cycles executed between consecutive trigger points (or from the
    start to the first one) in an uninterrupted run."""
    key = ("trigger_gap", case)
    if key in cp.cache:
        return cp.cache[key]
    m = Machine(cp, case)
    gap = since = total = 0
    while True:
        used, event = m.run(cycle_budget + 1 - total, stop_at_trigger=True)
        total += used
        since += used
        if event == TRIGGERED:
            gap = max(gap, since)
            since = 0
        elif event == HALTED:
            break
        else:
            raise WatchdogExceeded(f"program exceeded {cycle_budget} cycles")
    cp.cache[key] = gap
    return gap


def simulate_intermittent(program, case: InputCase, plat, cap: CapacitorSpec,
                          trace: EnergyTrace, cycle_budget: int = 10**7,
                          max_time_ms: float = 1e7, v_initial: float = 0.0,
                          nonprogress_limit: int = 3) -> SimResult:
    """Run ``program`` on ``case`` under intermittent power.

    Checkpoints are considered at loop back-edges and function returns; the
    first such point per power-on interval with V <= v_chk saves the state.
    A save that runs out of charge is discarded. Without an explicit v_chk
    the threshold reserves charge for the program's longest trigger gap. On power failure execution
    resumes from the last committed checkpoint (or from scratch).

    Raises NonProgressive, TraceExhausted, SimulationTimeout, or any runtime
    fault of the program. ``cycle_budget`` bounds executed program cycles.
    """
    plat = get_platform(plat)
    cp = _compiled(program, plat)
    machine = Machine(cp, case)
    cpm = plat.cycles_per_ms
    c_f = cap.capacitance_f
    r_c = cap.source_resistance_ohm * c_f
    v_on, v_off = cap.v_on, cap.v_off
    gap = None if cap.v_chk is not None else max_trigger_gap(cp, case, cycle_budget)
    v_chk = cap.checkpoint_threshold(plat, gap)
    drain = cap.volts_per_cycle(plat)
    harvest_scale = 1.0 / (cap.source_resistance_ohm * c_f * plat.clock_hz)
    ck_cost = plat.checkpoint_cost_cycles
    restore_cost = plat.restore_cost_cycles

    t = trace.start_ms
    v = float(v_initial)
    log: List[Tuple[float, float, str]] = []
    checkpoint = None
    checkpoints = reboots = boots = failed = 0
    program_cycles = overhead = 0
    zero_streak = 0

    def check_time():
        if t > trace.end_ms + 1e-9:
            raise TraceExhausted(f"trace ended at {trace.end_ms} ms before the program completed", log)
        if t > max_time_ms:
            raise SimulationTimeout(f"no completion within {max_time_ms} ms of simulated time", log)

    while True:
        # -- OFF: charge until v_on -------------------------------------------
        while True:
            check_time()
            nxt = math.floor(t + 1e-9) + 1.0
            dt = nxt - t
            vs = trace.voltage(t)
            v_new = v + max(0.0, vs - v) / r_c * dt / 1000.0
            if vs > v:
                v_new = min(v_new, vs)
            if v_new >= v_on:
                t += dt * (v_on - v) / (v_new - v)
                v = v_on
                break
            v, t = v_new, nxt

        boots += 1
        log.append((t, v, "boot"))
        latched = False
        committed = 0
        alive = True

        def spend(cycles: float, d: float) -> bool:
            """Consume overhead cycles; False if the device dies first."""
            nonlocal v, t
            if d > 0 and v - cycles * d < v_off - EPS:
                t += (v - v_off) / d / cpm
                v = v_off
                return False
            v -= cycles * d
            t += cycles / cpm
            return True

        if checkpoint is not None:
            d0 = drain - harvest_scale * max(0.0, trace.voltage(t) - v) if cap.harvest_while_on else drain
            if spend(restore_cost, d0):
                overhead += restore_cost
                machine.state = checkpoint.restore()
            else:
                alive = False
        else:
            machine.state = machine.initial_state()

        # -- ON: execute until completion or death --------------------------------
        while alive:
            check_time()
            seg_end = math.floor(t + 1e-9) + 1.0
            vs = trace.voltage(t)
            d = drain
            if cap.harvest_while_on:
                d -= harvest_scale * max(0.0, vs - v)
            avail = (seg_end - t) * cpm
            to_death = (v - v_off) / d if d > 0 else math.inf
            budget = min(avail, to_death)
            dying = to_death <= avail
            while budget > EPS:
                stop = not latched and v - budget * d <= v_chk + EPS
                used, event = machine.run(budget, stop_at_trigger=stop)
                program_cycles += used
                if program_cycles > cycle_budget:
                    raise WatchdogExceeded(f"program exceeded {cycle_budget} cycles under intermittent power")
                v -= used * d
                if d < 0:
                    v = min(v, max(vs, v_on))
                t += used / cpm
                budget -= used
                if event == HALTED:
                    log.append((t, max(v, v_off), "complete"))
                    return SimResult(machine.output(), program_cycles + overhead, checkpoints,
                                     reboots, True, t, log, program_cycles, boots, failed)
                if event == TRIGGERED and not latched and v <= v_chk + EPS:
                    latched = True
                    saved = snapshot(machine.state)
                    if spend(ck_cost, d):
                        overhead += ck_cost
                        budget -= ck_cost
                        checkpoint = saved
                        checkpoints += 1
                        committed += 1
                        log.append((t, v, "checkpoint"))
                    else:
                        failed += 1
                        alive = False
                        break
            if alive and (dying or v <= v_off + EPS):
                v = v_off
                alive = False
            elif alive and budget <= EPS and t < seg_end:
                t = seg_end

        # -- power failure ----------------------------------------------------------
        reboots += 1
        log.append((t, v_off, "reboot"))
        v = v_off
        zero_streak = zero_streak + 1 if committed == 0 else 0
        if zero_streak >= nonprogress_limit:
            raise NonProgressive(
                f"{zero_streak} consecutive power failures without a committed checkpoint "
                f"(capacitor {cap.microfarads:g} uF)", log)


def min_viable_capacitor(program, case: InputCase, plat, trace: EnergyTrace,
                         candidates: Sequence, **sim_kw):
    """Smallest candidate (farads or CapacitorSpec, ascending) that completes."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    plat = get_platform(plat)
    cp = _compiled(program, plat)
    sizes = [c.capacitance_f if isinstance(c, CapacitorSpec) else float(c) for c in candidates]
    if sizes != sorted(sizes):
        raise ValueError("candidates must be ascending")
    reasons = []
    for cand in candidates:
        cap = cand if isinstance(cand, CapacitorSpec) else CapacitorSpec(float(cand))
        try:
            simulate_intermittent(cp, case, plat, cap, trace, **sim_kw)
        except SimulationError as exc:
            reasons.append(f"{cap.microfarads:g} uF: {exc}")
            continue
        return cand
    raise NoViableCapacitor("no candidate capacitor completes: " + "; ".join(reasons))


def format_event_log(log) -> str:
    lines = ["time_ms,volts,event"]
    lines += [f"{t:.3f},{v:.6f},{e}" for t, v, e in log]
    return "\n".join(lines) + "\n"


def write_event_log(log, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_event_log(log))


def off_durations(log) -> List[float]:
    """Gaps between each power failure and the following boot."""
    out = []
    last_fail = None
    for t, _, e in log:
        if e == "reboot":
            last_fail = t
        elif e == "boot" and last_fail is not None:
            out.append(t - last_fail)
            last_fail = None
    return out
