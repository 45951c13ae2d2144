import math

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from approxify.energy import (
    CapacitorSpec, EnergyTrace, NonMonotoneTime, NonProgressive, NoViableCapacitor, ParseError,
    TraceExhausted, format_event_log, load_trace, min_viable_capacitor, off_durations,
    rc_charge_time_ms, simulate_intermittent,
)
from approxify.interp import InputCase, get_platform, run_continuous
from approxify.lang import parse_source

EMPTY = InputCase()
CAP220 = CapacitorSpec.from_uf(220)
FIVE_VOLTS = EnergyTrace.constant(5.0)


def busy_program(iterations):
    # 19 cycles per iteration with the default cost table
    return parse_source(f"""func main() {{
        float acc = 0.0;
        for (int i = 0; i < {iterations}; i = i + 1) {{ acc = acc + float(i) * 0.5; }}
        emit_num(acc);
    }}""")


def free_checkpoints(plat):
    return plat.with_overrides(checkpoint_cost_cycles=0, restore_cost_cycles=0)


# -- traces ---------------------------------------------------------------------------


def test_two_line_trace(write):
    tr = load_trace(write("t.csv", "time_ms,volts\n0,5\n10,5\n"))
    assert len(tr) == 2 and tr.voltage(3.0) == 5.0


def test_corpus_square_trace_row_count(traces):
    from approxify.cli.corpus import trace_paths
    with open(trace_paths()["square"]) as fh:
        rows = sum(1 for line in fh if line.strip()) - 1
    assert len(traces["square"]) == rows


@pytest.mark.parametrize("text,error,line", [
    ("time_ms,volts\n0,5\n10,5\n5,5\n", NonMonotoneTime, 4),
    ("time,v\n0,5\n", ParseError, 1),
    ("time_ms,volts\n0,abc\n", ParseError, 2),
    ("time_ms,volts\n0,-1\n", ParseError, 2),
    ("time_ms,volts\n0,1,2\n", ParseError, 2),
    ("time_ms,volts\n", ParseError, 2),
])
def test_trace_errors(write, text, error, line):
    with pytest.raises(error) as exc:
        load_trace(write("bad.csv", text))
    assert exc.value.line == line


def test_interpolation_and_repeat():
    tr = EnergyTrace.from_samples([(0, 0.0), (10, 5.0)])
    assert tr.voltage(4.0) == pytest.approx(2.0)
    assert tr.voltage(50.0) == 5.0
    rep = EnergyTrace.from_samples([(0, 0.0), (10, 5.0)], repeat=True)
    assert rep.voltage(14.0) == pytest.approx(rep.voltage(4.0))
    assert math.isinf(rep.end_ms)


# -- analytic oracles ------------------------------------------------------------------


def test_rc_charge_time_oracle():
    expected = 500 * 220e-6 * math.log((5 - 1.8) / (5 - 3.3)) * 1000
    assert rc_charge_time_ms(CAP220, 5.0, 1.8, 3.3) == pytest.approx(expected)
    assert expected == pytest.approx(69.6, abs=0.05)


def test_burst_arithmetic(plat):
    # Q = C * dV = 330 uC at 12 mA is 27.5 ms, i.e. 2750 cycles at 100 kHz
    assert CAP220.burst_cycles(plat) == pytest.approx(2750)


def test_constant_trace_checkpoint_count(plat):
    p = busy_program(1447)
    free = free_checkpoints(plat)
    cycles = run_continuous(p, EMPTY, free)[1]
    assert abs(cycles - 27_500) < 19
    r = simulate_intermittent(p, EMPTY, free, CAP220, FIVE_VOLTS)
    assert r.completed
    assert abs(r.checkpoints - cycles / 2750) <= 1
    # replayed work after each save pushes the total slightly past ten bursts
    assert r.boots == math.ceil(r.program_cycles / 2750)


def test_off_phase_duration(plat):
    r = simulate_intermittent(busy_program(1447), EMPTY, plat, CAP220, FIVE_VOLTS)
    gaps = off_durations(r.event_log)
    assert gaps
    for g in gaps:
        assert abs(g - rc_charge_time_ms(CAP220, 5.0, 1.8, 3.3)) <= 1.0


def test_first_boot_waits_for_full_charge(plat):
    r = simulate_intermittent(busy_program(10), EMPTY, plat, CAP220, FIVE_VOLTS)
    t_boot, v_boot, ev = r.event_log[0]
    assert ev == "boot" and v_boot == CAP220.v_on
    assert t_boot == pytest.approx(rc_charge_time_ms(CAP220, 5.0, 0.0, 3.3), abs=1.0)


# -- failure modes ------------------------------------------------------------------------


def test_undersized_capacitor_is_nonprogressive(plat):
    heavy = plat.with_overrides(checkpoint_cost_cycles=2000)
    with pytest.raises(NonProgressive) as exc:
        simulate_intermittent(busy_program(2000), EMPTY, heavy, CapacitorSpec.from_uf(22), FIVE_VOLTS)
    assert exc.value.event_log


def test_trace_exhausted(plat):
    short = EnergyTrace.from_samples([(0, 5.0), (200, 5.0)])
    with pytest.raises(TraceExhausted):
        simulate_intermittent(busy_program(5000), EMPTY, plat, CAP220, short)


def test_dark_trace_never_boots(plat):
    dark = EnergyTrace.from_samples([(0, 2.0), (500, 2.0)])
    with pytest.raises(TraceExhausted):
        simulate_intermittent(busy_program(10), EMPTY, plat, CAP220, dark)


def test_harvest_while_on_needs_fewer_checkpoints(plat):
    p = busy_program(2000)
    off = simulate_intermittent(p, EMPTY, plat, CAP220, FIVE_VOLTS)
    on = simulate_intermittent(p, EMPTY, plat, CapacitorSpec.from_uf(220, harvest_while_on=True), FIVE_VOLTS)
    assert on.checkpoints < off.checkpoints


@pytest.mark.parametrize("kw", [{"capacitance_f": 0}, {"capacitance_f": 1e-4, "v_off": 3.5},
                                {"capacitance_f": 1e-4, "v_chk": 1.0}, {"capacitance_f": 1e-4, "source_resistance_ohm": 0}])
def test_capacitor_validation(kw):
    with pytest.raises(ValueError):
        CapacitorSpec(**kw)


# -- capacitor sizing ----------------------------------------------------------------------


def test_min_viable_capacitor_corpus(benchmarks, plat):
    bm = benchmarks["susan"]
    case = bm.cases()[0]
    got = min_viable_capacitor(bm.program(), case, plat, FIVE_VOLTS, [220e-6, 330e-6, 470e-6, 680e-6])
    assert got == 220e-6


def test_min_viable_capacitor_failures(plat):
    heavy = plat.with_overrides(checkpoint_cost_cycles=2000)
    p = busy_program(2000)
    with pytest.raises(NoViableCapacitor):
        min_viable_capacitor(p, EMPTY, heavy, FIVE_VOLTS, [10e-6, 22e-6])
    assert min_viable_capacitor(p, EMPTY, heavy, FIVE_VOLTS, [470e-6]) == 470e-6
    with pytest.raises(ValueError):
        min_viable_capacitor(p, EMPTY, heavy, FIVE_VOLTS, [470e-6, 220e-6])


# -- invariants ------------------------------------------------------------------------------

CORPUS_NAMES = ["susan", "lqi", "strsearch"]
TRACE_NAMES = ["constant", "square", "noisy", "sawtooth", "bursty"]


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.sampled_from(CORPUS_NAMES), st.sampled_from(TRACE_NAMES), st.sampled_from([220, 330, 470, 680, 1000]),
       st.integers(0, 5))
def test_simulation_invariants(benchmarks, traces, plat, name, trace_name, uf, case_index):
    bm = benchmarks[name]
    cases = bm.cases()
    case = cases[case_index % len(cases)]
    cap = CapacitorSpec.from_uf(uf)
    tr = traces[trace_name]
    r = simulate_intermittent(bm.program(), case, plat, cap, tr)
    out, cycles = run_continuous(bm.program(), case, plat)
    assert r.completed and r.output == out
    assert r.total_cycles >= cycles and r.program_cycles >= cycles
    on = False
    for t, v, ev in r.event_log:
        if ev == "boot":
            on = True
        if on:
            assert cap.v_off - 1e-9 <= v <= tr.peak + 1e-9
        if ev == "reboot":
            on = False
    again = simulate_intermittent(bm.program(), case, plat, cap, tr)
    assert format_event_log(again.event_log) == format_event_log(r.event_log)
    assert again.checkpoints == r.checkpoints


def test_event_log_format(plat):
    r = simulate_intermittent(busy_program(1447), EMPTY, plat, CAP220, FIVE_VOLTS)
    lines = format_event_log(r.event_log).splitlines()
    assert lines[0] == "time_ms,volts,event"
    assert {line.rsplit(",", 1)[1] for line in lines[1:]} <= {"boot", "checkpoint", "reboot", "complete"}
    assert lines[-1].endswith(",complete")
