import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from approxify.interp import InputCase, run_continuous
from approxify.lang import nodes as n
from approxify.lang import parse_source
from approxify.transform import (
    COUNTED_LOOP, FUNCTION, GENERAL_LOOP, ApproxConfig, Memoization, NotCounted, NotMemoizable,
    RandomSkip, Sampling, Truncation, apply_config, apply_memoization, apply_random, apply_sampling,
    apply_truncation, enumerate_blocks, find_block, is_memoizable, make_technique,
)

EMPTY = InputCase()


def counter(n_iter, header=None):
    header = header or f"for (int i = 0; i < {n_iter}; i = i + 1)"
    return parse_source(f"func main() {{ int k = 0; {header} {{ k = k + 1; }} emit_num(k); }}")


def body_runs(p):
    return int(run_continuous(p, EMPTY)[0].value[0])


def only_loop(p):
    (b,) = [b for b in enumerate_blocks(p) if b.is_loop]
    return b


# -- enumeration ----------------------------------------------------------------------


def test_nested_loops_and_helper():
    p = parse_source("""
    func w(t: float) -> float { return exp(0.0 - t); }
    func main() {
        for (int r = 0; r < 3; r = r + 1) { for (int c = 0; c < 3; c = c + 1) { emit_num(w(float(r + c))); } }
    }""")
    blocks = enumerate_blocks(p)
    assert [(b.id, b.kind) for b in blocks] == [("b0", FUNCTION), ("b1", COUNTED_LOOP), ("b2", COUNTED_LOOP)]
    assert blocks[0].memoizable
    assert blocks[2].path[:len(blocks[1].path)] == blocks[1].path


def test_straight_line_program_has_no_loops():
    assert not [b for b in enumerate_blocks(parse_source("func main() { emit_num(1); }")) if b.is_loop]


def test_susan_scan_loops_are_counted(benchmarks):
    blocks = enumerate_blocks(benchmarks["susan"].program())
    scans = [b for b in blocks if b.kind == COUNTED_LOOP and b.path[0] == 2]
    assert len(scans) == 2


def test_while_loops_are_general(benchmarks):
    kinds = [b.kind for b in enumerate_blocks(benchmarks["strsearch"].program())]
    assert kinds.count(GENERAL_LOOP) == 3 and kinds.count(COUNTED_LOOP) == 1


def test_find_block():
    p = counter(3)
    assert find_block(enumerate_blocks(p), "b0").kind == COUNTED_LOOP
    with pytest.raises(KeyError):
        find_block(enumerate_blocks(p), "b9")


@pytest.mark.parametrize("src,expected", [
    ("func w(t: float) -> float { return exp(0 - t); }", True),
    ("func w(t: float) -> float { emit_num(t); return t; }", False),
    ("float acc; func w(t: float) -> float { return acc + t; }", False),
    ("float acc; func w(t: float) -> float { acc = t; return t; }", False),
    ("func v(t: float) -> float { return t; } func w(t: float) -> float { return v(t) * 2.0; }", True),
    ("float g; func v(t: float) -> float { return g; } func w(t: float) -> float { return v(t); }", False),
    ("func w(t: float) { emit_num(t); }", False),
])
def test_is_memoizable(src, expected):
    p = parse_source(src + " func main() { }")
    assert is_memoizable(p, "w") is expected


# -- truncation --------------------------------------------------------------------------


def test_truncation_keeps_leading_iterations():
    p = counter(10)
    assert body_runs(apply_truncation(p, only_loop(p), 0.3)) == 7


def test_truncation_zero_is_identity():
    p = counter(10)
    assert apply_truncation(p, only_loop(p), 0.0) == p


def test_truncated_sum():
    p = parse_source("func main() { int s = 0; for (int i = 0; i < 100; i = i + 1) { s = s + i; } emit_num(s); }")
    q = apply_truncation(p, only_loop(p), 0.5)
    assert run_continuous(q, EMPTY)[0].value == (1225.0,)


def test_truncation_needs_counted_loop():
    p = parse_source("func main() { int k = 0; while (k < 5) { k = k + 1; } }")
    with pytest.raises(NotCounted):
        apply_truncation(p, only_loop(p), 0.5)
    with pytest.raises(ValueError):
        apply_truncation(counter(3), only_loop(counter(3)), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 60), st.floats(0.01, 0.95), st.floats(0.01, 0.95))
def test_truncation_monotone(trips, q1, q2):
    # q = 0 returns the loop unannotated and so skips the guard's setup cost
    lo, hi = sorted((q1, q2))
    p = counter(trips)
    b = only_loop(p)
    a, z = apply_truncation(p, b, lo), apply_truncation(p, b, hi)
    assert body_runs(a) >= body_runs(z)
    assert run_continuous(a, EMPTY)[1] >= run_continuous(z, EMPTY)[1]
    assert body_runs(a) == math.ceil(round((1 - lo) * trips, 9))


# -- sampling and random ---------------------------------------------------------------------


def test_sampling_half_and_third():
    p = counter(300)
    b = only_loop(p)
    assert body_runs(apply_sampling(p, b, 2)) == 150
    assert body_runs(apply_sampling(p, b, 3)) == 100
    assert apply_sampling(p, b, 1) == p
    with pytest.raises(ValueError):
        apply_sampling(p, b, 0)


@given(st.integers(0, 80), st.integers(1, 12))
def test_sampling_runs_ceil(trips, i):
    p = counter(trips)
    assert body_runs(apply_sampling(p, only_loop(p), i)) == math.ceil(trips / i)


def test_sampling_keeps_loop_control_on_while():
    p = parse_source("func main() { int k = 0; int s = 0; while (k < 10) { s = s + 1; k = k + 1; } emit_num(s); }")
    q = apply_sampling(p, only_loop(p), 2)
    # the skipped bodies also skip the counter update, so the loop runs twice as many guard checks
    assert run_continuous(q, EMPTY)[0].value == (10.0,)


def test_random_skip_rate():
    p = counter(10_000)
    b = only_loop(p)
    q = apply_random(p, b, 0.5, seed=1)
    assert abs(1 - body_runs(q) / 10_000 - 0.5) <= 0.02
    assert run_continuous(q, EMPTY) == run_continuous(apply_random(p, b, 0.5, seed=1), EMPTY)
    assert apply_random(p, b, 0.0) == p


# -- memoization ---------------------------------------------------------------------------------

SQ = "func f(x: float) -> float { return x * x; } "


def test_memoization_errors():
    p = parse_source("float g; func f(x: float) -> float { return g; } func main() { emit_num(f(1.0)); }")
    (fb,) = [b for b in enumerate_blocks(p) if b.kind == FUNCTION]
    with pytest.raises(NotMemoizable):
        apply_memoization(p, fb, 0.1)
    loop = only_loop(counter(2))
    with pytest.raises(NotMemoizable):
        apply_memoization(counter(2), loop, 0.1)


def test_exact_memo_on_distinct_inputs_is_bit_identical():
    p = parse_source(SQ + "func main() { for (int i = 0; i < 20; i = i + 1) { emit_num(f(float(i) * 0.37)); } }")
    (fb,) = [b for b in enumerate_blocks(p) if b.kind == FUNCTION]
    q = apply_memoization(p, fb, 0.0)
    assert q.function("f").memo == n.Memo(0.0, 16)
    assert run_continuous(q, EMPTY)[0] == run_continuous(p, EMPTY)[0]


def test_tolerant_memo_by_hand():
    p = parse_source(SQ + "func main() { emit_num(f(1.0)); emit_num(f(1.05)); emit_num(f(1.2)); }")
    (fb,) = [b for b in enumerate_blocks(p) if b.kind == FUNCTION]
    out = run_continuous(apply_memoization(p, fb, 0.1), EMPTY)[0]
    assert out.value == (1.0, 1.0, pytest.approx(1.44))


# -- configs and invariants -------------------------------------------------------------------


def test_techniques():
    assert make_technique("sampling", 3.0) == Sampling(3)
    assert make_technique("random", 0.2, seed=5) == RandomSkip(0.2, 5)
    assert make_technique("memoization", 0.5, capacity=4) == Memoization(0.5, 4)
    with pytest.raises(ValueError):
        make_technique("unroll", 1)
    b = enumerate_blocks(counter(2))[0]
    assert Truncation(0.1).applies_to(b) and not Memoization(0.1).applies_to(b)


def test_random_loops_get_distinct_seeds():
    p = parse_source("func main() { for (int i = 0; i < 5; i = i + 1) { } for (int j = 0; j < 5; j = j + 1) { } }")
    blocks = enumerate_blocks(p)
    q = apply_config(p, blocks, ApproxConfig(RandomSkip(0.5, 3), None, seed=10))
    seeds = [node.approx.seed for _, node in n.walk(q.function("main").body) if isinstance(node, n.For)]
    assert seeds == [13, 14]


def test_identity_config_is_identity(benchmarks):
    for bm in benchmarks.values():
        p = bm.program()
        blocks = enumerate_blocks(p)
        for tech in (Truncation(0.0), Sampling(1), RandomSkip(0.0)):
            assert apply_config(p, blocks, ApproxConfig(tech, None)) == p


def strip_approx(body):
    for path, node in list(n.walk(body)):
        if isinstance(node, (n.For, n.While)) and node.approx is not None:
            body = n.replace_at(body, path, replace(node, approx=None))
    return body


def test_transform_touches_only_target(benchmarks):
    p = benchmarks["susan"].program()
    blocks = enumerate_blocks(p)
    target = [b for b in blocks if b.kind == COUNTED_LOOP][-1]
    q = apply_truncation(p, target, 0.4)
    changed = [path for (path, a), (_, b) in zip(n.walk(p.function("main").body), n.walk(q.function("main").body))
               if isinstance(a, (n.For, n.While)) and a.approx != b.approx]
    assert changed == [target.path]
    assert strip_approx(q.function("main").body) == p.function("main").body
    assert q.function("similarity") == p.function("similarity")
