import pytest
from hypothesis import given, settings, strategies as st

from approxify.lang import SemanticError, SyntaxError, parse_source, pretty_print
from approxify.lang import nodes as n
from approxify.lang.loops import counted_loop, trip_count
from approxify.transform import apply_truncation, enumerate_blocks

MINIMAL = "func main() { emit_num(1 + 2); }"


def loops_in(fn):
    return [node for _, node in n.walk(fn.body) if isinstance(node, (n.For, n.While))]


def test_minimal_program():
    p = parse_source(MINIMAL)
    assert len(p.functions) == 1
    assert p.output_decl.kind == "numeric"


def test_susan_has_nested_image_loops(benchmarks):
    p = benchmarks["susan"].program()
    assert p.output_decl == n.OutputKind("image", 16, 16)
    main = p.function("main")
    nested = [path for path, node in n.walk(main.body)
              if isinstance(node, n.For) and any(isinstance(m, n.For) for _, m in n.walk(node.body))]
    assert nested


@pytest.mark.parametrize("src", [
    "func main() { x = 1; }",
    "func main() { int a = 1; float a = 2.0; }",
    "func main() { int a = 1.5; }",
    "func main() { emit_num(5.0 % 2.0); }",
    "func f(x: int) -> int { return 1.0; } func main() { emit_num(f(1)); }",
    "int a[0]; func main() { }",
    "func helper() { }",
    "func main() { emit_num(g(1)); }",
])
def test_semantic_errors(src):
    with pytest.raises(SemanticError):
        parse_source(src)


@pytest.mark.parametrize("src", ["func main() { emit_num(1 + ); }", "func main( {", "func main() { int 3x = 1; }"])
def test_syntax_errors_report_position(src):
    with pytest.raises(SyntaxError) as exc:
        parse_source(src)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_invalid_utf8_is_a_syntax_error():
    with pytest.raises(SyntaxError):
        parse_source(b"func main() { } \xff")


def test_round_trip_minimal():
    p = parse_source(MINIMAL)
    assert parse_source(pretty_print(p)) == p


@pytest.mark.parametrize("name", ["susan", "lqi", "strsearch"])
def test_round_trip_corpus(benchmarks, name):
    p = benchmarks[name].program()
    text = pretty_print(p)
    assert parse_source(text) == p
    # printing is a fixed point after one round
    assert pretty_print(parse_source(text)) == text


def test_round_trip_after_transform(benchmarks):
    p = benchmarks["susan"].program()
    b = [b for b in enumerate_blocks(p) if b.kind == "CountedLoop"][1]
    q = apply_truncation(p, b, 0.3)
    assert parse_source(pretty_print(q)) == q
    assert "@truncate(0.3)" in pretty_print(q)


def test_node_paths_survive_round_trip(benchmarks):
    p = benchmarks["strsearch"].program()
    q = parse_source(pretty_print(p))
    paths = [path for path, node in n.walk(p.function("main").body)]
    assert paths == [path for path, node in n.walk(q.function("main").body)]
    assert len(set(paths)) == len(paths)


def test_annotations_parse():
    src = """
    float cache[4];
    @memo(0.5, 8)
    func sq(x: float) -> float { return x * x; }
    func main() {
        @sample(2)
        for (int i = 0; i < 4; i = i + 1) { emit_num(sq(float(i))); }
        int k = 0;
        @random(0.25, 7)
        while (k < 3) { k = k + 1; }
    }
    """
    p = parse_source(src)
    assert p.function("sq").memo == n.Memo(0.5, 8)
    approx = [node.approx for node in loops_in(p.function("main"))]
    assert approx == [n.Perforation("sample", 2), n.Perforation("random", 0.25, 7)]
    assert parse_source(pretty_print(p)) == p


def test_text_output_and_words():
    p = parse_source('output text; words { "hello", "world" }; func main() { emit_word(1); emit_word(0); }')
    assert p.output_decl.kind == "text"
    assert p.string_table == ("hello", "world")


@pytest.mark.parametrize("start,op,bound,step,count", [
    (0, "<", 10, 1, 10), (10, ">=", 1, -1, 10), (0, "<=", 10, 3, 4), (5, "<", 5, 1, 0), (0, "<", 2.5, 1, 3),
])
def test_trip_count_formula(start, op, bound, step, count):
    assert trip_count(start, op, bound, step) == count


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 7), st.sampled_from(["<", "<=", ">", ">="]))
def test_trip_count_matches_simulation(start, bound, k, op):
    step = k if op in ("<", "<=") else -k
    cmp = {"<": int.__lt__, "<=": int.__le__, ">": int.__gt__, ">=": int.__ge__}[op]
    v, trips = start, 0
    while cmp(v, bound):
        v += step
        trips += 1
    assert trip_count(start, op, bound, step) == trips


@pytest.mark.parametrize("header", [
    "for (int i = 0; i < 10; i = i + 1)",
    "for (int i = 10; i >= 1; i = i - 1)",
    "for (int i = 0; i <= 10; i = i + 3)",
])
def test_for_loops_are_counted(header):
    p = parse_source(f"func main() {{ {header} {{ }} }}")
    loop = loops_in(p.function("main"))[0]
    assert counted_loop(loop, lambda name: "int", set(), {"main"}) is not None


def test_loop_writing_its_counter_is_not_counted():
    p = parse_source("func main() { for (int i = 0; i < 10; i = i + 1) { i = i + 1; } }")
    loop = loops_in(p.function("main"))[0]
    assert counted_loop(loop, lambda name: "int", set(), {"main"}) is None


# -- property: expression printing round-trips ----------------------------------------

_leaf = st.one_of(
    st.integers(0, 10**6).map(str),
    st.floats(0, 1e6, allow_nan=False).map(lambda v: repr(float(v))),
    st.sampled_from(["a", "b", "x"]),
)


def _combine(children):
    bin_ops = st.sampled_from(["+", "-", "*", "/", "<", "<=", "==", "!=", "&&", "||"])
    return st.one_of(
        st.tuples(children, bin_ops, children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"(0 - {c})"),
        children.map(lambda c: f"abs({c})"),
        st.tuples(children, children).map(lambda t: f"max({t[0]}, {t[1]})"),
    )


_exprs = st.recursive(_leaf, _combine, max_leaves=12)


@settings(max_examples=150, deadline=None)
@given(_exprs)
def test_expression_round_trip(expr):
    src = f"func main() {{ float a = 1.0; float b = 2.0; float x = 3.0; emit_num({expr}); }}"
    p = parse_source(src)
    text = pretty_print(p)
    assert parse_source(text) == p
