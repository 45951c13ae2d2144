"""Execution engine with cycle accounting and snapshot/restore."""

import math
from typing import List, Optional, Tuple

from .compiler import (
    ARRINIT, BINF, BINI, CALL, CASTF, CASTI, CMP, CONST, EMIT_NUM, EMIT_PIX,
    EMIT_WORD, IN_CHAR, IN_LEN, IN_NUM, IN_PIX, IN_TLEN, INTR, JF, JMP, JT,
    LOADEL, LOADG, LOADL, NEG, NOT, POP, RAND_GUARD, RET, SAMPLE_GUARD, SETL,
    STOREEL, STOREG, STOREL, TOBOOL, TOFLOAT, TRIGGER, TRUNC_GUARD, TRUNC_INIT,
    CompiledProgram,
)
from .inputs import InputCase, ProgramOutput
from ..lang.loops import trip_count, truncated_count

MASK64 = (1 << 64) - 1
INT_MIN, INT_MAX = -(1 << 63), (1 << 63) - 1
MAX_FRAMES = 256

RUNNING, HALTED, TRIGGERED = "running", "halted", "trigger"


class RuntimeFault(Exception):
    """A trapped fault; ``path`` is (function name, NodePath)."""

    def __init__(self, message: str, path: Optional[tuple] = None):
        self.path = path
        where = f" at {path[0]}{list(path[1])}" if path else ""
        super().__init__(message + where)


class OutOfBounds(RuntimeFault):
    pass


class DivisionByZero(RuntimeFault):
    pass


class StackOverflow(RuntimeFault):
    pass


class WatchdogExceeded(RuntimeFault):
    pass


# -- PRNG (xorshift64*), state kept in a global slot ----------------------------


def seed_rng(seed: int) -> int:
    # splitmix64 finaliser so small or zero seeds give a usable nonzero state
    z = (seed + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z or 0x2545F4914F6CDD1D


def rng_next(state: int) -> Tuple[int, float]:
    """Advance the generator; return (new_state, u in [0, 1))."""
    x = state
    x ^= (x >> 12)
    x ^= (x << 25) & MASK64
    x ^= (x >> 27)
    out = (x * 0x2545F4914F6CDD1D) & MASK64
    return x, (out >> 11) * (1.0 / (1 << 53))


# -- state ---------------------------------------------------------------------


class Frame:
    __slots__ = ("fn", "pc", "locals", "stack", "memo_key")

    def __init__(self, fn: int, locals_: list, memo_key=None):
        self.fn = fn
        self.pc = 0
        self.locals = locals_
        self.stack: list = []
        self.memo_key = memo_key

    def copy(self) -> "Frame":
        f = Frame(self.fn, [list(v) if type(v) is list else v for v in self.locals], self.memo_key)
        f.pc = self.pc
        f.stack = list(self.stack)
        return f


class ExecState:
    """Everything a checkpoint must preserve."""

    __slots__ = ("frames", "globals", "numbers", "words", "image", "memo", "cycles", "halted")

    def __init__(self, frames, globals_, image_size: int):
        self.frames: List[Frame] = frames
        self.globals = globals_
        self.numbers: list = []
        self.words: list = []
        self.image = [0] * image_size
        self.memo: dict = {}
        self.cycles = 0
        self.halted = False

    def copy(self) -> "ExecState":
        s = ExecState.__new__(ExecState)
        s.frames = [f.copy() for f in self.frames]
        s.globals = [list(v) if type(v) is list else v for v in self.globals]
        s.numbers = list(self.numbers)
        s.words = list(self.words)
        s.image = list(self.image)
        s.memo = {k: list(v) for k, v in self.memo.items()}
        s.cycles = self.cycles
        s.halted = self.halted
        return s

    def fingerprint(self) -> tuple:
        """Hashable summary used to compare states in tests."""
        return (
            tuple((f.fn, f.pc, repr(f.locals), repr(f.stack), f.memo_key) for f in self.frames),
            repr(self.globals), tuple(self.numbers), tuple(self.words), tuple(self.image),
            repr(sorted(self.memo.items())), self.cycles, self.halted,
        )


class Checkpoint:
    """Immutable saved execution state."""

    __slots__ = ("_state",)

    def __init__(self, state: ExecState):
        self._state = state.copy()

    @property
    def cycles(self) -> int:
        return self._state.cycles

    def restore(self) -> ExecState:
        return self._state.copy()


def snapshot(state: ExecState) -> Checkpoint:
    return Checkpoint(state)


def restore(ck: Checkpoint) -> ExecState:
    return ck.restore()


def _wrap(v: int) -> int:
    if INT_MIN <= v <= INT_MAX:
        return v
    return ((v - INT_MIN) & MASK64) + INT_MIN


def _idiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _to_int(v) -> int:
    if type(v) is int:
        return v
    if math.isnan(v):
        return 0
    if math.isinf(v):
        return INT_MAX if v > 0 else INT_MIN
    return _wrap(int(v))


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _sqrt(x):
    return math.sqrt(x) if x >= 0 else math.nan


def _abs(x):
    # abs(INT_MIN) wraps back to INT_MIN, as on two's-complement hardware
    return _wrap(abs(x)) if type(x) is int else abs(x)


_INTRINSICS = {"abs": _abs, "min": min, "max": max, "exp": _exp, "sqrt": _sqrt}


class Machine:
    """Runs a compiled program against one input case."""

    def __init__(self, compiled: CompiledProgram, case: InputCase):
        self.cp = compiled
        self.case = case
        self.codes = [f.code for f in compiled.functions]
        plat = compiled.platform
        self.memo_base = plat.memo_lookup_base_cycles
        self.memo_scan = plat.memo_scan_cycles_per_entry
        out = compiled.output
        self.img_rows, self.img_cols = (out.rows, out.cols) if out.kind == "image" else (0, 0)
        self.state = self.initial_state()
        # called as observer(function_name, args) on every user-function call
        self.call_observer = None

    def initial_state(self) -> ExecState:
        main = self.cp.main
        return ExecState([Frame(main.index, main.new_locals())], self.cp.new_globals(),
                         self.img_rows * self.img_cols)

    @property
    def halted(self) -> bool:
        return self.state.halted

    def output(self) -> ProgramOutput:
        s = self.state
        kind = self.cp.output.kind
        if kind == "numeric":
            return ProgramOutput("numeric", tuple(s.numbers))
        if kind == "text":
            return ProgramOutput("text", " ".join(s.words))
        c = self.img_cols
        return ProgramOutput("image", tuple(tuple(s.image[r * c:(r + 1) * c]) for r in range(self.img_rows)))

    def fault(self, cls, msg: str, frame: Frame, pc: int):
        fn = self.cp.functions[frame.fn]
        return cls(msg, (fn.name, fn.paths[max(pc - 1, 0)]))

    def run(self, budget: float, stop_at_trigger: bool = False) -> Tuple[int, str]:
        """Execute until ``budget`` cycles are used, the program halts, or (when
        ``stop_at_trigger``) a checkpoint trigger point is reached.

        The last instruction may overshoot the budget by its own cost.
        Returns ``(cycles_used, event)``.
        """
        st = self.state
        if st.halted:
            return 0, HALTED
        frames = st.frames
        frame = frames[-1]
        code = self.codes[frame.fn]
        stack = frame.stack
        locs = frame.locals
        glob = st.globals
        pc = frame.pc
        used = 0
        event = RUNNING
        push = stack.append
        pop = stack.pop
        case = self.case
        try:
            while used < budget:
                op, a, b, cost = code[pc]
                pc += 1
                used += cost
                if op == LOADL:
                    push(locs[a])
                elif op == CONST:
                    push(a)
                elif op == BINI:
                    y = pop()
                    x = pop()
                    if a == "+":
                        r = x + y
                    elif a == "-":
                        r = x - y
                    elif a == "*":
                        r = x * y
                    elif y == 0:
                        raise self.fault(DivisionByZero, "integer division by zero", frame, pc)
                    else:
                        q = _idiv(x, y)
                        r = q if a == "/" else x - y * q
                    push(r if INT_MIN <= r <= INT_MAX else _wrap(r))
                elif op == CMP:
                    y = pop()
                    x = pop()
                    if a == "<":
                        push(1 if x < y else 0)
                    elif a == "<=":
                        push(1 if x <= y else 0)
                    elif a == ">":
                        push(1 if x > y else 0)
                    elif a == ">=":
                        push(1 if x >= y else 0)
                    elif a == "==":
                        push(1 if x == y else 0)
                    else:
                        push(1 if x != y else 0)
                elif op == JF:
                    if not pop():
                        pc = a
                elif op == STOREL:
                    locs[a] = pop()
                elif op == JMP:
                    pc = a
                elif op == TRIGGER:
                    if stop_at_trigger:
                        event = TRIGGERED
                        break
                elif op == LOADG:
                    push(glob[a])
                elif op == STOREG:
                    glob[a] = pop()
                elif op == LOADEL or op == STOREEL:
                    is_g, dims = b
                    if op == STOREEL:
                        val = pop()
                    if len(dims) == 2:
                        j = pop()
                        i = pop()
                        if not (0 <= i < dims[0] and 0 <= j < dims[1]):
                            raise self.fault(OutOfBounds, f"index [{i}][{j}] outside {list(dims)}", frame, pc)
                        k = i * dims[1] + j
                    else:
                        k = pop()
                        if not 0 <= k < dims[0]:
                            raise self.fault(OutOfBounds, f"index [{k}] outside {list(dims)}", frame, pc)
                    arr = glob[a] if is_g else locs[a]
                    if op == LOADEL:
                        push(arr[k])
                    else:
                        arr[k] = val
                elif op == BINF:
                    y = pop()
                    x = pop()
                    if a == "+":
                        push(x + y)
                    elif a == "-":
                        push(x - y)
                    elif a == "*":
                        push(x * y)
                    elif y == 0:
                        raise self.fault(DivisionByZero, "float division by zero", frame, pc)
                    else:
                        push(x / y)
                elif op == TOFLOAT:
                    push(float(pop()))
                elif op == NEG:
                    x = -pop()
                    push(_wrap(x) if type(x) is int else x)
                elif op == NOT:
                    push(0 if pop() else 1)
                elif op == JT:
                    if pop():
                        pc = a
                elif op == TOBOOL:
                    push(1 if pop() else 0)
                elif op == POP:
                    pop()
                elif op == INTR:
                    if a == "min" or a == "max":
                        y = pop()
                        push(_INTRINSICS[a](pop(), y))
                    else:
                        push(_INTRINSICS[a](pop()))
                elif op == CASTI:
                    push(_to_int(pop()))
                elif op == CASTF:
                    push(float(pop()))
                elif op == IN_NUM:
                    i = pop()
                    nums = case.numbers
                    if not 0 <= i < len(nums):
                        raise self.fault(OutOfBounds, f"in_num({i}) outside {len(nums)} inputs", frame, pc)
                    push(float(nums[i]))
                elif op == IN_PIX:
                    c = pop()
                    r = pop()
                    img = case.image
                    if img is None or not (0 <= r < len(img) and 0 <= c < len(img[0])):
                        raise self.fault(OutOfBounds, f"in_pixel({r}, {c}) outside the input image", frame, pc)
                    push(img[r][c])
                elif op == IN_LEN:
                    push(len(case.numbers))
                elif op == IN_CHAR:
                    i = pop()
                    text = case.text or ""
                    if not 0 <= i < len(text):
                        raise self.fault(OutOfBounds, f"in_char({i}) outside the input text", frame, pc)
                    push(ord(text[i]))
                elif op == IN_TLEN:
                    push(len(case.text or ""))
                elif op == EMIT_NUM:
                    st.numbers.append(pop())
                elif op == EMIT_PIX:
                    v = pop()
                    c = pop()
                    r = pop()
                    if not (0 <= r < self.img_rows and 0 <= c < self.img_cols):
                        raise self.fault(OutOfBounds, f"emit_pixel({r}, {c}) outside the output image", frame, pc)
                    v = 0 if v != v else min(255.0, max(0.0, v))
                    st.image[r * self.img_cols + c] = int(v)
                elif op == EMIT_WORD:
                    k = pop()
                    table = self.cp.string_table
                    if not 0 <= k < len(table):
                        raise self.fault(OutOfBounds, f"emit_word({k}) outside the words table", frame, pc)
                    st.words.append(table[k])
                elif op == CALL:
                    callee = self.cp.functions[a]
                    args = tuple(stack[len(stack) - b:]) if b else ()
                    del stack[len(stack) - b:]
                    if self.call_observer is not None:
                        self.call_observer(callee.name, args)
                    memo = callee.memo
                    key = None
                    if memo is not None:
                        cache = st.memo.setdefault(a, [])
                        tol = memo.tolerance
                        hit = -1
                        for idx, (k_args, _) in enumerate(cache):
                            if all(abs(x - y) <= tol for x, y in zip(k_args, args)):
                                hit = idx
                                break
                        scanned = hit + 1 if hit >= 0 else len(cache)
                        lookup = self.memo_base + self.memo_scan * scanned
                        if hit >= 0:
                            # a hit replaces the call entirely
                            used += lookup - cost
                            entry = cache.pop(hit)
                            cache.insert(0, entry)
                            push(entry[1])
                            continue
                        used += lookup
                        key = args
                    if len(frames) >= MAX_FRAMES:
                        raise self.fault(StackOverflow, f"call depth exceeds {MAX_FRAMES}", frame, pc)
                    frame.pc = pc
                    locals_ = callee.new_locals()
                    locals_[:b] = args
                    frame = Frame(a, locals_, key)
                    frames.append(frame)
                    code = callee.code
                    stack = frame.stack
                    push = stack.append
                    pop = stack.pop
                    locs = frame.locals
                    pc = 0
                elif op == RET:
                    value = pop() if a else None
                    done = frames.pop()
                    if done.memo_key is not None:
                        cache = st.memo[done.fn]
                        cache.insert(0, (done.memo_key, value))
                        if len(cache) > self.cp.functions[done.fn].memo.capacity:
                            cache.pop()
                    if not frames:
                        frames.append(done)
                        done.pc = pc
                        st.halted = True
                        event = HALTED
                        break
                    frame = frames[-1]
                    code = self.codes[frame.fn]
                    stack = frame.stack
                    push = stack.append
                    pop = stack.pop
                    locs = frame.locals
                    pc = frame.pc
                    if a:
                        push(value)
                    if stop_at_trigger:
                        event = TRIGGERED
                        break
                elif op == SETL:
                    locs[a] = b
                elif op == ARRINIT:
                    locs[a] = list(b)
                elif op == TRUNC_INIT:
                    counter, limit = a
                    rel, step, factor = b
                    bound = pop()
                    start = pop()
                    locs[counter] = 0
                    locs[limit] = truncated_count(trip_count(start, rel, bound, step), factor)
                elif op == TRUNC_GUARD:
                    counter, limit = b
                    if locs[counter] >= locs[limit]:
                        pc = a
                    else:
                        locs[counter] += 1
                elif op == SAMPLE_GUARD:
                    counter, every = b
                    k = locs[counter]
                    locs[counter] = k + 1
                    if k % every:
                        pc = a
                elif op == RAND_GUARD:
                    slot, threshold = b
                    glob[slot], u = rng_next(glob[slot])
                    if u < threshold:
                        pc = a
                else:
                    raise RuntimeError(f"bad opcode {op}")
        finally:
            frame.pc = pc
            st.cycles += used
        return used, event


def run_continuous(program, case: InputCase, platform=None, cycle_budget: int = 10**7):
    """Run to completion without power failures.

    ``program`` may be a Program or a CompiledProgram. Returns
    ``(output, cycles)``; raises WatchdogExceeded past ``cycle_budget``.
    """
    from .compiler import CompiledProgram as _CP, compile_program
    from .platform import get_platform

    if cycle_budget <= 0:
        raise ValueError("cycle_budget must be positive")
    if not isinstance(program, _CP):
        program = compile_program(program, get_platform(platform or "cortex-m"))
    m = Machine(program, case)
    m.run(cycle_budget + 1)
    if not m.halted or m.state.cycles > cycle_budget:
        raise WatchdogExceeded(f"program exceeded {cycle_budget} cycles")
    return m.output(), m.state.cycles
