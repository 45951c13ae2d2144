"""Approximation sites and the rewrites that approximate them.

Rewrites attach annotations (``@truncate``, ``@sample``, ``@random`` on loops,
``@memo`` on functions) so an approximated program is still ordinary ApproxC:
it pretty-prints, re-parses and runs on the same interpreter. Annotations do
not change NodePaths, so blocks found on the original program stay valid on
any rewritten version.
"""

from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .lang import nodes as n
from .lang.loops import counted_loop
from .lang.semantics import BUILTINS, ProgramInfo, check

COUNTED_LOOP = "CountedLoop"
GENERAL_LOOP = "GeneralLoop"
FUNCTION = "Function"


class TransformError(ValueError):
    pass


class NotCounted(TransformError):
    pass


class NotMemoizable(TransformError):
    pass


@dataclass(frozen=True)
class Block:
    id: str
    kind: str
    function: str
    path: n.NodePath
    memoizable: bool = False

    @property
    def is_loop(self) -> bool:
        return self.kind != FUNCTION

    @property
    def location(self) -> Tuple[str, n.NodePath]:
        return (self.function, self.path)

    def describe(self) -> str:
        where = f"{self.function}{list(self.path)}" if self.is_loop else self.function
        extra = " memoizable" if self.memoizable else ""
        return f"{self.id} {self.kind} {where}{extra}"


# -- analysis ------------------------------------------------------------------


def _loop_is_counted(info: ProgramInfo, fn: str, loop) -> bool:
    fi = info.functions[fn]

    def var_type(name):
        v = info.lookup(fi, name)
        return v.type if v is not None else None

    return counted_loop(loop, var_type, set(info.globals), set(info.functions)) is not None


def memoizable_functions(p: n.Program, info: Optional[ProgramInfo] = None) -> set:
    """Names of functions safe to memoize (greatest fixpoint over calls)."""
    info = info or check(p)
    calls: Dict[str, set] = {}
    ok = set()
    for fn in p.functions:
        local_ok = fn.ret != n.VOID and all(prm.type in (n.INT, n.FLOAT) for prm in fn.params)
        callees = set()
        for _, node in n.walk(fn.body):
            if isinstance(node, (n.Var, n.Index)) and node.name not in info.functions[fn.name].locals:
                local_ok = False  # global read or write
            elif isinstance(node, n.Call):
                if node.name.startswith("emit_"):
                    local_ok = False
                elif node.name not in BUILTINS:
                    callees.add(node.name)
            elif isinstance(node, n.Assign) and node.target.name in info.globals:
                local_ok = False
        calls[fn.name] = callees
        if local_ok:
            ok.add(fn.name)
    changed = True
    while changed:
        changed = False
        for name in list(ok):
            if not calls[name] <= ok:
                ok.discard(name)
                changed = True
    return ok


def is_memoizable(p: n.Program, fn: Union[Block, str]) -> bool:
    name = fn.function if isinstance(fn, Block) else fn
    if isinstance(fn, Block) and fn.kind != FUNCTION:
        raise TransformError(f"block {fn.id} is not a function")
    return name in memoizable_functions(p)


def enumerate_blocks(p: n.Program) -> List[Block]:
    """Every loop and every non-entry function, in source order.

    Each helper function is listed before the loops it contains; loops are
    listed in pre-order, so an outer loop precedes its inner loops.
    """
    info = check(p)
    memo_ok = memoizable_functions(p, info)
    blocks: List[Block] = []
    for fn in p.functions:
        if fn.name != "main":
            blocks.append(Block(f"b{len(blocks)}", FUNCTION, fn.name, (), fn.name in memo_ok))
        for path, node in n.walk(fn.body):
            if isinstance(node, (n.For, n.While)):
                kind = COUNTED_LOOP if _loop_is_counted(info, fn.name, node) else GENERAL_LOOP
                blocks.append(Block(f"b{len(blocks)}", kind, fn.name, path))
    return blocks


def find_block(blocks: Sequence[Block], block_id: str) -> Block:
    for b in blocks:
        if b.id == block_id:
            return b
    raise KeyError(f"no block {block_id!r}; known: {[b.id for b in blocks]}")


# -- rewriting -------------------------------------------------------------------


def _replace_function(p: n.Program, fn: n.FunctionDecl) -> n.Program:
    funcs = tuple(fn if f.name == fn.name else f for f in p.functions)
    out = replace(p, functions=funcs)
    check(out)
    return out


def _annotate_loop(p: n.Program, b: Block, approx: n.Perforation) -> n.Program:
    if not b.is_loop:
        raise TransformError(f"block {b.id} is not a loop")
    fn = p.function(b.function)
    loop = n.node_at(fn, b.path)
    if not isinstance(loop, (n.For, n.While)):
        raise TransformError(f"block {b.id} does not resolve to a loop")
    body = n.replace_at(fn.body, b.path, replace(loop, approx=approx))
    return _replace_function(p, replace(fn, body=body))


def apply_truncation(p: n.Program, b: Block, factor: float) -> n.Program:
    """Run only the first ceil((1 - factor) * N) of the loop's N iterations."""
    if not 0.0 <= factor < 1.0:
        raise ValueError("truncation factor must lie in [0, 1)")
    fn = p.function(b.function)
    loop = n.node_at(fn, b.path) if b.is_loop else None
    if not isinstance(loop, n.For) or not _loop_is_counted(check(p), b.function, loop):
        raise NotCounted(f"block {b.id} has no affine trip count")
    if factor == 0:
        return p
    return _annotate_loop(p, b, n.Perforation("truncate", float(factor)))


def apply_sampling(p: n.Program, b: Block, factor: int) -> n.Program:
    """Run the body only on iterations whose index is a multiple of ``factor``."""
    if isinstance(factor, bool) or int(factor) != factor or factor < 1:
        raise ValueError("sampling factor must be an integer >= 1")
    if factor == 1:
        return p
    return _annotate_loop(p, b, n.Perforation("sample", int(factor)))


def apply_random(p: n.Program, b: Block, threshold: float, seed: int = 0) -> n.Program:
    """Skip each iteration's body when a seeded uniform draw falls below ``threshold``."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError("random threshold must lie in [0, 1)")
    if threshold == 0:
        return p
    return _annotate_loop(p, b, n.Perforation("random", float(threshold), int(seed)))


def apply_memoization(p: n.Program, b: Block, tolerance: float, capacity: int = 16) -> n.Program:
    """Cache results keyed by arguments, hitting within ``tolerance`` per argument."""
    if b.kind != FUNCTION:
        raise NotMemoizable(f"block {b.id} is not a function")
    if tolerance < 0 or capacity < 1:
        raise ValueError("memoization needs tolerance >= 0 and capacity >= 1")
    if not is_memoizable(p, b.function):
        raise NotMemoizable(f"function {b.function!r} reads globals, emits, or calls unsafe code")
    fn = p.function(b.function)
    return _replace_function(p, replace(fn, memo=n.Memo(float(tolerance), int(capacity))))


# -- techniques and configurations ---------------------------------------------------


@dataclass(frozen=True)
class Truncation:
    factor: float
    name = "truncation"

    @property
    def intensity(self):
        return self.factor

    def applies_to(self, b: Block) -> bool:
        return b.kind == COUNTED_LOOP

    def apply(self, p, b, seed=0):
        return apply_truncation(p, b, self.factor)


@dataclass(frozen=True)
class Sampling:
    factor: int
    name = "sampling"

    @property
    def intensity(self):
        return self.factor

    def applies_to(self, b: Block) -> bool:
        return b.is_loop

    def apply(self, p, b, seed=0):
        return apply_sampling(p, b, self.factor)


@dataclass(frozen=True)
class RandomSkip:
    threshold: float
    seed: int = 0
    name = "random"

    @property
    def intensity(self):
        return self.threshold

    def applies_to(self, b: Block) -> bool:
        return b.is_loop

    def apply(self, p, b, seed=0):
        return apply_random(p, b, self.threshold, self.seed + seed)


@dataclass(frozen=True)
class Memoization:
    tolerance: float
    capacity: int = 16
    name = "memoization"

    @property
    def intensity(self):
        return self.tolerance

    def applies_to(self, b: Block) -> bool:
        return b.kind == FUNCTION and b.memoizable

    def apply(self, p, b, seed=0):
        return apply_memoization(p, b, self.tolerance, self.capacity)


LOOP_TECHNIQUES = {"truncation": Truncation, "sampling": Sampling, "random": RandomSkip}
MEMO_TECHNIQUES = {"memoization": Memoization}


def make_technique(name: str, intensity, seed: int = 0, capacity: int = 16):
    if name == "truncation":
        return Truncation(float(intensity))
    if name == "sampling":
        return Sampling(int(intensity))
    if name == "random":
        return RandomSkip(float(intensity), seed)
    if name == "memoization":
        return Memoization(float(intensity), capacity)
    raise ValueError(f"unknown technique {name!r}")


@dataclass(frozen=True)
class ApproxConfig:
    loop_technique: object = None
    memo_technique: object = None
    seed: int = 0

    def to_dict(self) -> dict:
        lt, mt = self.loop_technique, self.memo_technique
        return {
            "loop_technique": lt.name if lt else None,
            "loop_intensity": lt.intensity if lt else None,
            "memo_technique": mt.name if mt else None,
            "memo_intensity": mt.intensity if mt else None,
            "memo_capacity": mt.capacity if mt else None,
            "seed": self.seed,
        }


def apply_technique(p: n.Program, blocks: Iterable[Block], technique, seed: int = 0) -> n.Program:
    """Apply one technique to every block it applies to; random loops get
    distinct seeds derived from ``seed`` and their position."""
    out = p
    for i, b in enumerate(blocks):
        if technique is not None and technique.applies_to(b):
            out = technique.apply(out, b, seed + i)
    return out


def apply_config(p: n.Program, blocks: Sequence[Block], config: ApproxConfig) -> n.Program:
    out = apply_technique(p, [b for b in blocks if b.is_loop], config.loop_technique, config.seed)
    return apply_technique(out, [b for b in blocks if not b.is_loop], config.memo_technique, config.seed)
