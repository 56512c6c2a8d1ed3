"""Monotone Boolean circuits with hash-consed, shared structure.

Gates are interned: building the same gate twice returns the same object, so
identity comparison is structural equality and repeated subexpressions are
stored once.  A :class:`BoolMap` bundles ``n`` output gates over inputs
``x_1..x_n`` and stands for a monotone map ``{0,1}^n -> {0,1}^n``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Iterable, Sequence

BitVec = tuple[int, ...]

INPUT, AND, OR, CONST = "x", "and", "or", "const"


class Gate:
    __slots__ = ("op", "arg", "children", "__weakref__")

    def __init__(self, op: str, arg: int, children: tuple["Gate", ...]):
        self.op = op
        self.arg = arg
        self.children = children

    def __repr__(self) -> str:
        return f"Gate<{render(self)}>"

    def __reduce__(self):
        return _make, (self.op, self.arg, self.children)


_interned: "weakref.WeakValueDictionary[tuple, Gate]" = weakref.WeakValueDictionary()


def _make(op: str, arg: int, children: tuple[Gate, ...]) -> Gate:
    key = (op, arg, tuple(id(c) for c in children))
    g = _interned.get(key)
    if g is None:
        g = Gate(op, arg, children)
        _interned[key] = g
    return g


def var(i: int) -> Gate:
    """Input gate reading ``x_{i+1}`` (0-based index)."""
    if i < 0:
        raise ValueError("input index must be nonnegative")
    return _make(INPUT, i, ())


def const(b: int) -> Gate:
    return _make(CONST, int(bool(b)), ())


def and_(*children: Gate) -> Gate:
    if not children:
        raise ValueError("And gate needs at least one child")
    return _make(AND, 0, tuple(children))


def or_(*children: Gate) -> Gate:
    if not children:
        raise ValueError("Or gate needs at least one child")
    return _make(OR, 0, tuple(children))


def iter_gates(roots: Iterable[Gate]) -> list[Gate]:
    """All gates reachable from ``roots``, children before parents."""
    order: list[Gate] = []
    seen: set[int] = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            g, expanded = stack.pop()
            if expanded:
                order.append(g)
                continue
            if id(g) in seen:
                continue
            seen.add(id(g))
            stack.append((g, True))
            stack.extend((c, False) for c in g.children if id(c) not in seen)
    return order


def max_input(roots: Iterable[Gate]) -> int:
    """Largest input index used, or -1."""
    return max((g.arg for g in iter_gates(roots) if g.op == INPUT), default=-1)


def eval_gates(roots: Sequence[Gate], x: Sequence[int]) -> BitVec:
    val: dict[int, int] = {}
    for g in iter_gates(roots):
        if g.op == INPUT:
            v = x[g.arg]
        elif g.op == CONST:
            v = g.arg
        elif g.op == AND:
            v = int(all(val[id(c)] for c in g.children))
        else:
            v = int(any(val[id(c)] for c in g.children))
        val[id(g)] = int(bool(v))
    return tuple(val[id(r)] for r in roots)


def truth_tables(roots: Sequence[Gate], n: int) -> list[int]:
    """Bit-parallel evaluation over all ``2**n`` inputs.

    Bit ``m`` of the returned integer for a root is its value at the input
    whose ``i``-th coordinate is bit ``i`` of ``m``.
    """
    full = (1 << (1 << n)) - 1
    tabs = input_tables(n)
    val: dict[int, int] = {}
    for g in iter_gates(roots):
        if g.op == INPUT:
            if g.arg >= n:
                raise ValueError(f"circuit reads x{g.arg + 1} beyond dimension {n}")
            v = tabs[g.arg]
        elif g.op == CONST:
            v = full if g.arg else 0
        elif g.op == AND:
            v = full
            for c in g.children:
                v &= val[id(c)]
        else:
            v = 0
            for c in g.children:
                v |= val[id(c)]
        val[id(g)] = v
    return [val[id(r)] for r in roots]


def input_tables(n: int) -> list[int]:
    """Truth table of each input variable over ``2**n`` assignments."""
    size = 1 << n
    full = (1 << size) - 1
    tabs = []
    for i in range(n):
        block = 1 << (i + 1)
        pattern = ((1 << (block // 2)) - 1) << (block // 2)
        tabs.append(pattern * (full // ((1 << block) - 1)))
    return tabs


def simplify(c: Gate, _memo: dict | None = None) -> Gate:
    """Constant folding, flattening, deduplication and absorption."""
    memo = {} if _memo is None else _memo
    for g in iter_gates([c]):
        if id(g) in memo:
            continue
        if g.op in (INPUT, CONST):
            memo[id(g)] = g
            continue
        op = g.op
        absorbing, neutral = (0, 1) if op == AND else (1, 0)
        kids: list[Gate] = []
        seen: set[int] = set()
        short = False
        pending = [memo[id(k)] for k in g.children]
        while pending:
            k = pending.pop(0)
            if k.op == op:
                pending[:0] = list(k.children)
                continue
            if k.op == CONST:
                if k.arg == absorbing:
                    short = True
                    break
                continue
            if id(k) not in seen:
                seen.add(id(k))
                kids.append(k)
        if short:
            memo[id(g)] = const(absorbing)
            continue
        # a & (a | b) = a  and  a | (a & b) = a
        kids = [k for k in kids
                if not (k.op != INPUT and any(id(gc) in seen for gc in k.children))]
        # inputs first, in index order; compound children keep their order
        kids.sort(key=lambda k: (0, k.arg) if k.op == INPUT else (1, 0))
        if not kids:
            memo[id(g)] = const(neutral)
        elif len(kids) == 1:
            memo[id(g)] = kids[0]
        else:
            memo[id(g)] = _make(op, 0, tuple(kids))
    return memo[id(c)]


def render(c: Gate) -> str:
    if c.op == INPUT:
        return f"(x {c.arg + 1})"
    if c.op == CONST:
        return f"(const {c.arg})"
    return f"({c.op} {' '.join(render(k) for k in c.children)})"


@dataclass(frozen=True)
class BoolMap:
    n: int
    outputs: tuple[Gate, ...]

    def __post_init__(self):
        if len(self.outputs) != self.n:
            raise ValueError(f"BoolMap of dimension {self.n} needs {self.n} outputs")
        if max_input(self.outputs) >= self.n:
            raise ValueError("circuit reads an input beyond the map dimension")

    def __call__(self, x: Sequence[int]) -> BitVec:
        return eval_map(self, x)

    def render(self) -> list[str]:
        return [render(g) for g in self.outputs]

    def tables(self) -> list[int]:
        return truth_tables(self.outputs, self.n)


def identity(n: int) -> BoolMap:
    return BoolMap(n, tuple(var(i) for i in range(n)))


def constant(n: int, b: int) -> BoolMap:
    return BoolMap(n, (const(b),) * n)


def from_gates(gates: Sequence[Gate]) -> BoolMap:
    return BoolMap(len(gates), tuple(gates))


def eval_map(g: BoolMap, x: Sequence[int]) -> BitVec:
    if len(x) != g.n:
        raise ValueError(f"input has {len(x)} bits, map has dimension {g.n}")
    return eval_gates(g.outputs, [int(bool(b)) for b in x])


def substitute(roots: Sequence[Gate], inputs: Sequence[Gate]) -> list[Gate]:
    """Replace input gate ``i`` by ``inputs[i]`` everywhere, keeping sharing."""
    new: dict[int, Gate] = {}
    for g in iter_gates(roots):
        if g.op == INPUT:
            new[id(g)] = inputs[g.arg]
        elif g.op == CONST:
            new[id(g)] = g
        else:
            new[id(g)] = _make(g.op, 0, tuple(new[id(c)] for c in g.children))
    return [new[id(r)] for r in roots]


def compose(f: BoolMap, g: BoolMap) -> BoolMap:
    """``x -> f(g(x))``."""
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    return BoolMap(f.n, tuple(substitute(f.outputs, g.outputs)))


def join_or(f: BoolMap, g: BoolMap) -> BoolMap:
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    return BoolMap(f.n, tuple(or_(a, b) for a, b in zip(f.outputs, g.outputs)))


def simplify_map(g: BoolMap) -> BoolMap:
    memo: dict = {}
    return BoolMap(g.n, tuple(simplify(c, memo) for c in g.outputs))


def bits(mask: int, n: int) -> BitVec:
    return tuple((mask >> i) & 1 for i in range(n))


def mask_of(x: Sequence[int]) -> int:
    return sum(1 << i for i, b in enumerate(x) if b)


def subset_of(x: Sequence[int]) -> tuple[int, ...]:
    return tuple(i for i, b in enumerate(x) if b)


def indicator(n: int, subset: Iterable[int]) -> BitVec:
    s = set(subset)
    return tuple(int(i in s) for i in range(n))
