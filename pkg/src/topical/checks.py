"""Deciding facial, graphical and partial irreducibility, indecomposability and
imperturbability of power-mean maps.

Every condition is decided from the Boolean signatures of the map.  Three
independent engines are available: a SAT encoding solved by
:func:`topical.satcnf.solve`, exhaustive enumeration (bit-parallel over all
subsets), and graph algorithms on the arc graph G(f).
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field
from typing import Sequence

from . import boolfn as bf
from .boolfn import BitVec, BoolMap
from .expr import Compose, DiagScale, Entries, LinComb, MapExpr, Sum, Var, iter_avgs, validate
from .satcnf import CnfBuilder, CnfFormula, Tseitin, SAT, UNKNOWN, solve, DEFAULT_MAX_DECISIONS
from .signature import lower_signature, upper_signature

HOLDS, FAILS, VERDICT_UNKNOWN = "holds", "fails", "unknown"
ENGINES = ("sat", "brute", "graph", "fastpath", "auto")

AUTO_BRUTE_MAX_N = 16
AUTO_BRUTE_MAX_N_PAIRS = 10
BRUTE_CAP = 20


class Condition(str, enum.Enum):
    FACIAL = "facial"
    GRAPHICAL = "graphical"
    PARTIAL = "partial"
    INDECOMPOSABLE = "indecomposable"
    IMPERTURBABLE = "imperturbable"


class MapClass(str, enum.Enum):
    PLUS = "M+"      # every exponent >= 0
    MINUS = "M-"     # every exponent < 0
    MIXED = "M"


def fmt_set(bits: Sequence[int]) -> str:
    return "{" + ",".join(str(i + 1) for i, b in enumerate(bits) if b) + "}"


@dataclass(frozen=True)
class CheckReport:
    condition: Condition
    verdict: str
    engine: str
    witness: tuple[BitVec, ...] | None = None
    elapsed: float = 0.0
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def fields(self) -> dict:
        d = {
            "condition": self.condition.value,
            "verdict": self.verdict,
            "engine": self.engine,
            "witness": None,
            "time_ms": round(self.elapsed * 1000, 3),
        }
        if self.witness is not None:
            names = ("I", "J") if len(self.witness) == 2 else ("J",)
            d["witness"] = {k: fmt_set(w) for k, w in zip(names, self.witness)}
        if self.note:
            d["note"] = self.note
        return d

    def to_text(self) -> str:
        d = self.fields()
        w = d.pop("witness")
        lines = [f"{k}: {v}" for k, v in d.items()]
        if w:
            lines.insert(3, "witness: " + " ".join(f"{k}={v}" for k, v in w.items()))
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({"type": "check", **self.fields()}, sort_keys=True)


# --- arc graph --------------------------------------------------------------

@dataclass(frozen=True)
class Digraph:
    """Directed graph on nodes ``0..n-1``; arc ``i -> j`` when output i
    blows up as input j does."""

    n: int
    succ: tuple[tuple[int, ...], ...]
    sccs: tuple[tuple[int, ...], ...] = field(init=False)
    component: tuple[int, ...] = field(init=False)
    final_classes: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        sccs = tarjan_scc(self.n, self.succ)
        comp = [0] * self.n
        for k, c in enumerate(sccs):
            for v in c:
                comp[v] = k
        finals = tuple(c for k, c in enumerate(sccs)
                       if all(comp[w] == k for v in c for w in self.succ[v]))
        object.__setattr__(self, "sccs", tuple(sccs))
        object.__setattr__(self, "component", tuple(comp))
        object.__setattr__(self, "final_classes", finals)

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self.succ[i]]

    @property
    def strongly_connected(self) -> bool:
        return len(self.sccs) == 1

    def condensation(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {k: set() for k in range(len(self.sccs))}
        for i, j in self.arcs:
            a, b = self.component[i], self.component[j]
            if a != b:
                out[a].add(b)
        return out

    def to_dot(self, name: str = "G") -> str:
        finals = {c for c in self.final_classes}
        lines = [f"digraph {name} {{"]
        for k, c in enumerate(self.sccs):
            lines.append(f"  subgraph cluster_{k} {{")
            label = "final class" if c in finals else "class"
            lines.append(f'    label="{label} {fmt_set(bf.indicator(self.n, c))}";')
            if c in finals:
                lines.append("    style=bold;")
            for v in c:
                attr = ' [final=true, peripheries=2]' if c in finals else ""
                lines.append(f"    {v + 1}{attr};")
            lines.append("  }")
        for i, j in self.arcs:
            lines.append(f"  {i + 1} -> {j + 1};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def tarjan_scc(n: int, succ: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Strongly connected components, emitted in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[tuple[int, ...]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(tuple(sorted(comp)))
    return out


def graph_from_signature(upper: BoolMap) -> Digraph:
    n = upper.n
    succ: list[list[int]] = [[] for _ in range(n)]
    for j in range(n):
        col = bf.eval_map(upper, bf.indicator(n, [j]))
        for i in range(n):
            if col[i]:
                succ[i].append(j)
    return Digraph(n, tuple(tuple(s) for s in succ))


def adjacency_graph(f: MapExpr) -> Digraph:
    return graph_from_signature(upper_signature(f))


def _arc_map(upper: BoolMap) -> BoolMap:
    """Or-linearization of the upper signature: entry i is the Or of its arcs."""
    g = graph_from_signature(upper)
    outs = []
    for i in range(g.n):
        kids = [bf.var(j) for j in g.succ[i]]
        outs.append(bf.const(0) if not kids else kids[0] if len(kids) == 1 else bf.or_(*kids))
    return BoolMap(g.n, tuple(outs))


# --- witness checks ---------------------------------------------------------

def _le(a: Sequence[int], b: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def verify_witness(condition: Condition, lower: BoolMap, upper: BoolMap,
                   witness: Sequence[BitVec]) -> bool:
    """Direct evaluation of the defining inequalities at a reported witness."""
    n = lower.n
    if condition is Condition.IMPERTURBABLE:
        x, y = witness
        return (any(x) and not all(y) and _le(x, y)
                and _le(x, bf.eval_map(lower, x)) and _le(bf.eval_map(upper, y), y))
    (x,) = witness
    if len(x) != n or not any(x) or all(x):
        return False
    if condition is Condition.FACIAL:
        return _le(bf.eval_map(lower, x), x)
    if condition is Condition.INDECOMPOSABLE:
        return _le(bf.eval_map(upper, x), x)
    if condition is Condition.PARTIAL:
        return bf.eval_map(lower, x) == tuple(x)
    # graphical: no arc from outside the set into it
    for j in (k for k in range(n) if x[k]):
        col = bf.eval_map(upper, bf.indicator(n, [j]))
        if any(col[i] and not x[i] for i in range(n)):
            return False
    return True


# --- SAT encodings ----------------------------------------------------------

def _post_fixed(b: CnfBuilder, xs: list[int], lits: list[int], equal: bool) -> None:
    for x, o in zip(xs, lits):
        b.add(x, -o)            # g(x)_i <= x_i
        if equal:
            b.add(-x, o)        # x_i <= g(x)_i


def encode(condition: Condition, lower: BoolMap, upper: BoolMap) -> CnfFormula:
    """CNF that is satisfiable exactly when ``condition`` fails.

    Variables 1..n hold x; for imperturbability n+1..2n hold y; Tseitin
    auxiliaries follow.
    """
    condition = Condition(condition)
    n = lower.n
    if n < 2 or upper.n != n:
        raise ValueError("encodings need two signatures of equal dimension n >= 2")
    b = CnfBuilder()
    xs = b.reserve(n, "x")
    if condition is Condition.IMPERTURBABLE:
        ys = b.reserve(n, "y")
        b.add(*xs)
        b.add(*(-y for y in ys))
        for x, y in zip(xs, ys):
            b.add(-x, y)
        enc = Tseitin(b)
        lo = [enc.literal(g, 1) for g in lower.outputs]
        up = [enc.literal(g, n + 1) for g in upper.outputs]
        for x, o in zip(xs, lo):
            b.add(-x, o)
        for y, o in zip(ys, up):
            b.add(y, -o)
        return b.build()

    b.add(*xs)
    b.add(*(-x for x in xs))
    if condition is Condition.GRAPHICAL:
        g = graph_from_signature(upper)
        for i, j in g.arcs:
            if i != j:
                b.add(xs[i], -xs[j])
        return b.build()
    sig = upper if condition is Condition.INDECOMPOSABLE else lower
    enc = Tseitin(b)
    outs = [enc.literal(g, 1) for g in sig.outputs]
    _post_fixed(b, xs, outs, equal=condition is Condition.PARTIAL)
    return b.build()


# --- exhaustive enumeration -------------------------------------------------

def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _below_set(tables: list[int], inputs: list[int], full: int) -> int:
    """Assignments x with g(x) <= x."""
    bad = 0
    for t, v in zip(tables, inputs):
        bad |= t & ~v
    return full & ~bad


def _above_set(tables: list[int], inputs: list[int], full: int) -> int:
    """Assignments x with g(x) >= x."""
    bad = 0
    for t, v in zip(tables, inputs):
        bad |= v & ~t
    return full & ~bad


def _down_closure(s: int, inputs: list[int], n: int) -> int:
    """Masks contained in some member of ``s``."""
    for i in range(n):
        s |= (s >> (1 << i)) & ~inputs[i]
    return s


def brute_force(condition: Condition, lower: BoolMap, upper: BoolMap,
                cap: int = BRUTE_CAP) -> CheckReport:
    """Enumerate every nontrivial subset (pairs for imperturbability)."""
    condition = Condition(condition)
    t0 = time.perf_counter()
    n = lower.n
    if n > cap:
        raise ValueError(f"brute force capped at n <= {cap}, got n = {n}")
    full = (1 << (1 << n)) - 1
    top = (1 << n) - 1
    inputs = bf.input_tables(n)
    witness = None
    if condition is Condition.IMPERTURBABLE:
        subs = _above_set(lower.tables(), inputs, full) & ~1
        sups = _below_set(upper.tables(), inputs, full) & ~(1 << top)
        cand = subs & _down_closure(sups, inputs, n)
        if cand:
            x = _lowest(cand)
            rest = sups
            while rest:
                y = _lowest(rest)
                if x & ~y == 0:
                    break
                rest &= rest - 1
            witness = (bf.bits(x, n), bf.bits(y, n))
    else:
        nontrivial = full & ~1 & ~(1 << top)
        if condition is Condition.FACIAL:
            good = _below_set(lower.tables(), inputs, full)
        elif condition is Condition.INDECOMPOSABLE:
            good = _below_set(upper.tables(), inputs, full)
        elif condition is Condition.PARTIAL:
            tabs = lower.tables()
            good = _below_set(tabs, inputs, full) & _above_set(tabs, inputs, full)
        else:
            good = _below_set(_arc_map(upper).tables(), inputs, full)
        good &= nontrivial
        if good:
            witness = (bf.bits(_lowest(good), n),)
    return _report(condition, lower, upper, witness, "brute", t0)


def _report(condition, lower, upper, witness, engine, t0, note="") -> CheckReport:
    if witness is not None and not verify_witness(condition, lower, upper, witness):
        raise RuntimeError(f"{engine} engine produced a witness that does not verify")
    verdict = HOLDS if witness is None else FAILS
    return CheckReport(condition, verdict, engine, witness, time.perf_counter() - t0, note)


def sat_check(condition: Condition, lower: BoolMap, upper: BoolMap,
              max_decisions: int = DEFAULT_MAX_DECISIONS) -> CheckReport:
    condition = Condition(condition)
    t0 = time.perf_counter()
    n = lower.n
    F = encode(condition, lower, upper)
    res = solve(F, max_decisions)
    if res.status == UNKNOWN:
        return CheckReport(condition, VERDICT_UNKNOWN, "sat", None, time.perf_counter() - t0,
                           f"decision cap {max_decisions} exceeded")
    witness = None
    if res.status == SAT:
        x = tuple(int(res.model[v]) for v in range(1, n + 1))
        if condition is Condition.IMPERTURBABLE:
            y = tuple(int(res.model[v]) for v in range(n + 1, 2 * n + 1))
            witness = (x, y)
        else:
            witness = (x,)
    return _report(condition, lower, upper, witness, "sat", t0)


def graph_check(lower: BoolMap, upper: BoolMap) -> CheckReport:
    t0 = time.perf_counter()
    g = graph_from_signature(upper)
    witness = None
    if not g.strongly_connected:
        final = g.final_classes[0]
        witness = (tuple(int(i not in final) for i in range(g.n)),)
    return _report(Condition.GRAPHICAL, lower, upper, witness, "graph", t0)


# --- m-convex fast path -----------------------------------------------------

def classify_class(f: MapExpr) -> MapClass:
    """Sign pattern of every power-mean exponent (plain variables count as r=1)."""
    validate(f)
    exps = [a.r for a in iter_avgs(f)]
    if _has_var(f):
        exps.append(1.0)
    if all(r >= 0 for r in exps):
        return MapClass.PLUS
    if all(r < 0 for r in exps):
        return MapClass.MINUS
    return MapClass.MIXED


def _has_var(f) -> bool:
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            return True
        if isinstance(node, Entries):
            stack.extend(node.scalars)
        elif isinstance(node, LinComb):
            stack.extend(s for _, s in node.terms)
        elif isinstance(node, Compose):
            stack.extend((node.outer, node.inner))
        elif isinstance(node, Sum):
            stack.extend((node.f, node.g))
        elif isinstance(node, DiagScale):
            stack.append(node.f)
    return False


def _greatest_sub_fixed(lower: BoolMap, y: BitVec) -> BitVec:
    """Largest x <= y with lower(x) >= x."""
    x = y
    while True:
        nxt = tuple(a & b for a, b in zip(x, bf.eval_map(lower, x)))
        if nxt == x:
            return x
        x = nxt


def imperturbable_fastpath_mconvex(f: MapExpr, lower: BoolMap | None = None,
                                   upper: BoolMap | None = None) -> CheckReport:
    """Imperturbability of an m-convex map from its arc graph.

    Holds iff G(f) has one final class I and iterating the lower signature
    from the indicator of the complement of I reaches zero.
    """
    t0 = time.perf_counter()
    if classify_class(f) is not MapClass.PLUS:
        raise ValueError("fast path requires every exponent to be nonnegative")
    lower = lower_signature(f) if lower is None else lower
    upper = upper_signature(f) if upper is None else upper
    n = lower.n
    g = graph_from_signature(upper)
    cond = Condition.IMPERTURBABLE
    if n == 1:
        return _report(cond, lower, upper, None, "fastpath", t0)
    finals = g.final_classes
    if len(finals) == 1:
        x = tuple(int(i not in finals[0]) for i in range(n))
        seen = set()
        while any(x) and x not in seen:
            seen.add(x)
            x = bf.eval_map(lower, x)
        if not any(x):
            return _report(cond, lower, upper, None, "fastpath", t0)
    # imperturbability fails; look for a witness below the complement of a final class
    for final in finals:
        y = tuple(int(i not in final) for i in range(n))
        x = _greatest_sub_fixed(lower, y)
        if any(x) and verify_witness(cond, lower, upper, (x, y)):
            return _report(cond, lower, upper, (x, y), "fastpath", t0)
    sat = sat_check(cond, lower, upper)
    if sat.verdict != FAILS:
        raise RuntimeError("fast path verdict contradicts the SAT encoding")
    return _report(cond, lower, upper, sat.witness, "fastpath", t0, note="witness from sat engine")


# --- dispatch ---------------------------------------------------------------

def resolve_engine(condition: Condition, n: int, engine: str) -> str:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if engine != "auto":
        return engine
    if condition is Condition.GRAPHICAL:
        return "graph"
    limit = AUTO_BRUTE_MAX_N_PAIRS if condition is Condition.IMPERTURBABLE else AUTO_BRUTE_MAX_N
    return "brute" if n <= limit else "sat"


def check(f: MapExpr, condition: Condition, engine: str = "auto", *,
          lower: BoolMap | None = None, upper: BoolMap | None = None,
          max_decisions: int = DEFAULT_MAX_DECISIONS, brute_cap: int = BRUTE_CAP) -> CheckReport:
    """Decide one condition for the map ``f`` with the chosen engine."""
    condition = Condition(condition)
    n = validate(f)
    engine = resolve_engine(condition, n, engine)
    if engine == "graph" and condition is not Condition.GRAPHICAL:
        raise ValueError("the graph engine only decides graphical irreducibility")
    if engine == "fastpath" and condition is not Condition.IMPERTURBABLE:
        raise ValueError("the fast path only decides imperturbability")
    lower = lower_signature(f) if lower is None else lower
    upper = upper_signature(f) if upper is None else upper
    if n == 1:
        return CheckReport(condition, HOLDS, engine, None, 0.0, "n = 1: no nontrivial proper subsets")
    if engine == "fastpath":
        return imperturbable_fastpath_mconvex(f, lower, upper)
    if engine == "graph":
        return graph_check(lower, upper)
    if engine == "brute":
        return brute_force(condition, lower, upper, cap=brute_cap)
    return sat_check(condition, lower, upper, max_decisions)
