"""CNF formulas, Tseitin encoding of monotone circuits, a DPLL solver and DIMACS I/O.

Variables are positive integers, literals are signed integers (DIMACS style).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import boolfn as bf
from .boolfn import Gate

DEFAULT_MAX_DECISIONS = 10_000_000

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"

Clause = tuple[int, ...]
Assignment = dict[int, bool]


class DimacsError(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[Clause, ...]
    symbols: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for c in self.clauses:
            if not c:
                raise ValueError("clauses must be nonempty")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} outside 1..{self.num_vars}")


class CnfBuilder:
    """Mutable accumulator used while encoding; ``build()`` freezes it."""

    def __init__(self, num_vars: int = 0):
        self.num_vars = num_vars
        self.clauses: list[Clause] = []
        self.symbols: dict[str, int] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def reserve(self, count: int, prefix: str | None = None) -> list[int]:
        start = self.num_vars + 1
        self.num_vars += count
        idx = list(range(start, start + count))
        if prefix is not None:
            for k, v in enumerate(idx):
                self.symbols[f"{prefix}{k + 1}"] = v
        return idx

    def add(self, *lits: int) -> None:
        self.clauses.append(tuple(lits))

    def extend(self, clauses: Iterable[Sequence[int]]) -> None:
        self.clauses.extend(tuple(c) for c in clauses)

    def build(self) -> CnfFormula:
        return CnfFormula(self.num_vars, tuple(self.clauses), dict(self.symbols))


class Tseitin:
    """Encodes gates into a builder, one auxiliary variable per internal gate.

    Input gate ``i`` maps to variable ``input_var_base + i``.  Gates are
    memoized per base, so shared subcircuits are encoded once.
    """

    def __init__(self, builder: CnfBuilder):
        self.builder = builder
        self._lits: dict[tuple[int, int], int] = {}
        self._keep: list[Gate] = []

    def literal(self, root: Gate, input_var_base: int) -> int:
        b = self.builder
        for g in bf.iter_gates([root]):
            key = (id(g), input_var_base)
            if key in self._lits:
                continue
            if g.op == bf.INPUT:
                lit = input_var_base + g.arg
            elif g.op == bf.CONST:
                lit = b.new_var()
                b.add(lit if g.arg else -lit)
            else:
                kids = [self._lits[(id(c), input_var_base)] for c in g.children]
                lit = b.new_var()
                if g.op == bf.AND:
                    for c in kids:
                        b.add(-lit, c)
                    b.add(lit, *(-c for c in kids))
                else:
                    b.add(-lit, *kids)
                    for c in kids:
                        b.add(lit, -c)
            self._lits[key] = lit
            self._keep.append(g)
        return self._lits[(id(root), input_var_base)]


def circuit_to_cnf(circuits: Sequence[Gate], input_var_base: int = 1,
                   first_aux: int | None = None) -> tuple[CnfFormula, list[int]]:
    """Tseitin-encode ``circuits``; returns the clause fragment and output literals.

    Auxiliary variables start at ``first_aux`` (default: right after the
    highest input variable read by the circuits).
    """
    if first_aux is None:
        first_aux = input_var_base + bf.max_input(circuits) + 1
    builder = CnfBuilder(max(first_aux - 1, input_var_base + bf.max_input(circuits)))
    enc = Tseitin(builder)
    outs = [enc.literal(c, input_var_base) for c in circuits]
    return builder.build(), outs


# --- solver -----------------------------------------------------------------

@dataclass(frozen=True)
class SolveResult:
    status: str
    model: Assignment | None = None
    decisions: int = 0

    @property
    def sat(self) -> bool:
        return self.status == SAT


def solve(F: CnfFormula, max_decisions: int = DEFAULT_MAX_DECISIONS) -> SolveResult:
    """Complete DPLL search with two watched literals.

    Branches on the lowest-index unassigned variable, value 1 first, so the
    returned model is deterministic.  Exceeding ``max_decisions`` yields
    status ``"unknown"``.
    """
    nv = F.num_vars
    # literal index: 2*v for v, 2*v+1 for -v
    val = [0] * (2 * nv + 2)  # 1 true, -1 false, 0 unassigned

    def li(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    clauses: list[list[int]] = []
    units: list[int] = []
    for c in F.clauses:
        lits = sorted({li(x) for x in c})
        if any((l ^ 1) in lits for l in lits):
            continue
        if len(lits) == 1:
            units.append(lits[0])
        else:
            clauses.append(lits)
    watches: list[list[int]] = [[] for _ in range(2 * nv + 2)]
    for ci, c in enumerate(clauses):
        watches[c[0]].append(ci)
        watches[c[1]].append(ci)

    trail: list[int] = []
    # each decision level: (trail position, decision literal, flipped?)
    levels: list[tuple[int, int, bool]] = []

    def assign(l: int) -> bool:
        v = val[l]
        if v == 1:
            return True
        if v == -1:
            return False
        val[l] = 1
        val[l ^ 1] = -1
        trail.append(l)
        return True

    def propagate(start: int) -> bool:
        qi = start
        while qi < len(trail):
            false_lit = trail[qi] ^ 1
            qi += 1
            ws = watches[false_lit]
            i = 0
            while i < len(ws):
                ci = ws[i]
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                other = c[0]
                if val[other] == 1:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    if val[c[k]] != -1:
                        c[1], c[k] = c[k], c[1]
                        watches[c[1]].append(ci)
                        ws[i] = ws[-1]
                        ws.pop()
                        break
                else:
                    if val[other] == -1:
                        return False
                    assign(other)
                    i += 1
        return True

    for l in units:
        if not assign(l):
            return SolveResult(UNSAT)
    if not propagate(0):
        return SolveResult(UNSAT)

    decisions = 0
    next_var = 1
    while True:
        while next_var <= nv and val[2 * next_var] != 0:
            next_var += 1
        if next_var > nv:
            model = {v: val[2 * v] == 1 for v in range(1, nv + 1)}
            return SolveResult(SAT, model, decisions)
        if decisions >= max_decisions:
            return SolveResult(UNKNOWN, None, decisions)
        decisions += 1
        lit = 2 * next_var
        levels.append((len(trail), lit, False))
        assign(lit)
        ok = propagate(len(trail) - 1)
        while not ok:
            # chronological backtracking to the newest unflipped decision
            while levels and levels[-1][2]:
                pos = levels.pop()[0]
                _undo(trail, val, pos)
            if not levels:
                return SolveResult(UNSAT, None, decisions)
            pos, lit, _ = levels.pop()
            _undo(trail, val, pos)
            next_var = lit >> 1
            levels.append((pos, lit ^ 1, True))
            assign(lit ^ 1)
            ok = propagate(len(trail) - 1)


def _undo(trail: list[int], val: list[int], pos: int) -> None:
    while len(trail) > pos:
        l = trail.pop()
        val[l] = 0
        val[l ^ 1] = 0


def model_check(F: CnfFormula, a: Mapping[int, bool]) -> bool:
    """True iff every clause of ``F`` has a literal made true by ``a``."""
    missing = [v for v in range(1, F.num_vars + 1) if v not in a]
    if missing:
        raise ValueError(f"assignment is partial: variable {missing[0]} unassigned")
    return all(any(a[abs(l)] == (l > 0) for l in c) for c in F.clauses)


# --- DIMACS -----------------------------------------------------------------

def to_dimacs(F: CnfFormula) -> str:
    lines = [f"c {name} = {idx}" for name, idx in F.symbols.items()]
    lines.append(f"p cnf {F.num_vars} {len(F.clauses)}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in F.clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    symbols: dict[str, int] = {}
    header = None
    clauses: list[Clause] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            body = line[1:].strip()
            name, sep, idx = body.partition("=")
            if sep and idx.strip().isdigit() and name.strip() and " " not in name.strip():
                symbols[name.strip()] = int(idx)
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: bad problem line {raw!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if line.startswith("%"):
            break
        if header is None:
            raise DimacsError(f"line {lineno}: clause before problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("missing problem line")
    if current:
        clauses.append(tuple(current))
    if len(clauses) != header[1]:
        raise DimacsError(f"header declares {header[1]} clauses, found {len(clauses)}")
    try:
        return CnfFormula(header[0], tuple(clauses), symbols)
    except ValueError as exc:
        raise DimacsError(str(exc)) from exc


def parse_model(text: str, num_vars: int) -> Assignment:
    """Read ``v ... 0`` model lines as printed by external solvers.

    Variables the solver omitted are set to false.
    """
    model: Assignment = {}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("s ") and "UNSAT" in line.upper():
            raise DimacsError("solver reported UNSATISFIABLE; no model")
        if not line.startswith("v"):
            continue
        for tok in line[1:].split():
            lit = int(tok)
            if lit == 0:
                continue
            if abs(lit) > num_vars:
                raise DimacsError(f"model literal {lit} outside 1..{num_vars}")
            model[abs(lit)] = lit > 0
    for v in range(1, num_vars + 1):
        model.setdefault(v, False)
    return model
