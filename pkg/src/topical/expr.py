"""Map expressions built from weighted power means.

A map is a tree of ``Entries`` (one scalar expression per output coordinate),
``Compose``, ``Sum`` and ``DiagScale`` nodes.  Scalar expressions are input
variables, weighted power means (``Avg``) and positive linear combinations.

Indices are 0-based in Python and 1-based in the text syntax.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.special import logsumexp

WEIGHT_SUM_TOL = 1e-6

__all__ = [
    "Var", "Avg", "LinComb", "Entries", "Compose", "Sum", "DiagScale",
    "ExprError", "ParseError", "ValidationError", "IndeterminateError",
    "parse_map", "validate", "evaluate", "evaluate_log", "dimension",
    "e_vec", "omega_vec", "render_map", "identity_map", "matrix_map",
    "iter_avgs",
]


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


class ValidationError(ExprError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class IndeterminateError(ArithmeticError):
    """Raised for 0 * inf products inside a geometric mean."""


# --- scalar expressions -----------------------------------------------------

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Avg:
    """Weighted power mean ``(sum_i w_i x_i^r)^(1/r)``.

    ``r`` may be ``inf`` (max over the support) or ``-inf`` (min over the
    support); ``r == 0`` is the weighted geometric mean.  ``weights`` holds the
    raw values as given; ``sigma`` is the normalized vector used everywhere.
    """

    r: float
    weights: tuple[float, ...]
    sigma: tuple[float, ...] = field(init=False, repr=False, compare=False)
    support: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        total = math.fsum(w)
        sigma = tuple(v / total for v in w) if total > 0 else w
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "support", tuple(i for i, v in enumerate(w) if v > 0))


@dataclass(frozen=True)
class LinComb:
    terms: tuple[tuple[float, "Scalar"], ...]


Scalar = Union[Var, Avg, LinComb]


# --- map expressions --------------------------------------------------------

@dataclass(frozen=True)
class Entries:
    scalars: tuple[Scalar, ...]


@dataclass(frozen=True)
class Compose:
    """``outer(inner(x))``."""

    outer: "MapExpr"
    inner: "MapExpr"


@dataclass(frozen=True)
class Sum:
    """``a*f(x) + b*g(x)``."""

    a: float
    f: "MapExpr"
    b: float
    g: "MapExpr"


@dataclass(frozen=True)
class DiagScale:
    d: tuple[float, ...]
    f: "MapExpr"


MapExpr = Union[Entries, Compose, Sum, DiagScale]


def identity_map(n: int) -> Entries:
    return Entries(tuple(Var(i) for i in range(n)))


def matrix_map(a) -> Entries:
    """Linear map ``x -> A x`` for a nonnegative matrix with no zero rows."""
    a = np.asarray(a, dtype=float)
    rows = []
    for row in a:
        terms = tuple((float(c), Var(j)) for j, c in enumerate(row) if c > 0)
        rows.append(Var(terms[0][1].index) if len(terms) == 1 and terms[0][0] == 1.0
                    else LinComb(terms))
    return Entries(tuple(rows))


def e_vec(n: int, subset) -> np.ndarray:
    """Indicator vector of ``subset`` (0-based indices)."""
    x = np.zeros(n)
    x[list(subset)] = 1.0
    return x


def omega_vec(n: int, subset) -> np.ndarray:
    """Limit of ``1 + t e_J`` as t grows: ``inf`` on the subset, 1 elsewhere."""
    x = np.ones(n)
    x[list(subset)] = math.inf
    return x


def iter_avgs(f: MapExpr) -> Iterator[Avg]:
    stack: list = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Entries):
            stack.extend(node.scalars)
        elif isinstance(node, Compose):
            stack.extend((node.outer, node.inner))
        elif isinstance(node, Sum):
            stack.extend((node.f, node.g))
        elif isinstance(node, DiagScale):
            stack.append(node.f)
        elif isinstance(node, LinComb):
            stack.extend(s for _, s in node.terms)
        elif isinstance(node, Avg):
            yield node


# --- validation -------------------------------------------------------------

def _validate_scalar(s, n: int, path: str) -> None:
    if isinstance(s, Var):
        if not 0 <= s.index < n:
            raise ValidationError(f"variable x{s.index + 1} outside 1..{n}", path)
    elif isinstance(s, Avg):
        if math.isnan(s.r):
            raise ValidationError("exponent is NaN", path)
        if len(s.weights) != n:
            raise ValidationError(
                f"dimension mismatch: {len(s.weights)} weights, expected {n}", path)
        if any(not math.isfinite(w) or w < 0 for w in s.weights):
            raise ValidationError("weights must be finite and nonnegative", path)
        if not s.support:
            raise ValidationError("weights have empty support", path)
        total = math.fsum(s.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights not normalizable (sum {total!r})", path)
    elif isinstance(s, LinComb):
        if not s.terms:
            raise ValidationError("empty linear combination", path)
        for k, (c, t) in enumerate(s.terms):
            if not (math.isfinite(c) and c > 0):
                raise ValidationError(f"nonpositive coefficient {c!r}", f"{path}[{k}]")
            _validate_scalar(t, n, f"{path}[{k}]")
    else:
        raise ValidationError(f"unknown scalar node {type(s).__name__}", path)


def _validate(f, path: str) -> int:
    if isinstance(f, Entries):
        n = len(f.scalars)
        if n < 1:
            raise ValidationError("map has no entries", path)
        for i, s in enumerate(f.scalars):
            _validate_scalar(s, n, f"{path}.entries[{i + 1}]")
        return n
    if isinstance(f, Compose):
        n_out = _validate(f.outer, path + ".outer")
        n_in = _validate(f.inner, path + ".inner")
        if n_out != n_in:
            raise ValidationError(f"dimension mismatch: {n_out} vs {n_in}", path)
        return n_out
    if isinstance(f, Sum):
        for c in (f.a, f.b):
            if not (math.isfinite(c) and c > 0):
                raise ValidationError(f"nonpositive coefficient {c!r}", path)
        n_f = _validate(f.f, path + ".f")
        n_g = _validate(f.g, path + ".g")
        if n_f != n_g:
            raise ValidationError(f"dimension mismatch: {n_f} vs {n_g}", path)
        return n_f
    if isinstance(f, DiagScale):
        n = _validate(f.f, path + ".f")
        if len(f.d) != n:
            raise ValidationError(f"dimension mismatch: {len(f.d)} scale factors, expected {n}", path)
        if any(not (math.isfinite(c) and c > 0) for c in f.d):
            raise ValidationError("diagonal entries must be positive", path)
        return n
    raise ValidationError(f"unknown map node {type(f).__name__}", path)


def validate(f: MapExpr) -> int:
    """Check every structural invariant of ``f`` and return its dimension."""
    return _validate(f, "map")


def dimension(f: MapExpr) -> int:
    while not isinstance(f, Entries):
        f = f.inner if isinstance(f, Compose) else f.f
    return len(f.scalars)


# --- evaluation -------------------------------------------------------------

def _avg_ext(a: Avg, x: np.ndarray) -> float:
    idx = list(a.support)
    v = x[idx]
    w = np.asarray(a.sigma)[idx]
    r = a.r
    if r == math.inf:
        return float(v.max())
    if r == -math.inf:
        return float(v.min())
    zero = v == 0
    inf = np.isinf(v)
    if r == 0:
        if zero.any() and inf.any():
            raise IndeterminateError("geometric mean over a support containing both 0 and inf")
        if zero.any():
            return 0.0
        if inf.any():
            return math.inf
        return float(np.exp(np.dot(w, np.log(v))))
    if r > 0:
        if inf.any():
            return math.inf
        m = v.max()
        if m == 0:
            return 0.0
        return float(m * np.dot(w, (v / m) ** r) ** (1.0 / r))
    # r < 0: zero entries send the sum to infinity, infinite entries drop out
    if zero.any():
        return 0.0
    fin = ~inf
    if not fin.any():
        return math.inf
    m = v[fin].min()
    s = np.dot(w[fin], (v[fin] / m) ** r)
    return float(m * s ** (1.0 / r))


def _scalar_ext(s, x: np.ndarray) -> float:
    if isinstance(s, Var):
        return float(x[s.index])
    if isinstance(s, Avg):
        return _avg_ext(s, x)
    return math.fsum(c * _scalar_ext(t, x) for c, t in s.terms)


def _map_ext(f, x: np.ndarray) -> np.ndarray:
    if isinstance(f, Entries):
        return np.array([_scalar_ext(s, x) for s in f.scalars])
    if isinstance(f, Compose):
        return _map_ext(f.outer, _map_ext(f.inner, x))
    if isinstance(f, Sum):
        return f.a * _map_ext(f.f, x) + f.b * _map_ext(f.g, x)
    return np.asarray(f.d) * _map_ext(f.f, x)


def evaluate(f: MapExpr, x: Sequence[float]) -> np.ndarray:
    """Evaluate ``f`` at a point of ``[0, inf]^n`` using extended arithmetic.

    Raises :class:`IndeterminateError` when a geometric mean sees both a zero
    and an infinite coordinate in its support.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or np.isnan(x).any() or (x < 0).any():
        raise ValueError("point must be a vector in [0, inf]^n")
    n = dimension(f)
    if x.shape[0] != n:
        raise ValueError(f"point has dimension {x.shape[0]}, map has {n}")
    return _map_ext(f, x)


def _avg_log(a: Avg, u: np.ndarray) -> float:
    idx = list(a.support)
    v = u[idx]
    r = a.r
    if r == math.inf:
        return float(v.max())
    if r == -math.inf:
        return float(v.min())
    w = np.asarray(a.sigma)[idx]
    if r == 0:
        return float(np.dot(w, v))
    return float(logsumexp(r * v, b=w) / r)


def _scalar_log(s, u: np.ndarray) -> float:
    if isinstance(s, Var):
        return float(u[s.index])
    if isinstance(s, Avg):
        return _avg_log(s, u)
    vals = [_scalar_log(t, u) for _, t in s.terms]
    if len(vals) == 1:
        return math.log(s.terms[0][0]) + vals[0]
    return float(logsumexp(vals, b=[c for c, _ in s.terms]))


def _map_log(f, u: np.ndarray) -> np.ndarray:
    if isinstance(f, Entries):
        return np.array([_scalar_log(s, u) for s in f.scalars])
    if isinstance(f, Compose):
        return _map_log(f.outer, _map_log(f.inner, u))
    if isinstance(f, Sum):
        return np.logaddexp(math.log(f.a) + _map_log(f.f, u), math.log(f.b) + _map_log(f.g, u))
    return np.log(np.asarray(f.d)) + _map_log(f.f, u)


def evaluate_log(f: MapExpr, u: Sequence[float]) -> np.ndarray:
    """Return ``log f(exp(u))`` computed entirely in log space."""
    u = np.asarray(u, dtype=float)
    if u.shape != (dimension(f),) or not np.isfinite(u).all():
        raise ValueError("log-point must be a finite vector of the map's dimension")
    return _map_log(f, u)


# --- text syntax ------------------------------------------------------------

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


@dataclass
class _List:
    items: list
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        s = m.group()
        if not s.isspace() and not s.startswith(";"):
            toks.append(_Tok(s, line, m.start() - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = m.start() + s.rindex("\n") + 1
    return toks


def _read(text: str):
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty input", 1, 1)
    stack: list[_List] = []
    result = None
    for t in toks:
        if result is not None:
            raise ParseError("unexpected trailing input", t.line, t.col)
        if t.text == "(":
            stack.append(_List([], t.line, t.col))
        elif t.text == ")":
            if not stack:
                raise ParseError("unbalanced ')'", t.line, t.col)
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                result = done
        else:
            if not stack:
                raise ParseError(f"unexpected atom {t.text!r}", t.line, t.col)
            stack[-1].items.append(t)
    if stack:
        raise ParseError("unclosed '('", stack[-1].line, stack[-1].col)
    return result


def _pos(node) -> tuple[int, int]:
    return node.line, node.col


def _num(node, what: str = "number") -> float:
    if not isinstance(node, _Tok):
        raise ParseError(f"expected {what}", *_pos(node))
    low = node.text.lower()
    if low in ("inf", "+inf"):
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        v = float(node.text)
    except ValueError:
        raise ParseError(f"expected {what}, got {node.text!r}", *_pos(node)) from None
    if math.isnan(v):
        raise ParseError(f"expected {what}, got NaN", *_pos(node))
    return v


def _positive(node) -> float:
    v = _num(node, "positive number")
    if not (math.isfinite(v) and v > 0):
        raise ParseError(f"nonpositive coefficient {node.text}", *_pos(node))
    return v


def _head(node) -> str:
    if not isinstance(node, _List) or not node.items or not isinstance(node.items[0], _Tok):
        raise ParseError("expected a form", *_pos(node))
    return node.items[0].text


def _num_list(node) -> tuple[float, ...]:
    if not isinstance(node, _List):
        raise ParseError("expected a parenthesized number list", *_pos(node))
    return tuple(_num(t) for t in node.items)


def _scalar(node):
    head = _head(node)
    args = node.items[1:]
    if head == "x":
        if len(args) != 1 or not isinstance(args[0], _Tok):
            raise ParseError("(x i) takes one index", *_pos(node))
        try:
            i = int(args[0].text)
        except ValueError:
            raise ParseError(f"bad variable index {args[0].text!r}", *_pos(args[0])) from None
        if i < 1:
            raise ParseError("variable indices start at 1", *_pos(args[0]))
        return Var(i - 1)
    if head == "avg":
        if len(args) != 2:
            raise ParseError("(avg r (w1 ... wn)) takes two arguments", *_pos(node))
        r = _num(args[0], "exponent")
        w = _num_list(args[1])
        if any(v < 0 for v in w):
            raise ParseError("negative weight", *_pos(args[1]))
        total = math.fsum(w)
        if total <= 0:
            raise ParseError("weights have empty support", *_pos(args[1]))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ParseError(f"weights not normalizable (sum {total!r})", *_pos(args[1]))
        return Avg(r, w)
    if head == "+":
        if not args:
            raise ParseError("(+) needs at least one term", *_pos(node))
        parts = [_scalar(a) for a in args]
        if len(parts) == 1:
            return parts[0]
        # (* c s) inside a sum contributes the term (c, s) directly
        return LinComb(tuple(p.terms[0] if isinstance(p, LinComb) and len(p.terms) == 1
                             else (1.0, p) for p in parts))
    if head == "*":
        if len(args) != 2:
            raise ParseError("(* c expr) takes two arguments", *_pos(node))
        return LinComb(((_positive(args[0]), _scalar(args[1])),))
    raise ParseError(f"unknown scalar form {head!r}", *_pos(node))


def _map(node):
    head = _head(node)
    args = node.items[1:]
    if head == "entries":
        if not args:
            raise ParseError("(entries) needs at least one entry", *_pos(node))
        return Entries(tuple(_scalar(a) for a in args))
    if head == "compose":
        if len(args) != 2:
            raise ParseError("(compose outer inner) takes two maps", *_pos(node))
        return Compose(_map(args[0]), _map(args[1]))
    if head == "sum":
        if len(args) != 4:
            raise ParseError("(sum a f b g) takes four arguments", *_pos(node))
        return Sum(_positive(args[0]), _map(args[1]), _positive(args[2]), _map(args[3]))
    if head == "diag":
        if len(args) != 2:
            raise ParseError("(diag (d1 ... dn) f) takes two arguments", *_pos(node))
        if not isinstance(args[0], _List):
            raise ParseError("expected a parenthesized number list", *_pos(args[0]))
        d = tuple(_positive(t) for t in args[0].items)
        return DiagScale(d, _map(args[1]))
    raise ParseError(f"unknown map form {head!r}", *_pos(node))


def parse_map(text: str) -> MapExpr:
    """Parse the s-expression map syntax and validate the result."""
    tree = _read(text)
    f = _map(tree)
    try:
        validate(f)
    except ValidationError as exc:
        raise ParseError(str(exc), tree.line, tree.col) from exc
    return f


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _render_scalar(s) -> str:
    if isinstance(s, Var):
        return f"(x {s.index + 1})"
    if isinstance(s, Avg):
        return f"(avg {_fmt(s.r)} ({' '.join(_fmt(w) for w in s.weights)}))"
    if len(s.terms) == 1:
        c, t = s.terms[0]
        return f"(* {_fmt(c)} {_render_scalar(t)})"
    parts = [_render_scalar(t)
             if c == 1.0 and not (isinstance(t, LinComb) and len(t.terms) == 1)
             else f"(* {_fmt(c)} {_render_scalar(t)})"
             for c, t in s.terms]
    return f"(+ {' '.join(parts)})"


def render_map(f: MapExpr) -> str:
    """Inverse of :func:`parse_map` (up to whitespace and numeric formatting)."""
    if isinstance(f, Entries):
        return f"(entries {' '.join(_render_scalar(s) for s in f.scalars)})"
    if isinstance(f, Compose):
        return f"(compose {render_map(f.outer)} {render_map(f.inner)})"
    if isinstance(f, Sum):
        return f"(sum {_fmt(f.a)} {render_map(f.f)} {_fmt(f.b)} {render_map(f.g)})"
    return f"(diag ({' '.join(_fmt(c) for c in f.d)}) {render_map(f.f)})"
