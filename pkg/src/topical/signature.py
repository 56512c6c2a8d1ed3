"""Boolean signatures of power-mean maps and numeric oracles that check them.

The upper signature records which outputs blow up at ``omega_J`` (inf on J,
1 elsewhere); the lower signature records which outputs stay positive at the
indicator ``e_J``.  Local signatures at an interior point ``u`` record which
outputs strictly increase (decrease) when the coordinates in J are pushed up
(down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import boolfn as bf
from .boolfn import BitVec, BoolMap, Gate
from .expr import (Avg, Compose, DiagScale, Entries, LinComb, MapExpr, Sum, Var,
                   evaluate, evaluate_log, validate)

DEFAULT_TIE_TOL = 1e-9


class SignatureError(ValueError):
    pass


def _avg_gate(a: Avg, use_and: bool) -> Gate:
    kids = [bf.var(i) for i in a.support]
    if len(kids) == 1:
        return kids[0]
    return bf.and_(*kids) if use_and else bf.or_(*kids)


def _scalar_gate(s, avg_rule) -> Gate:
    if isinstance(s, Var):
        return bf.var(s.index)
    if isinstance(s, Avg):
        return avg_rule(s)
    parts = [_scalar_gate(t, avg_rule) for _, t in s.terms]
    return parts[0] if len(parts) == 1 else bf.or_(*parts)


def _global(f, avg_rule) -> BoolMap:
    if isinstance(f, Entries):
        return BoolMap(len(f.scalars), tuple(_scalar_gate(s, avg_rule) for s in f.scalars))
    if isinstance(f, Compose):
        return bf.compose(_global(f.outer, avg_rule), _global(f.inner, avg_rule))
    if isinstance(f, Sum):
        return bf.join_or(_global(f.f, avg_rule), _global(f.g, avg_rule))
    # positive diagonal scaling changes neither finiteness nor positivity
    return _global(f.f, avg_rule)


def _check_fixes_bounds(g: BoolMap, what: str) -> None:
    n = g.n
    if bf.eval_map(g, (0,) * n) != (0,) * n or bf.eval_map(g, (1,) * n) != (1,) * n:
        raise SignatureError(f"{what} signature does not fix 0 and 1")


def upper_signature(f: MapExpr) -> BoolMap:
    """Boolean map whose entry i at e_J is 1 iff f(omega_J)_i is infinite."""
    validate(f)
    g = bf.simplify_map(_global(f, lambda a: _avg_gate(a, use_and=a.r < 0)))
    _check_fixes_bounds(g, "upper")
    return g


def lower_signature(f: MapExpr) -> BoolMap:
    """Boolean map whose entry i at e_J is 1 iff f(e_J)_i > 0."""
    validate(f)
    g = bf.simplify_map(_global(f, lambda a: _avg_gate(a, use_and=a.r <= 0)))
    _check_fixes_bounds(g, "lower")
    return g


# --- local signatures -------------------------------------------------------

@dataclass(frozen=True)
class Tie:
    path: str
    r: float
    tau: BitVec   # argmax support
    mu: BitVec    # argmin support


@dataclass(frozen=True)
class TiePattern:
    tol: float
    ties: tuple[Tie, ...] = ()


@dataclass(frozen=True)
class LocalSignatures:
    upper: BoolMap
    lower: BoolMap
    ties: TiePattern = field(default_factory=lambda: TiePattern(DEFAULT_TIE_TOL))


def _extremal_sets(a: Avg, u: np.ndarray, tol: float) -> tuple[list[int], list[int]]:
    supp = list(a.support)
    vals = u[supp]
    hi, lo = vals.max(), vals.min()
    tau = [i for i, v in zip(supp, vals) if v >= (1 - tol) * hi]
    mu = [i for i, v in zip(supp, vals) if v <= (1 + tol) * lo]
    return tau, mu


def _or_over(idx: list[int]) -> Gate:
    return bf.var(idx[0]) if len(idx) == 1 else bf.or_(*(bf.var(i) for i in idx))


def _and_over(idx: list[int]) -> Gate:
    return bf.var(idx[0]) if len(idx) == 1 else bf.and_(*(bf.var(i) for i in idx))


def _local(f, u: np.ndarray, tol: float, path: str, ties: list[Tie]) -> tuple[BoolMap, BoolMap]:
    if isinstance(f, Entries):
        n = len(f.scalars)
        up, lo = [], []
        for k, s in enumerate(f.scalars):
            cu, cl = _local_scalar(s, u, tol, f"{path}.entries[{k + 1}]", ties)
            up.append(cu)
            lo.append(cl)
        return BoolMap(n, tuple(up)), BoolMap(n, tuple(lo))
    if isinstance(f, Compose):
        gu, gl = _local(f.inner, u, tol, path + ".inner", ties)
        v = evaluate(f.inner, u)
        if not (np.isfinite(v).all() and (v > 0).all()):
            raise SignatureError(f"{path}: intermediate point is not interior")
        fu, fl = _local(f.outer, v, tol, path + ".outer", ties)
        return bf.compose(fu, gu), bf.compose(fl, gl)
    if isinstance(f, Sum):
        au, al = _local(f.f, u, tol, path + ".f", ties)
        bu, bl = _local(f.g, u, tol, path + ".g", ties)
        return bf.join_or(au, bu), bf.join_or(al, bl)
    return _local(f.f, u, tol, path + ".f", ties)


def _local_scalar(s, u, tol, path, ties) -> tuple[Gate, Gate]:
    if isinstance(s, Var):
        g = bf.var(s.index)
        return g, g
    if isinstance(s, Avg):
        if math.isfinite(s.r):
            g = _or_over(list(s.support))
            return g, g
        tau, mu = _extremal_sets(s, u, tol)
        n = len(u)
        ties.append(Tie(path, s.r, bf.indicator(n, tau), bf.indicator(n, mu)))
        if s.r > 0:
            return _or_over(tau), _and_over(tau)
        return _and_over(mu), _or_over(mu)
    parts = [_local_scalar(t, u, tol, f"{path}[{k}]", ties) for k, (_, t) in enumerate(s.terms)]
    if len(parts) == 1:
        return parts[0]
    return bf.or_(*(p[0] for p in parts)), bf.or_(*(p[1] for p in parts))


def local_signatures(f: MapExpr, u: Sequence[float], tol: float = DEFAULT_TIE_TOL) -> LocalSignatures:
    """Upper and lower local signatures of ``f`` at the interior point ``u``."""
    n = validate(f)
    u = np.asarray(u, dtype=float)
    if u.shape != (n,) or not (np.isfinite(u).all() and (u > 0).all()):
        raise SignatureError("local signatures need a strictly positive finite point")
    if not tol >= 0:
        raise ValueError("tie tolerance must be nonnegative")
    ties: list[Tie] = []
    up, lo = _local(f, u, tol, "map", ties)
    return LocalSignatures(bf.simplify_map(up), bf.simplify_map(lo), TiePattern(tol, tuple(ties)))


# --- numeric oracles --------------------------------------------------------

def numeric_upper_oracle(f: MapExpr, J: Sequence[int], T: float = 40.0,
                         theta: float = 20.0) -> BitVec:
    """Finite-t surrogate for the upper signature: evaluate at ``exp(T e_J)``."""
    u = T * np.asarray(J, dtype=float)
    return tuple(int(v > theta) for v in evaluate_log(f, u))


def numeric_lower_oracle(f: MapExpr, J: Sequence[int]) -> BitVec:
    """Positivity pattern of ``f(e_J)`` under extended arithmetic."""
    return tuple(int(v > 0) for v in evaluate(f, np.asarray(J, dtype=float)))
