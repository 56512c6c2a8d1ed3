"""Random instances for tests and acceptance runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import Avg, Compose, DiagScale, Entries, LinComb, MapExpr, Sum, Var, render_map
from .satcnf import CnfFormula

INF = math.inf

MIXED_EXPONENTS = (-INF, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, INF)
PLUS_EXPONENTS = (0.0, 0.5, 1.0, 2.0, INF)
# no geometric means: see the oracle note in the signature tests
NO_GEOMETRIC_EXPONENTS = (-INF, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, INF)


@dataclass(frozen=True)
class MapShape:
    """Knobs for :func:`random_map`."""

    exponents: Sequence[float] = MIXED_EXPONENTS
    max_support: int = 3
    weight_floor: float = 0.0
    coef_range: tuple[float, float] = (0.25, 4.0)
    p_var: float = 0.15
    p_lincomb: float = 0.3
    p_compose: float = 0.15
    p_sum: float = 0.1
    p_diag: float = 0.1
    max_depth: int = 2


PLUS_SHAPE = MapShape(exponents=PLUS_EXPONENTS)
ORACLE_SHAPE = MapShape(exponents=NO_GEOMETRIC_EXPONENTS, weight_floor=0.2,
                        coef_range=(0.5, 2.0), p_sum=0.0, max_depth=1)
FLAT_SHAPE = MapShape(weight_floor=0.2, coef_range=(0.5, 2.0), p_compose=0.0, p_sum=0.0)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_avg(rng, n: int, shape: MapShape = MapShape()) -> Avg:
    rng = _rng(rng)
    k = int(rng.integers(1, min(shape.max_support, n) + 1))
    support = rng.choice(n, size=k, replace=False)
    w = np.zeros(n)
    w[support] = shape.weight_floor + rng.random(k)
    w /= w.sum()
    r = float(shape.exponents[int(rng.integers(len(shape.exponents)))])
    return Avg(r, tuple(float(v) for v in w))


def random_scalar(rng, n: int, shape: MapShape = MapShape()):
    rng = _rng(rng)
    u = rng.random()
    if u < shape.p_var:
        return Var(int(rng.integers(n)))
    if u < shape.p_var + shape.p_lincomb:
        lo, hi = shape.coef_range
        m = int(rng.integers(1, 3))
        return LinComb(tuple((float(rng.uniform(lo, hi)), random_avg(rng, n, shape))
                             for _ in range(m)))
    return random_avg(rng, n, shape)


def random_map(rng, n: int, shape: MapShape = MapShape(), _depth: int = 0) -> MapExpr:
    """A random map of the power-mean class closed under sums and composition."""
    rng = _rng(rng)
    if _depth < shape.max_depth:
        u = rng.random()
        lo, hi = shape.coef_range
        if u < shape.p_compose:
            return Compose(random_map(rng, n, shape, _depth + 1),
                           random_map(rng, n, shape, _depth + 1))
        u -= shape.p_compose
        if u < shape.p_sum:
            return Sum(float(rng.uniform(lo, hi)), random_map(rng, n, shape, _depth + 1),
                       float(rng.uniform(lo, hi)), random_map(rng, n, shape, _depth + 1))
        u -= shape.p_sum
        if u < shape.p_diag:
            d = tuple(float(v) for v in rng.uniform(lo, hi, n))
            return DiagScale(d, random_map(rng, n, shape, _depth + 1))
    return Entries(tuple(random_scalar(rng, n, shape) for _ in range(n)))


def random_positive_matrix(rng, n: int, low: float = 0.1, high: float = 1.0) -> np.ndarray:
    return _rng(rng).uniform(low, high, (n, n))


def matrix_text(a: np.ndarray) -> str:
    """DSL text for ``x -> A x``, one weighted arithmetic mean per row."""
    rows = []
    for row in np.asarray(a, dtype=float):
        s = row.sum()
        w = " ".join(repr(float(v / s)) for v in row)
        rows.append(f"  (* {float(s)!r} (avg 1 ({w})))")
    return "(entries\n" + "\n".join(rows) + ")\n"


def random_3cnf(rng, n: int, m: int) -> CnfFormula:
    rng = _rng(rng)
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=min(3, n), replace=False) + 1
        signs = rng.choice((-1, 1), size=len(vs))
        clauses.append(tuple(int(v * s) for v, s in zip(vs, signs)))
    return CnfFormula(n, tuple(clauses))


__all__ = [
    "MapShape", "PLUS_SHAPE", "ORACLE_SHAPE", "FLAT_SHAPE",
    "random_avg", "random_scalar", "random_map", "random_positive_matrix",
    "matrix_text", "random_3cnf", "render_map",
]
