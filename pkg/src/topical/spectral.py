"""Positive eigenvectors, Hilbert-metric quantities, and uniqueness certificates."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import boolfn as bf
from .boolfn import BitVec, BoolMap
from .checks import Condition, encode, fmt_set, _above_set, _below_set, _lowest
from .expr import MapExpr, evaluate, validate
from .satcnf import CnfBuilder, CnfFormula, SAT, UNKNOWN, Tseitin, solve, DEFAULT_MAX_DECISIONS
from .signature import DEFAULT_TIE_TOL, LocalSignatures, local_signatures

CERTIFIED, REFUTED, UNKNOWN_VERDICT = "certified", "refuted", "unknown"
EIGEN_CHECK_TOL = 1e-8


def _interior(x, what: str = "point") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not (np.isfinite(x).all() and (x > 0).all()):
        raise ValueError(f"{what} must be strictly positive and finite")
    return x


def hilbert_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Hilbert's projective metric on the open positive orthant."""
    x = _interior(x)
    y = _interior(y)
    if x.shape != y.shape:
        raise ValueError("points have different dimensions")
    ratio = np.log(y) - np.log(x)
    return float(ratio.max() - ratio.min())


def collatz_wielandt(f: MapExpr, x: Sequence[float]) -> tuple[float, float]:
    """Tightest (alpha, beta) with alpha*x <= f(x) <= beta*x."""
    x = _interior(x)
    ratio = evaluate(f, x) / x
    return float(ratio.min()), float(ratio.max())


@dataclass
class EigenResult:
    vector: np.ndarray
    eigenvalue: float
    bracket: tuple[float, float]
    converged: bool
    iterations: int
    step: float
    history: list[tuple[float, float]] = field(default_factory=list, repr=False)
    message: str = ""

    def fields(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "vector": [float(v) for v in self.vector],
            "alpha": self.bracket[0],
            "beta": self.bracket[1],
            "converged": self.converged,
            "iterations": self.iterations,
            "hilbert_step": self.step,
            **({"message": self.message} if self.message else {}),
        }

    def to_text(self) -> str:
        d = self.fields()
        d["vector"] = "(" + ", ".join(f"{v:.12g}" for v in d["vector"]) + ")"
        return "\n".join(f"{k}: {v}" for k, v in d.items())

    def to_json(self) -> str:
        return json.dumps({"type": "eigen", **self.fields()}, sort_keys=True)


def power_iteration(f: MapExpr, x0: Sequence[float] | None = None, tol: float = 1e-10,
                    max_iter: int = 100_000, keep_history: bool = False) -> EigenResult:
    """Normalized fixed-point iteration ``x <- f(x) / max f(x)``.

    Stops once the Collatz-Wielandt bracket at the current iterate satisfies
    ``log(beta/alpha) <= tol``; the eigenvalue estimate is ``sqrt(alpha*beta)``.
    Failure to converge is reported through ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = validate(f)
    x = np.ones(n) if x0 is None else _interior(x0, "starting point").copy()
    if x.shape != (n,):
        raise ValueError("starting point has the wrong dimension")
    x = x / x.max()
    history: list[tuple[float, float]] = []
    alpha = beta = math.nan
    step = math.inf
    for k in range(max_iter + 1):
        y = evaluate(f, x)
        if not (np.isfinite(y).all() and (y > 0).all()):
            return EigenResult(x, math.nan, (alpha, beta), False, k, step, history,
                               "iterate left the interior of the cone")
        ratio = y / x
        alpha, beta = float(ratio.min()), float(ratio.max())
        if keep_history:
            history.append((alpha, beta))
        step = math.log(beta / alpha)
        if step <= tol and beta / alpha <= 1 + tol:
            return EigenResult(x, math.sqrt(alpha * beta), (alpha, beta), True, k, step, history)
        if k == max_iter:
            break
        x = y / y.max()
    return EigenResult(x, math.sqrt(alpha * beta), (alpha, beta), False, max_iter, step, history,
                       f"no convergence within {max_iter} iterations")


# --- uniqueness -------------------------------------------------------------

@dataclass(frozen=True)
class UniquenessReport:
    condition: str              # "M" or "N"
    verdict: str
    engine: str
    point: tuple[float, ...]
    tie_tol: float
    witness: dict[str, BitVec] | None = None
    eigenvector: bool = True
    note: str = ""

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def fields(self) -> dict:
        d = {
            "condition": self.condition,
            "verdict": self.verdict,
            "engine": self.engine,
            "point": list(self.point),
            "tie_tol": self.tie_tol,
            "eigenvector": self.eigenvector,
            "witness": None if self.witness is None
            else {k: fmt_set(v) for k, v in self.witness.items()},
        }
        if self.note:
            d["note"] = self.note
        return d

    def to_text(self) -> str:
        d = self.fields()
        d["point"] = "(" + ", ".join(f"{v:.12g}" for v in d["point"]) + ")"
        w = d.pop("witness")
        lines = [f"{k}: {v}" for k, v in d.items()]
        if w:
            lines.insert(3, "witness: " + " ".join(f"{k}={v}" for k, v in w.items()))
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({"type": "unique", **self.fields()}, sort_keys=True)


def _is_eigenvector(f: MapExpr, u: np.ndarray) -> bool:
    alpha, beta = collatz_wielandt(f, u)
    return beta / alpha - 1 <= EIGEN_CHECK_TOL


def _resolve(engine: str, n: int, pairs: bool) -> str:
    if engine == "auto":
        return "brute" if n <= (10 if pairs else 16) else "sat"
    if engine not in ("sat", "brute"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def verify_condition_m_witness(sigs: LocalSignatures, J: BitVec) -> bool:
    return any(J) and not all(J) and all(a <= b for a, b in zip(sigs.upper(J), J))


def condition_M(f: MapExpr, u: Sequence[float], engine: str = "auto", tol: float = DEFAULT_TIE_TOL,
                max_decisions: int = DEFAULT_MAX_DECISIONS) -> UniquenessReport:
    """Certify that some coordinate outside J strictly increases for every
    nonempty proper J, which makes an eigenvector at u unique up to scaling."""
    u = _interior(u)
    n = validate(f)
    if n < 2:
        raise ValueError("condition (M) needs n >= 2")
    sigs = local_signatures(f, u, tol)
    engine = _resolve(engine, n, pairs=False)
    J = None
    if engine == "brute":
        full = (1 << (1 << n)) - 1
        good = _below_set(sigs.upper.tables(), bf.input_tables(n), full) & ~1 & ~(1 << ((1 << n) - 1))
        if good:
            J = bf.bits(_lowest(good), n)
    else:
        res = solve(encode(Condition.INDECOMPOSABLE, sigs.lower, sigs.upper), max_decisions)
        if res.status == UNKNOWN:
            return UniquenessReport("M", UNKNOWN_VERDICT, engine, tuple(u), tol,
                                    eigenvector=_is_eigenvector(f, u), note="decision cap exceeded")
        if res.status == SAT:
            J = tuple(int(res.model[v]) for v in range(1, n + 1))
    return _uniq_report("M", f, u, tol, engine, sigs, None if J is None else {"J": J})


def encode_condition_n(lower_u: BoolMap, upper_u: BoolMap) -> CnfFormula:
    """CNF satisfiable exactly when condition (N) fails.

    x (variables 1..n) is the indicator of the complement of I and y
    (n+1..2n) the indicator of the complement of J.
    """
    n = lower_u.n
    b = CnfBuilder()
    xs = b.reserve(n, "x")
    ys = b.reserve(n, "y")
    b.add(*(-x for x in xs))
    b.add(*(-y for y in ys))
    for x, y in zip(xs, ys):
        b.add(x, y)
    enc = Tseitin(b)
    lo = [enc.literal(g, 1) for g in lower_u.outputs]
    up = [enc.literal(g, n + 1) for g in upper_u.outputs]
    for x, o in zip(xs, lo):
        b.add(x, -o)
    for y, o in zip(ys, up):
        b.add(y, -o)
    return b.build()


def verify_condition_n_witness(sigs: LocalSignatures, I: BitVec, J: BitVec) -> bool:
    if not any(I) or not any(J) or any(a and b for a, b in zip(I, J)):
        return False
    lo = sigs.lower(tuple(1 - v for v in I))
    up = sigs.upper(tuple(1 - v for v in J))
    return (not any(lo[i] for i in range(len(I)) if I[i])
            and not any(up[j] for j in range(len(J)) if J[j]))


def condition_N(f: MapExpr, u: Sequence[float], engine: str = "auto", tol: float = DEFAULT_TIE_TOL,
                max_decisions: int = DEFAULT_MAX_DECISIONS) -> UniquenessReport:
    """Decide condition (N) at u: for an eigenvector u this is equivalent to
    uniqueness of the positive eigenvector up to scaling."""
    u = _interior(u)
    n = validate(f)
    if n < 2:
        raise ValueError("condition (N) needs n >= 2")
    sigs = local_signatures(f, u, tol)
    engine = _resolve(engine, n, pairs=True)
    witness = None
    if engine == "brute":
        full = (1 << (1 << n)) - 1
        top = (1 << n) - 1
        inputs = bf.input_tables(n)
        xs = _below_set(sigs.lower.tables(), inputs, full) & ~(1 << top)
        ys = _below_set(sigs.upper.tables(), inputs, full) & ~(1 << top)
        # I ascending, then J ascending; x = complement of I, y = complement of J
        for I in range(1, top):
            if not (xs >> (top ^ I)) & 1:
                continue
            for J in range(1, top):
                if I & J == 0 and (ys >> (top ^ J)) & 1:
                    witness = {"I": bf.bits(I, n), "J": bf.bits(J, n)}
                    break
            if witness:
                break
    else:
        res = solve(encode_condition_n(sigs.lower, sigs.upper), max_decisions)
        if res.status == UNKNOWN:
            return UniquenessReport("N", UNKNOWN_VERDICT, engine, tuple(u), tol,
                                    eigenvector=_is_eigenvector(f, u), note="decision cap exceeded")
        if res.status == SAT:
            x = [int(res.model[v]) for v in range(1, n + 1)]
            y = [int(res.model[v]) for v in range(n + 1, 2 * n + 1)]
            witness = {"I": tuple(1 - v for v in x), "J": tuple(1 - v for v in y)}
    return _uniq_report("N", f, u, tol, engine, sigs, witness)


def _uniq_report(cond, f, u, tol, engine, sigs, witness) -> UniquenessReport:
    if witness is not None:
        ok = (verify_condition_m_witness(sigs, witness["J"]) if cond == "M"
              else verify_condition_n_witness(sigs, witness["I"], witness["J"]))
        if not ok:
            raise RuntimeError(f"condition ({cond}) witness does not verify")
    eig = _is_eigenvector(f, u)
    note = "" if eig else "u is not an eigenvector; the verdict does not speak to uniqueness"
    verdict = CERTIFIED if witness is None else REFUTED
    return UniquenessReport(cond, verdict, engine, tuple(float(v) for v in u), tol, witness, eig, note)


# --- m-convexity ------------------------------------------------------------

@dataclass(frozen=True)
class MConvexityViolation:
    x: np.ndarray
    y: np.ndarray
    lam: float
    entry: int
    excess: float


def mconvexity_spot_check(f: MapExpr, samples: int = 100, tol: float = 1e-10,
                          rng: np.random.Generator | int | None = 0,
                          log_range: float = 3.0) -> MConvexityViolation | None:
    """Sample ``f(x^l y^(1-l)) <= f(x)^l f(y)^(1-l)``; return the first violation."""
    n = validate(f)
    rng = np.random.default_rng(rng)
    for _ in range(samples):
        x = np.exp(rng.uniform(-log_range, log_range, n))
        y = np.exp(rng.uniform(-log_range, log_range, n))
        lam = float(rng.uniform(0, 1))
        lhs = evaluate(f, x ** lam * y ** (1 - lam))
        rhs = evaluate(f, x) ** lam * evaluate(f, y) ** (1 - lam)
        excess = lhs / rhs - 1
        bad = np.flatnonzero(excess > tol)
        if bad.size:
            i = int(bad[0])
            return MConvexityViolation(x, y, lam, i, float(excess[i]))
    return None
