import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topical import boolfn as bf
from topical.expr import Avg, Compose, Entries, Var, evaluate, identity_map
from topical.generate import FLAT_SHAPE, ORACLE_SHAPE, MapShape, random_map
from topical.signature import (SignatureError, local_signatures, lower_signature,
                               numeric_lower_oracle, numeric_upper_oracle, upper_signature)


def test_upper_signature_examples(e1, e2):
    assert upper_signature(e1).render() == [
        "(or (x 2) (x 3))", "(or (x 1) (x 3))", "(and (x 1) (x 2))"]
    assert upper_signature(e2).render() == ["(or (x 1) (x 2))"] * 2
    assert upper_signature(identity_map(3)).render() == ["(x 1)", "(x 2)", "(x 3)"]


def test_lower_signature_examples(e2, mat_a):
    assert lower_signature(e2).render() == ["(x 1)", "(x 2)"]
    assert lower_signature(mat_a).render() == ["(x 2)", "(x 2)"]
    assert lower_signature(identity_map(2)).render() == ["(x 1)", "(x 2)"]


def test_geometric_mean_rules_differ_between_signatures():
    f = Entries((Avg(0.0, (0.5, 0.5)), Var(0)))
    assert upper_signature(f).render()[0] == "(or (x 1) (x 2))"
    assert lower_signature(f).render()[0] == "(and (x 1) (x 2))"


def test_local_signatures_e4(e4):
    s = local_signatures(e4, [1, 2])
    assert s.upper.render() == ["(x 1)", "(x 2)"]
    assert s.lower.render() == ["(x 1)", "(x 2)"]
    t = local_signatures(e4, [1, 1])
    assert t.upper.render() == ["(x 1)", "(or (x 1) (x 2))"]
    assert t.lower.render() == ["(x 1)", "(and (x 1) (x 2))"]
    (tie,) = t.ties.ties
    assert tie.tau == (1, 1) and tie.r == math.inf


def test_local_tie_tolerance(e4):
    near = [1.0, 1.0 + 1e-12]
    assert local_signatures(e4, near).upper.render()[1] == "(or (x 1) (x 2))"
    assert local_signatures(e4, near, tol=0.0).upper.render()[1] == "(x 2)"


def test_local_signatures_e2(e2):
    s = local_signatures(e2, [1, 1])
    assert s.upper.render() == s.lower.render() == ["(or (x 1) (x 2))"] * 2


def test_local_signatures_need_interior_point(e2):
    with pytest.raises(SignatureError):
        local_signatures(e2, [0.0, 1.0])
    with pytest.raises(SignatureError):
        local_signatures(e2, [1.0, 1.0, 1.0])


def test_numeric_oracle_examples(e1, e2, mat_a):
    assert numeric_upper_oracle(e1, (1, 1, 0)) == (1, 1, 1)
    assert numeric_upper_oracle(e1, (0, 0, 1)) == (1, 1, 0)
    assert numeric_upper_oracle(e1, (0, 0, 0)) == (0, 0, 0)
    assert numeric_lower_oracle(e2, (1, 0)) == (1, 0)
    assert numeric_lower_oracle(mat_a, (0, 1)) == (1, 1)
    assert numeric_lower_oracle(e1, (1, 1, 1)) == (1, 1, 1)


def test_upper_oracle_misreads_slow_geometric_growth():
    # M_0 with weight 1/4 on J grows like t^(1/4): at T=40 the log is only 10
    f = Entries((Avg(0.0, (0.25, 0.75)), Var(1)))
    assert upper_signature(f)((1, 0)) == (1, 0)
    assert numeric_upper_oracle(f, (1, 0)) == (0, 0)
    assert numeric_upper_oracle(f, (1, 0), T=1000.0) == (1, 0)


def _agree(f):
    n = len(upper_signature(f).outputs)
    up, lo = upper_signature(f), lower_signature(f)
    for m in range(1 << n):
        J = bf.bits(m, n)
        assert up(J) == numeric_upper_oracle(f, J), (J, "upper")
        assert lo(J) == numeric_lower_oracle(f, J), (J, "lower")


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_signatures_match_numeric_oracles(seed):
    rng = np.random.default_rng(seed)
    _agree(random_map(rng, int(rng.integers(2, 7)), ORACLE_SHAPE))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lower_signature_matches_oracle_on_full_class(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    f = random_map(rng, n, MapShape(max_depth=3))
    lo = lower_signature(f)
    for m in range(1 << n):
        J = bf.bits(m, n)
        assert lo(J) == numeric_lower_oracle(f, J)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_signatures_fix_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    f = random_map(rng, n)
    for g in (upper_signature(f), lower_signature(f)):
        assert g((0,) * n) == (0,) * n and g((1,) * n) == (1,) * n


def _has_near_tie(f, u):
    def pattern(tol):
        return [(t.tau, t.mu) for t in local_signatures(f, u, tol).ties.ties]
    return pattern(1e-4) != pattern(0.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_upper_matches_perturbation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    f = random_map(rng, n)
    u = np.exp(rng.uniform(-1, 1, n))
    if _has_near_tie(f, u):
        return
    sig = local_signatures(f, u)
    fu = evaluate(f, u)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        up = sig.upper(tuple(int(v) for v in e))
        lo = sig.lower(tuple(int(v) for v in e))
        rises = [evaluate(f, u + t * e) > fu * (1 + 1e-12) for t in (1e-6, 1.0, 1e6)]
        assert tuple(int(b) for b in np.logical_and.reduce(rises)) == up
        drops = evaluate(f, u - 1e-6 * u[j] * e) < fu * (1 - 1e-13)
        assert tuple(int(b) for b in drops) == lo


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_signatures_compose_coherently(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    shape = MapShape(p_compose=0.0)
    f, g = random_map(rng, n, shape), random_map(rng, n, shape)
    u = np.exp(rng.uniform(-1, 1, n))
    whole = local_signatures(Compose(f, g), u)
    outer = local_signatures(f, evaluate(g, u))
    inner = local_signatures(g, u)
    assert whole.upper.tables() == bf.compose(outer.upper, inner.upper).tables()
    assert whole.lower.tables() == bf.compose(outer.lower, inner.lower).tables()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_geometric_pool_matches_at_larger_magnitude(seed):
    rng = np.random.default_rng(seed)
    f = random_map(rng, int(rng.integers(2, 7)), FLAT_SHAPE)
    n = len(upper_signature(f).outputs)
    up = upper_signature(f)
    for m in range(1 << n):
        J = bf.bits(m, n)
        assert up(J) == numeric_upper_oracle(f, J, T=1000.0)
