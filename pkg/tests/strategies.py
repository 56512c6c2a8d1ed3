"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from topical.boolfn import and_, const, or_, var


def gates(n):
    """Random monotone circuits over inputs x_1..x_n."""
    leaves = st.one_of(st.builds(var, st.integers(0, n - 1)), st.builds(const, st.integers(0, 1)))
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.lists(kids, min_size=1, max_size=3).map(lambda ks: and_(*ks)),
            st.lists(kids, min_size=1, max_size=3).map(lambda ks: or_(*ks)),
        ),
        max_leaves=12,
    )


def boolmaps(n):
    return st.lists(gates(n), min_size=n, max_size=n)
