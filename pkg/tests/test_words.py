import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utcsolve.core import parse_system
from utcsolve.words import (
    CommonRoot,
    IndependentAfter,
    PreconditionViolated,
    ShapeMismatch,
    analyze_self_similar,
    common_root,
    conjugacy_decompose,
    power_of,
    primitive_root,
    suffix_dependent,
)

words = st.lists(st.sampled_from("lr"), max_size=4).map(tuple)
nonempty = st.lists(st.sampled_from("lr"), min_size=1, max_size=3).map(tuple)


def w(s: str) -> tuple:
    return tuple(s)


def test_suffix_dependent_examples():
    assert suffix_dependent(w("r"), w("lr"))
    assert not suffix_dependent(w("lr"), w("rl"))
    for v in ["", "l", "lrl"]:
        assert suffix_dependent((), w(v))


def test_conjugacy_examples():
    d = conjugacy_decompose(w("ab"), w("a"), w("ba"))
    assert (d.q, d.r, d.i) == (w("a"), w("b"), 0)
    # several decompositions exist here; the shortest q is returned
    d = conjugacy_decompose(w("aa"), w("aa"), w("aa"))
    assert (d.q, d.r, d.i) == ((), w("aa"), 1)


def test_conjugacy_rejects_bad_input():
    with pytest.raises(PreconditionViolated):
        conjugacy_decompose(w("ab"), w("b"), w("ba"))
    with pytest.raises(PreconditionViolated):
        conjugacy_decompose((), w("a"), w("a"))


@settings(max_examples=300, deadline=None)
@given(words, words, st.integers(0, 3))
def test_conjugacy_recomposes(q, r, i):
    s, u, t = q + r, r + q, q + (r + q) * i
    if not (s and t and u):
        return
    d = conjugacy_decompose(s, t, u)
    assert d.q + d.r == s
    assert d.r + d.q == u
    assert d.q + (d.r + d.q) * d.i == t
    assert len(d.q) <= len(q)


def test_common_root_examples():
    assert common_root(w("a"), w("a"), w("aa"), 2, 2, 2) == w("a")
    # (lr)^2 (lrlr)^2 == (lrlr)^3, so this one is a genuine instance
    assert common_root(w("lr"), w("lrlr"), w("lrlr"), 2, 2, 3) == w("lr")
    with pytest.raises(PreconditionViolated):
        common_root(w("lr"), w("rl"), w("lrlr"), 2, 2, 2)
    with pytest.raises(PreconditionViolated):
        common_root(w("a"), w("a"), w("a"), 1, 2, 3)


@settings(max_examples=200, deadline=None)
@given(nonempty, st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(2, 3), st.integers(2, 3))
def test_common_root_divides(t, a, b, c, n, m):
    x, y = t * a, t * b
    total = len(x) * n + len(y) * m
    for k in range(2, total + 1):
        if total % k == 0 and (x * n + y * m)[: total // k] * k == x * n + y * m:
            z = (x * n + y * m)[: total // k]
            root = common_root(x, y, z, n, m, k)
            for v in (x, y, z):
                assert power_of(v, root) is not None
            return


@settings(max_examples=200, deadline=None)
@given(nonempty, st.integers(1, 4))
def test_primitive_root_of_power(t, k):
    root = primitive_root(t)
    assert power_of(t * k, root) is not None
    assert primitive_root(root) == root


def one(text):
    (c,) = parse_system(text).tree
    return c


def test_self_similar_growth():
    res = analyze_self_similar(one("l r l r x >= l r x + l r x"))
    assert res == CommonRoot(w("lr"))
    assert analyze_self_similar(one("l x >= x")) == CommonRoot(w("l"))


def test_self_similar_independent():
    c = one("l r x >= r x")
    res = analyze_self_similar(c, ("l", "r"))
    assert isinstance(res, IndependentAfter)
    assert not any(suffix_dependent(res.t + s.word, c.lhs.word) for s in c.rhs)


def test_self_similar_shape():
    with pytest.raises(ShapeMismatch):
        analyze_self_similar(one("l x >= y"))
    with pytest.raises(ShapeMismatch):
        analyze_self_similar(one("l x >= r x"))


@settings(max_examples=200, deadline=None)
@given(st.lists(nonempty, min_size=1, max_size=3))
def test_common_root_blocks_are_powers(blocks):
    lhs = sum(blocks, ())
    cuts = [sum(map(len, blocks[:i])) for i in range(1, len(blocks) + 1)]
    rhs = " + ".join(" ".join(lhs[c:] + ("x",)) for c in cuts)
    c = one(f"{' '.join(lhs)} x >= {rhs}")
    res = analyze_self_similar(c, ("l", "r"))
    if isinstance(res, CommonRoot):
        for b in blocks:
            assert power_of(b, res.p)
    else:
        assert not any(suffix_dependent(res.t + s.word, lhs) for s in c.rhs)
