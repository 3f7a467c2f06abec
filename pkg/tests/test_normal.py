import random
from fractions import Fraction

import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from utcsolve.core import INF, Node, TreeConstraint, TreeExpr, parse_system
from utcsolve.normal import Bound, BoundKind, classify, collapse_cycles, isolate, normalize
from utcsolve.unfold import check_assignment

from conftest import ALL_ONES, HALVING, random_tree_system


def bounds_text(nf):
    return sorted(str(b) for b in nf.bounds())


def test_two_roots_level_one():
    nf = normalize(parse_system(ALL_ONES))
    assert nf.level == 1
    assert bounds_text(nf) == sorted(["l x >= l y", "l y <= l x", "l x <= x", "l y >= y"])
    assert {str(c) for c in nf.ac} == {"@(x) = 1", "@(y) = 1", "@(x) >= @(y)"}


def test_halving_rational_coefficient():
    nf = normalize(parse_system(HALVING))
    (up,) = nf.uppers
    assert str(up) == "l x <= 1/2 * x"
    assert up.pos[0].coeff == Fraction(1, 2)
    assert "l y >= 2 * y" in bounds_text(nf)


def test_single_long_lower():
    s = parse_system("l r r l x >= x + l x")
    nf = normalize(s)
    assert nf.level == 4
    (b,) = nf.lowers
    assert b.kind is BoundKind.LOWER and not nf.uppers and not nf.undirected
    assert {n.level for n in nf.arith_vars} == {0, 1, 2, 3}


def test_dag_derived():
    nf = normalize(parse_system("x >= y + z\nz >= t\ny >= t"))
    assert {str(b) for b in nf.derived} == {"t <= z", "t <= y", "y <= x - z", "z <= x - y"}
    assert nf.collapse.is_acyclic()
    order = [c[0].var for c in nf.collapse.components]
    assert order.index("x") < order.index("y") < order.index("t")


def test_cycle_collapses():
    nf = normalize(parse_system("x >= y\ny >= x + r"))
    assert nf.collapse.equalities == [(Node((), "x"), Node((), "y"))]
    assert nf.collapse.zero_forced == (TreeExpr((), "r"),)


def test_classify_examples():
    (c,) = parse_system("l r r l x >= x + l x").tree
    assert classify(c) is BoundKind.LOWER
    (c,) = parse_system("l x <= x").tree
    assert classify(c) is BoundKind.UPPER
    (c,) = parse_system("x >= y + z").tree
    assert classify(c) is BoundKind.UNDIRECTED


def test_variants_for_each_longest_summand():
    (c,) = parse_system("x >= l y + l z + w").tree
    out = isolate(c)
    assert sorted(str(b) for b in out) == ["l y <= x - l z - w", "l z <= x - l y - w"]


def test_grouping_divides():
    (c,) = parse_system("x >= l y + l y").tree
    (b,) = isolate(c)
    assert str(b) == "l y <= 1/2 * x"


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lhs_words_share_level(seed):
    s = random_tree_system(random.Random(seed), max_word=3)
    nf = normalize(s)
    for b in nf.bounds():
        assert b.head.level == nf.level
    for b in nf.lowers + nf.uppers:
        assert all(t.level < nf.level for t in b.pos)
        # other longest summands stay on the subtracted side
        assert all(t.level <= nf.level for t in b.neg)
    for c in nf.ac:
        assert all(a.level < max(nf.level, 1) for a in c.atoms)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_collapse_matches_networkx(seed):
    rng = random.Random(seed)
    names = [Node((), v) for v in "abcdef"[: rng.randint(2, 6)]]
    bounds = []
    for _ in range(rng.randint(1, 8)):
        head = rng.choice(names)
        pos = tuple(TreeExpr((), v.var) for v in rng.sample(names, rng.randint(1, 2)))
        bounds.append(Bound(BoundKind.UNDIRECTED, ">=", head, pos))
    res = collapse_cycles(bounds)
    g = nx.DiGraph()
    for b in bounds:
        g.add_node(b.head)
        for t in b.pos:
            g.add_edge(b.head, t.node)
    expected = {frozenset(c) for c in nx.strongly_connected_components(g)}
    assert {frozenset(c) for c in res.components} == expected
    assert res.is_acyclic()
    cond = nx.DiGraph(list(res.edges))
    cond.add_nodes_from(range(len(res.components)))
    assert nx.is_directed_acyclic_graph(cond)
    # components come out greater side first
    assert all(a < b for a, b in res.edges)


def _valuation(rng):
    kind = rng.randrange(4)
    table = {}

    def val(n):
        if kind == 0:
            return Fraction(rng.randint(0, 2))
        if kind == 1:
            return Fraction(2) ** n.level
        if kind == 2:
            return INF if n.var == "x" else Fraction(1)
        if n not in table:
            table[n] = rng.choice([Fraction(0), Fraction(1), Fraction(2), INF])
        return table[n]

    return val


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_equisatisfiable_pointwise(seed):
    rng = random.Random(seed)
    s = random_tree_system(rng, max_word=2)
    nf = normalize(s)
    val = _valuation(rng)
    memo = {}

    def fixed(n):
        if n not in memo:
            memo[n] = val(n)
        return memo[n]

    depth = 3
    lifted = nf.as_system()
    if check_assignment(s, fixed, depth + nf.level):
        assert check_assignment(lifted, fixed, depth)
    if check_assignment(lifted, fixed, depth):
        assert check_assignment(s, fixed, depth)


def test_as_system_round_trip_constraints():
    nf = normalize(parse_system(HALVING))
    tree = nf.as_system().tree
    assert TreeConstraint(TreeExpr((), "x"), (TreeExpr(("l",), "x", 2),)) in tree
