import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from utcsolve.core import INF, ArithConstraint, Form, Node, parse_system
from utcsolve.lp import (
    Feasible,
    Infeasible,
    LinearProgram,
    d_feasible,
    must_finite,
    q_feasible,
    verify_refutation,
    verify_witness,
)

from oracles import d_feasible_by_enumeration, random_lp

X, Y = Node((), "x"), Node((), "y")


def lp_of(text: str) -> LinearProgram:
    return LinearProgram(parse_system(text).arith)


def test_q_infeasible_has_refutation():
    lp = lp_of("@(x) >= 1\n0 >= @(x)")
    res = q_feasible(lp)
    assert isinstance(res, Infeasible)
    assert verify_refutation(lp, res.refutation)
    assert res.refutation.summary() == "0 >= 1"


def test_q_feasible_simple():
    lp = lp_of("@(x) + @(y) <= 1")
    res = q_feasible(lp)
    assert isinstance(res, Feasible) and verify_witness(lp, res.witness)


def test_q_maximize():
    lp = lp_of("@(x) + @(y) <= 3\n@(x) <= 2")
    res = q_feasible(lp, Form.var(X) + Form.var(Y) * 2)
    assert res.objective == 6 and res.witness[Y] == 3


def test_mustfin_example():
    lp = lp_of("@(y) = 1\n@(y) >= @(l y)\n@(z) >= @(x) + 1")
    mf = must_finite(lp)
    assert mf.members == {Node((), "y"), Node(("l",), "y")}
    res = d_feasible(lp)
    assert isinstance(res, Feasible)
    assert res.witness[Node((), "y")] == 1
    assert res.witness[Node((), "z")] is INF and res.witness[X] is INF
    assert verify_witness(lp, res.witness)


def test_infinity_absorbs():
    lp = LinearProgram((ArithConstraint(">=", Form.var(X), Form.var(X) + Form.constant(1)),))
    assert isinstance(q_feasible(lp), Infeasible)
    res = d_feasible(lp)
    assert isinstance(res, Feasible) and res.witness[X] is INF


def test_d_infeasible():
    lp = lp_of("2 >= @(x)\n@(x) >= 3")
    res = d_feasible(lp)
    assert isinstance(res, Infeasible)
    assert set(res.mustfin) == {X}
    assert verify_refutation(lp, res.refutation, res.derivation)


def test_forced_finite():
    lp = LinearProgram((ArithConstraint(">=", Form.var(X), Form.var(X) + Form.constant(1)),))
    res = d_feasible(lp, forced=[X])
    assert isinstance(res, Infeasible)
    assert verify_refutation(lp, res.refutation, res.derivation)


def test_refutation_tampering_detected():
    lp = lp_of("2 >= @(x)\n@(x) >= 3")
    res = d_feasible(lp)
    bad = type(res.refutation)(tuple((i, m * 2) for i, m in res.refutation.multipliers), res.refutation.combined)
    assert not verify_refutation(lp, bad)
    # a derivation that skips the finiteness step is rejected
    assert not verify_refutation(lp, res.refutation, ())


def test_lp_text_round_trip():
    lp = lp_of("@(x) + 2 >= 3 * @(y)\n@(y) = 1")
    assert LinearProgram.from_text(lp.to_text()).constraints == lp.constraints


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_d_feasible_matches_enumeration(seed):
    lp = random_lp(random.Random(seed))
    res = d_feasible(lp)
    assert isinstance(res, Feasible) == d_feasible_by_enumeration(lp)
    if isinstance(res, Feasible):
        assert verify_witness(lp, res.witness)
    else:
        assert verify_refutation(lp, res.refutation, res.derivation)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_q_feasible_certificates(seed):
    lp = random_lp(random.Random(seed), max_vars=4)
    res = q_feasible(lp)
    if isinstance(res, Feasible):
        assert all(v is not INF and v >= 0 for v in res.witness.values())
        assert verify_witness(lp, res.witness)
    else:
        assert verify_refutation(lp, res.refutation)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_mustfin_monotone(seed_a, seed_b):
    a, b = random_lp(random.Random(seed_a)), random_lp(random.Random(seed_b))
    both = LinearProgram(a.constraints + b.constraints)
    assert must_finite(a).members <= must_finite(both).members


def test_exact_rationals():
    lp = lp_of("3 * @(x) = 1")
    res = q_feasible(lp)
    assert res.witness[X] == Fraction(1, 3)
