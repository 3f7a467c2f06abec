"""Slow reference implementations used only by the tests."""

import itertools
import random
from fractions import Fraction

from utcsolve.core import ArithConstraint, Form, Node
from utcsolve.lp import Feasible, LinearProgram, q_feasible


def random_lp(rng: random.Random, max_vars: int = 6, max_constraints: int = 5) -> LinearProgram:
    names = [Node((), v) for v in "abcdef"[: rng.randint(1, max_vars)]]

    def side():
        f = Form.constant(rng.choice([0, 0, 1, 2, 3]))
        for v in rng.sample(names, rng.randint(0, min(3, len(names)))):
            f = f + Form.var(v, rng.randint(1, 3))
        return f

    cons = []
    for _ in range(rng.randint(1, max_constraints)):
        g, l = side(), side()
        if g == l:
            continue
        cons.append(ArithConstraint(rng.choice([">=", ">=", "<=", "="]), g, l))
    return LinearProgram(tuple(cons), tuple(names))


def d_feasible_by_enumeration(lp: LinearProgram, forced=()) -> bool:
    """Try every set of variables at infinity, then solve the rest over Q."""
    variables = list(lp.variables)
    forced = set(forced)
    for k in range(len(variables) + 1):
        for inf in itertools.combinations(variables, k):
            inf = set(inf)
            if inf & forced:
                continue
            kept = []
            ok = True
            for c in lp.constraints:
                for g, l in c.oriented():
                    if set(g.variables) & inf:
                        continue
                    if set(l.variables) & inf:
                        ok = False
                        break
                    kept.append(ArithConstraint(">=", g, l))
                if not ok:
                    break
            if not ok:
                continue
            finite = tuple(v for v in variables if v not in inf)
            if isinstance(q_feasible(LinearProgram(tuple(kept), finite)), Feasible):
                return True
    return False


def rational_grid(lo=0, hi=3, dens=(1, 2, 3)):
    return sorted({Fraction(n, d) for d in dens for n in range(lo * d, hi * d + 1)})
