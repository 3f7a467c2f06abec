import random

import pytest

from utcsolve.core import ArithConstraint, ConstraintSystem, Form, Node, TreeConstraint, TreeExpr

ALL_ONES = """
@(x) = 1
@(y) = 1
x >= y
l x <= x
l y >= y
"""

HALVING = """
x >= y
@(y) >= 1
l x + l x <= x
l y >= y + y
"""

CLOSING = """
labels: l r
@(y) = 1
y >= l y
y >= r y
l x >= x + y
r x >= x + y
x >= l r x
"""

SMALL_UNSAT = """
@(x) = 1
x >= l x
l x >= x + x
"""

LABEL_CHAIN = """
l x >= x
x >= r z
l r z >= l l y
l y >= y
"""

THREE_LABELS = """
labels: l r m
@(x) = 1
l r x >= x
l x >= x
m x >= x
x >= r l x
x >= m l x
"""


def random_tree_system(rng: random.Random, *, max_vars=3, max_constraints=3, max_word=2, max_coeff=2, roots=True):
    alphabet = ("l", "r")[: rng.randint(1, 2)]
    variables = ("x", "y", "z", "t")[: rng.randint(1, max_vars)]

    def word():
        return tuple(rng.choice(alphabet) for _ in range(rng.randint(0, max_word)))

    tree = []
    for _ in range(rng.randint(1, max_constraints)):
        lhs = TreeExpr(word(), rng.choice(variables))
        rhs = tuple(
            TreeExpr(word(), rng.choice(variables), rng.randint(1, max_coeff)) for _ in range(rng.randint(1, 2))
        )
        tree.append(TreeConstraint(lhs, rhs))
    arith = []
    if roots:
        for _ in range(rng.randint(0, 2)):
            a = Node((), rng.choice(variables))
            rel = rng.choice([">=", "<=", "="])
            arith.append(ArithConstraint(rel, Form.var(a), Form.constant(rng.randint(1, 3))))
    return ConstraintSystem(alphabet, tuple(sorted(variables)), tuple(tree), tuple(arith), ())


# -- acceptance summary ----------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str = "") -> None:
        ACCEPTANCE[n] = (ok, detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
