"""Exact feasibility of finite linear systems over Q>=0 and over D.

The simplex runs on sparse rows of ``Fraction`` with Bland's rule, so it
terminates and never rounds. Infeasibility comes back as a Farkas-style
combination of the input constraints that multiplies out to ``0 >= c`` with
``c > 0``; callers can check it with :func:`verify_refutation` without
trusting the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import INF, ArithConstraint, ExtValue, Form, ext_compare, parse_system

ZERO = Fraction(0)


@dataclass(frozen=True)
class LinearProgram:
    constraints: tuple[ArithConstraint, ...]
    variables: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        seen: dict = {v: None for v in self.variables}
        for c in self.constraints:
            for v in list(c.lhs.variables) + list(c.rhs.variables):
                seen.setdefault(v, None)
        object.__setattr__(self, "variables", tuple(seen))

    def to_text(self) -> str:
        return "".join(f"{c}\n" for c in self.constraints)

    @classmethod
    def from_text(cls, text: str) -> "LinearProgram":
        return cls(parse_system(text).arith)

    def restricted(self, keep: set) -> tuple["LinearProgram", list[int]]:
        """Sub-program of the constraints whose variables all lie in ``keep``."""
        idx = [i for i, c in enumerate(self.constraints) if c.atoms <= keep]
        return LinearProgram([self.constraints[i] for i in idx], tuple(v for v in self.variables if v in keep)), idx


@dataclass(frozen=True)
class Refutation:
    """Multipliers ``(constraint index, m)``; ``sum m * (greater - lesser)`` is
    a form with nonpositive coefficients and negative constant."""

    multipliers: tuple[tuple[int, Fraction], ...]
    combined: Form

    def summary(self) -> str:
        pos, _ = (-self.combined).split()
        return f"0 >= {pos}"


@dataclass
class Feasible:
    witness: dict
    objective: Fraction | None = None

    def __bool__(self) -> bool:
        return True


@dataclass
class Infeasible:
    refutation: Refutation
    mustfin: tuple = ()
    derivation: tuple = ()

    def __bool__(self) -> bool:
        return False


LpResult = Feasible | Infeasible


def _difference(c: ArithConstraint) -> Form:
    """``greater - lesser`` for ``>=``/``<=``; ``lhs - rhs`` for ``=``."""
    if c.rel == "<=":
        return c.rhs - c.lhs
    return c.lhs - c.rhs


def combine(lp: LinearProgram, multipliers: Iterable[tuple[int, Fraction]]) -> Form:
    total = Form()
    for i, m in multipliers:
        total = total + _difference(lp.constraints[i]) * m
    return total


class _Tableau:
    """Sparse simplex tableau; columns are integers, rows are dicts."""

    def __init__(self):
        self.rows: list[dict[int, Fraction]] = []
        self.rhs: list[Fraction] = []
        self.basis: list[int] = []
        self.red: dict[int, Fraction] = {}
        self.red0 = ZERO

    def pivot(self, i: int, j: int) -> None:
        row = self.rows[i]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in row:
                row[k] *= inv
            self.rhs[i] *= inv
        for k, other in enumerate(self.rows):
            if k == i:
                continue
            f = other.get(j)
            if f:
                for col, v in row.items():
                    nv = other.get(col, ZERO) - f * v
                    if nv:
                        other[col] = nv
                    else:
                        other.pop(col, None)
                self.rhs[k] -= f * self.rhs[i]
        f = self.red.get(j)
        if f:
            for col, v in row.items():
                nv = self.red.get(col, ZERO) - f * v
                if nv:
                    self.red[col] = nv
                else:
                    self.red.pop(col, None)
            self.red0 -= f * self.rhs[i]
        self.basis[i] = j

    def run(self, allowed) -> str:
        """Minimise with Bland's rule; returns 'optimal' or 'unbounded'."""
        while True:
            entering = None
            for col in sorted(c for c, v in self.red.items() if v < 0):
                if allowed(col):
                    entering = col
                    break
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is not None and a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def _solve(lp: LinearProgram, objective: Form | None = None) -> LpResult:
    """Phase 1 (+ optional phase 2 maximising ``objective``) over ``x >= 0``."""
    index = {v: k for k, v in enumerate(lp.variables)}
    n = len(index)
    tab = _Tableau()
    signs: list[tuple[int, int]] = []  # (constraint index, sign) per row
    next_col = n
    entries = []
    for ci, c in enumerate(lp.constraints):
        f = _difference(c)
        coeffs = {index[k]: v for k, v in f.coeffs}
        b = -f.const
        slack = None
        if c.rel != "=":
            slack = next_col
            next_col += 1
        entries.append((ci, coeffs, b, slack))
    art_start = next_col
    ident: list[int] = []  # column holding +e_r in the initial tableau
    for r, (ci, coeffs, b, slack) in enumerate(entries):
        if slack is not None and b <= 0:
            # -f + s = -b >= 0: the slack starts in the basis
            sign = -1
            row = {k: -v for k, v in coeffs.items()}
            row[slack] = Fraction(1)
            tab.basis.append(slack)
            ident.append(slack)
        else:
            sign = -1 if b < 0 else 1
            row = {k: v * sign for k, v in coeffs.items()}
            if slack is not None:
                row[slack] = Fraction(-sign)
            art = art_start + r
            row[art] = Fraction(1)
            tab.basis.append(art)
            ident.append(art)
            for k, v in row.items():
                if k < art_start:
                    tab.red[k] = tab.red.get(k, ZERO) - v
            tab.red0 -= b * sign
        tab.rows.append(row)
        tab.rhs.append(b * sign)
        signs.append((ci, sign))
    tab.red = {k: v for k, v in tab.red.items() if v}
    tab.run(lambda col: True)
    if -tab.red0 > 0:
        # y = c_B B^-1, read from the identity columns of the tableau
        y = [ZERO] * len(tab.rows)
        basic_art = [i for i, bvar in enumerate(tab.basis) if bvar >= art_start]
        for r, col in enumerate(ident):
            for i in basic_art:
                v = tab.rows[i].get(col)
                if v:
                    y[r] += v
        mult = []
        for r, (ci, sign) in enumerate(signs):
            m = y[r] * sign
            if m:
                mult.append((ci, m))
        ref = Refutation(tuple(mult), combine(lp, mult))
        if not _refutes(lp, ref):
            raise AssertionError("simplex produced an invalid refutation")
        return Infeasible(ref)
    # drive remaining artificials out of the basis
    for i, bvar in enumerate(tab.basis):
        if bvar >= art_start:
            for col in sorted(tab.rows[i]):
                if col < art_start and tab.rows[i][col] != 0:
                    tab.pivot(i, col)
                    break
    value = None
    if objective is not None:
        tab.red = {}
        for k, v in objective.coeffs:
            tab.red[index[k]] = -v
        tab.red0 = ZERO
        for i, bvar in enumerate(tab.basis):
            cb = tab.red.get(bvar)
            if cb:
                for col, v in tab.rows[i].items():
                    nv = tab.red.get(col, ZERO) - cb * v
                    if nv:
                        tab.red[col] = nv
                    else:
                        tab.red.pop(col, None)
                tab.red0 -= cb * tab.rhs[i]
        status = tab.run(lambda col: col < art_start)
        if status == "unbounded":
            raise ValueError("objective is unbounded")
    x = {v: ZERO for v in lp.variables}
    inv = {k: v for v, k in index.items()}
    for i, bvar in enumerate(tab.basis):
        if bvar < n:
            x[inv[bvar]] = tab.rhs[i]
    if objective is not None:
        value = objective.const + sum((c * x[k] for k, c in objective.coeffs), ZERO)
    return Feasible(x, value)


def _refutes(lp: LinearProgram, ref: Refutation) -> bool:
    return verify_refutation(lp, ref)


def q_feasible(lp: LinearProgram, maximize: Form | None = None) -> LpResult:
    """Exact feasibility over nonnegative rationals.

    With ``maximize`` the witness is an optimal vertex for that objective.
    """
    return _solve(lp, maximize)


@dataclass
class MustFin:
    members: frozenset
    derivation: tuple[tuple[object, int], ...] = field(default=())


def must_finite(lp: LinearProgram, forced: Iterable = ()) -> MustFin:
    """Least set of variables finite in every D-solution.

    A constraint whose greater side is constant or entirely finite makes every
    variable of its lesser side finite. ``forced`` seeds the set (variables the
    caller forbids from being infinite); their derivation index is ``-1``.
    """
    members: dict = {}
    for v in forced:
        members.setdefault(v, -1)
    oriented = [(i, g, l) for i, c in enumerate(lp.constraints) for g, l in c.oriented()]
    changed = True
    while changed:
        changed = False
        for i, g, l in oriented:
            if all(v in members for v in g.variables):
                for v in l.variables:
                    if v not in members:
                        members[v] = i
                        changed = True
    return MustFin(frozenset(members), tuple(members.items()))


def d_feasible(lp: LinearProgram, forced: Iterable = (), maximize: Form | None = None) -> LpResult:
    """Feasibility over D = Q>=0 + {inf}.

    Variables outside the must-finite set are put to infinity, which satisfies
    every constraint in which they occur; the rest is an ordinary rational LP.
    """
    mf = must_finite(lp, forced)
    sub, idx = lp.restricted(set(mf.members))
    obj = None
    if maximize is not None and set(maximize.variables) <= mf.members:
        obj = maximize
    res = q_feasible(sub, obj)
    if isinstance(res, Infeasible):
        mult = tuple((idx[i], m) for i, m in res.refutation.multipliers)
        ref = Refutation(mult, combine(lp, mult))
        return Infeasible(ref, tuple(sorted(mf.members, key=str)), mf.derivation)
    witness: dict = {v: INF for v in lp.variables}
    witness.update(res.witness)
    return Feasible(witness, res.objective)


# ---------------------------------------------------------------------------
# independent checks


def verify_witness(lp: LinearProgram, witness: Mapping) -> bool:
    """Substitute an extended-valued witness into every constraint."""
    for c in lp.constraints:
        for g, l in c.oriented():
            if ext_compare(g.evaluate(witness), l.evaluate(witness)) < 0:
                return False
    return True


def verify_refutation(lp: LinearProgram, ref: Refutation, derivation: Sequence | None = None) -> bool:
    """Check the combination arithmetic and, for D, the must-finite derivation.

    With ``derivation`` every variable of the combined constraints must be
    shown finite by a chain of derivation steps, so the contradiction holds
    over D and not just over the rationals.
    """
    total = Form()
    for i, m in ref.multipliers:
        c = lp.constraints[i]
        if c.rel != "=" and m < 0:
            return False
        total = total + _difference(c) * m
    if total != ref.combined:
        return False
    if any(v > 0 for _, v in total.coeffs) or total.const >= 0:
        return False
    if derivation is not None:
        finite: set = set()
        for var, ci in derivation:
            if ci >= 0:
                c = lp.constraints[ci]
                ok = any(
                    var in l.variables and all(v in finite for v in g.variables) for g, l in c.oriented()
                )
                if not ok:
                    return False
            finite.add(var)
        for i, _ in ref.multipliers:
            if not lp.constraints[i].atoms <= finite:
                return False
    return True


def evaluate_witness(lp: LinearProgram, witness: Mapping) -> dict:
    return {v: witness.get(v, ZERO) for v in lp.variables}


def as_ext(v) -> ExtValue:
    return INF if v is INF else Fraction(v)
