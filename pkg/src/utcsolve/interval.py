"""Symbolic interval sets, level-wise propagation and the window program.

Endpoints are linear forms over the arithmetic variables (the nodes below
the normal-form level and the free variables). Nodes bounded on both sides
by arithmetic variables carry a class: a canonical set of lower and upper
endpoint forms. Other nodes are fixed to 0 or infinity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence

from .core import INF, ArithConstraint, ConstraintSystem, ExtValue, Form, Lam, Node, Word, words_of_length, words_upto
from .lp import LinearProgram
from .normal import Bound, NormalFormSystem
from .reach import AnchorIndex
from .unfold import KindAutomaton

LinearForm = Form
ZERO_FORM = Form()


class InfinityConflict(ValueError):
    """A finite quantity is required to dominate an infinite one."""


class PatternConflict(ValueError):
    """The pattern forces a node to be both zero-or-finite and infinite (or similar)."""


# ---------------------------------------------------------------------------
# interval algebra


@dataclass(frozen=True)
class Interval:
    lower: Form | type(INF)
    upper: Form | type(INF)

    def scaled(self, c) -> "Interval":
        c = Fraction(c)
        if c <= 0:
            raise ValueError("interval scale must be positive")
        lo = INF if self.lower is INF else self.lower * c
        hi = INF if self.upper is INF else self.upper * c
        return Interval(lo, hi)

    def is_trivial(self) -> bool:
        return self.upper is INF and self.lower == ZERO_FORM

    def __str__(self) -> str:
        return f"[{self.lower}, {self.upper}]"


IntervalSet = frozenset
ZERO = frozenset({Interval(ZERO_FORM, ZERO_FORM)})
INF_SET = frozenset({Interval(INF, INF)})
EMPTY: frozenset = frozenset()


def point(a) -> frozenset:
    """``{[a, a]}`` for an arithmetic variable or constant."""
    f = a if isinstance(a, Form) else (Form.constant(a) if isinstance(a, (int, Fraction)) else Form.var(a))
    return frozenset({Interval(f, f)})


def _add(a, b):
    return INF if a is INF or b is INF else a + b


def iset_add(a: frozenset, b: frozenset) -> frozenset:
    """``{[lo_a + lo_b, inf]}`` over all pairs."""
    return frozenset(Interval(_add(x.lower, y.lower), INF) for x in a for y in b)


def iset_sub(a: frozenset, b: frozenset) -> frozenset:
    """``{[0, hi_a - lo_b]}`` over all pairs."""
    out = set()
    for x in a:
        for y in b:
            if x.upper is INF:
                out.add(Interval(ZERO_FORM, INF))
            elif y.lower is INF:
                raise InfinityConflict("finite upper bound minus an infinite lower bound")
            else:
                out.add(Interval(ZERO_FORM, x.upper - y.lower))
    return frozenset(out)


def iset_scale(c, a: frozenset) -> frozenset:
    return frozenset(i.scaled(c) for i in a)


def format_iset(a: Iterable[Interval]) -> str:
    return "{" + ", ".join(sorted(map(str, a))) + "}"


# ---------------------------------------------------------------------------
# classes


def _dominates(g: Form, f: Form) -> bool:
    """``g >= f`` for every nonnegative valuation (coefficientwise test)."""
    d = g - f
    return d.const >= 0 and all(c >= 0 for _, c in d.coeffs)


def _prune(forms: Iterable[Form], keep_max: bool) -> tuple[Form, ...]:
    forms = set(forms)
    out = []
    for f in forms:
        beaten = any(
            g != f and (_dominates(g, f) if keep_max else _dominates(f, g))
            for g in forms
        )
        if not beaten:
            out.append(f)
    return tuple(sorted(out, key=str))


@dataclass(frozen=True)
class NodeClass:
    """Canonical endpoint sets; the intervals are ``[lo, inf]`` and ``[0, up]``."""

    lowers: tuple[Form, ...]
    uppers: tuple[Form, ...]

    @classmethod
    def make(cls, lowers: Iterable[Form], uppers: Iterable[Form]) -> "NodeClass":
        lowers = [f for f in lowers if f != ZERO_FORM]
        return cls(_prune(lowers, True), _prune(uppers, False))

    def intervals(self) -> frozenset:
        return frozenset([Interval(f, INF) for f in self.lowers] + [Interval(ZERO_FORM, g) for g in self.uppers])

    def size(self) -> int:
        return len(self.lowers) + len(self.uppers)

    def __str__(self) -> str:
        return format_iset(self.intervals())


class Kind(enum.Enum):
    ZERO = 0
    BOUNDED = 1
    INF = 2


@dataclass(frozen=True)
class ZeroInfinityPattern:
    zero: frozenset = frozenset()
    inf: frozenset = frozenset()

    def __post_init__(self):
        if self.zero & self.inf:
            raise ValueError("zero and infinity sets must be disjoint")

    def kind(self, a) -> Kind:
        if a in self.zero:
            return Kind.ZERO
        if a in self.inf:
            return Kind.INF
        return Kind.BOUNDED

    def size(self) -> int:
        return len(self.zero) + len(self.inf)

    def to_json(self) -> dict:
        return {"zero": sorted(map(str, self.zero)), "inf": sorted(map(str, self.inf))}

    def __str__(self) -> str:
        z = ", ".join(sorted(map(str, self.zero))) or "-"
        i = ", ".join(sorted(map(str, self.inf))) or "-"
        return f"zero: {z}; inf: {i}"


def compute_S(system: ConstraintSystem) -> int:
    diffs = {abs(c.lhs.level - t.level) for c in system.tree for t in c.rhs}
    diffs.discard(0)
    return math.lcm(*diffs) if diffs else 1


# ---------------------------------------------------------------------------
# propagation


@dataclass
class Stabilized:
    base: int
    boundary: int
    period: int
    classes: dict[Node, NodeClass]
    kinds: dict[Node, Kind]

    def __bool__(self) -> bool:
        return True


@dataclass
class BudgetExceeded:
    level: int
    trace: list[int] = field(default_factory=list)

    def __bool__(self) -> bool:
        return False


@dataclass
class ImmediateConflict:
    node: Node | None
    reason: str

    def __bool__(self) -> bool:
        return False


PropagationOutcome = Stabilized | BudgetExceeded | ImmediateConflict

_INF_VALUE = object()  # marker for "this node is infinite" during propagation


class Propagation:
    """Resumable interval propagation for one normal form and one pattern."""

    def __init__(
        self,
        nf: NormalFormSystem,
        pattern: ZeroInfinityPattern,
        index: AnchorIndex,
        period: int,
        class_cap: int = 64,
        max_nodes: int = 20000,
    ):
        self.nf = nf
        self.pattern = pattern
        self.index = index
        self.S = period
        self.cap = class_cap
        self.max_nodes = max_nodes
        self.n = nf.level
        self.alphabet = nf.alphabet
        self.variables = nf.source.variables
        self.arith = set(nf.arith_vars)
        self.kinds: dict[Node, Kind] = {}
        self.classes: dict[Node, NodeClass] = {}
        self.by_head = nf.heads_by_node()
        self.zero_forced = {t.node for t in nf.collapse.zero_forced}
        self.computed = self.n - 1
        self.trace: list[int] = []
        self.outcome: PropagationOutcome | None = None

    # -- classification ------------------------------------------------------

    def _rank(self, a) -> int:
        return self.pattern.kind(a).value

    def check_anchors(self) -> None:
        """Reject patterns contradicting derivable order between anchors."""
        for a in self.index.anchors:
            below, _ = self.index.bounds(a)
            for b in below:
                if self._rank(a) < self._rank(b):
                    raise PatternConflict(f"{a} >= {b} contradicts the pattern")

    def kind(self, node: Node) -> Kind:
        got = self.kinds.get(node)
        if got is not None:
            return got
        if node in self.arith:
            return self.pattern.kind(node)
        try:
            k = self.kind_of_bounds(*self.index.bounds(node))
        except PatternConflict:
            raise PatternConflict(f"node {node} is forced both ways") from None
        self.kinds[node] = k
        return k

    def kind_of_bounds(self, below: Iterable, above: Iterable) -> Kind:
        """Kind of a non-anchor node from the anchors it lies above and below."""
        lo = max((self._rank(a) for a in below), default=0)
        hi = min((self._rank(b) for b in above), default=2)
        if lo > hi:
            raise PatternConflict("a node is forced both ways")
        if lo == hi:
            return Kind(lo)
        return Kind.INF if lo == 1 else Kind.ZERO

    def classifier(self, max_states: int = 20000) -> KindAutomaton:
        """Deterministic automaton giving the kind of every non-anchor node."""
        ids: dict[tuple, int] = {}
        labels: dict[int, str] = {}
        delta: dict[tuple[int, str], int] = {}
        start: dict[str, int] = {}
        names = {Kind.ZERO: "zero", Kind.INF: "inf", Kind.BOUNDED: "table"}
        for x in self.variables:
            key = (x, self.index.start_state(x))
            todo = []
            if key not in ids:
                ids[key] = len(ids)
                todo.append(key)
            start[x] = ids[key]
            while todo:
                key = todo.pop()
                q = ids[key]
                labels[q] = names[self.kind_of_bounds(*self.index.bounds_of_state(key[0], key[1]))]
                for a in self.alphabet:
                    nxt = (key[0], self.index.step_state(key[0], key[1], a))
                    if nxt not in ids:
                        if len(ids) >= max_states:
                            raise LevelTooWide("classifier")
                        ids[nxt] = len(ids)
                        todo.append(nxt)
                    delta[(q, a)] = ids[nxt]
        return KindAutomaton(start, delta, labels)

    # -- endpoint sets -------------------------------------------------------

    def lows(self, node: Node):
        k = self.kind(node)
        if k is Kind.INF:
            return _INF_VALUE
        if k is Kind.ZERO:
            return ()
        if node in self.arith:
            return (Form.var(node),)
        return self.classes[node].lowers

    def ups(self, node: Node):
        k = self.kind(node)
        if k is Kind.INF:
            return _INF_VALUE
        if k is Kind.ZERO:
            return (ZERO_FORM,)
        if node in self.arith:
            return (Form.var(node),)
        return self.classes[node].uppers

    def _bounds_of(self, node: Node) -> list[Bound]:
        split = node.level - self.n
        w, u = node.word[:split], node.word[split:]
        return [b.shifted(w) if w else b for b in self.by_head.get(Node(u, node.var), ())]

    def _comp(self, node: Node):
        split = node.level - self.n
        c = self.nf.collapse.comp_of.get(Node(node.word[split:], node.var))
        return None if c is None else (node.word[:split], c)

    def _sum_lows(self, terms) -> list[Form] | None:
        parts = []
        for t in terms:
            ls = self.lows(t.node)
            if ls is _INF_VALUE:
                return None
            parts.append([f * t.coeff for f in ls] or [ZERO_FORM])
        return [sum(combo, Form()) for combo in product(*parts)]

    def _lower_forms(self, node: Node) -> list[Form]:
        out: list[Form] = []
        mine = self._comp(node)
        for b in self._bounds_of(node):
            if b.rel != ">=":
                continue
            if mine is not None and any(self._comp(t.node) == mine for t in b.pos if t.level == node.level):
                continue
            sums = self._sum_lows(b.pos)
            if sums is None:
                raise ImmediateConflictError(node, f"{b} puts an infinite node below a bounded one")
            out.extend(sums)
        return out

    def _upper_forms(self, node: Node) -> list[Form]:
        out: list[Form] = []
        mine = self._comp(node)
        if Node(node.word[node.level - self.n:], node.var) in self.zero_forced:
            out.append(ZERO_FORM)
        for b in self._bounds_of(node):
            if b.rel != "<=":
                continue
            (big,) = b.pos
            if mine is not None and big.level == node.level and self._comp(big.node) == mine:
                continue
            us = self.ups(big.node)
            if us is _INF_VALUE or not us:
                continue
            subs = self._sum_lows(b.neg)
            if subs is None:
                raise ImmediateConflictError(node, f"{b} subtracts an infinite node from a finite one")
            out.extend(u * big.coeff - s for u in us for s in subs)
        return out

    def _level(self, m: int) -> None:
        nodes = [Node(w, x) for x in self.variables for w in words_of_length(self.alphabet, m)]
        bounded = [v for v in nodes if self.kind(v) is Kind.BOUNDED]
        order = sorted(bounded, key=lambda v: -(self._comp(v) or ((), -1))[1])
        groups: dict = {}
        for v in bounded:
            groups.setdefault(self._comp(v) or v, []).append(v)
        lows: dict[Node, list[Form]] = {}
        for v in order:  # sinks first
            if v in lows:
                continue
            members = groups[self._comp(v) or v]
            acc: list[Form] = []
            for u in members:
                acc.extend(self._lower_forms(u))
            cls = NodeClass.make(acc, ())
            for u in members:
                lows[u] = list(cls.lowers)
                self.classes[u] = NodeClass(cls.lowers, ())
        done: set[Node] = set()
        for v in reversed(order):  # sources first
            if v in done:
                continue
            members = groups[self._comp(v) or v]
            acc = []
            for u in members:
                acc.extend(self._upper_forms(u))
            cls = NodeClass.make(lows[v], acc)
            if cls.size() > self.cap:
                raise ClassCapExceeded(v)
            for u in members:
                self.classes[u] = cls
                done.add(u)
        self.trace.append(len({self.classes[v] for v in bounded}))

    def ensure(self, level: int) -> None:
        width = len(self.variables) * max(len(self.alphabet), 1) ** level
        if width > self.max_nodes:
            raise LevelTooWide(level)
        while self.computed < level:
            self.computed += 1
            if self.computed >= self.n:
                self._level(self.computed)

    # -- stabilisation -------------------------------------------------------

    def stabilized_at(self, base: int) -> bool:
        """Every bounded ``p x`` with ``x`` on levels ``base..base+S`` and
        ``|p| = S`` has a bounded ``x`` with the same class."""
        self.ensure(base + 2 * self.S)
        ps = words_of_length(self.alphabet, self.S)
        for m in range(base, base + self.S + 1):
            for w in words_of_length(self.alphabet, m):
                for x in self.variables:
                    v = Node(w, x)
                    for p in ps:
                        pv = v.prefixed(p)
                        if self.kind(pv) is not Kind.BOUNDED:
                            continue
                        if self.kind(v) is not Kind.BOUNDED or self.classes[pv] != self.classes[v]:
                            return False
        return True

    def advance(self, budget: int) -> PropagationOutcome:
        """Try stabilisation bases up to ``n + budget``."""
        if isinstance(self.outcome, (Stabilized, ImmediateConflict)):
            return self.outcome
        start = self.n if not isinstance(self.outcome, BudgetExceeded) else self.outcome.level + 1
        try:
            if start == self.n:
                self.check_anchors()
            for base in range(start, self.n + budget + 1):
                if self.stabilized_at(base):
                    boundary = base + self.S
                    table = {v: c for v, c in self.classes.items() if v.level <= boundary}
                    kinds = {v: k for v, k in self.kinds.items() if v.level <= boundary}
                    self.outcome = Stabilized(base, boundary, self.S, table, kinds)
                    return self.outcome
                self.outcome = BudgetExceeded(base, list(self.trace))
        except PatternConflict as e:
            self.outcome = ImmediateConflict(None, str(e))
        except ImmediateConflictError as e:
            self.outcome = ImmediateConflict(e.node, e.reason)
        except ClassCapExceeded as e:
            self.outcome = ImmediateConflict(e.node, "class size cap exceeded")
        except LevelTooWide as e:
            self.outcome = ImmediateConflict(None, f"level {e.args[0]} exceeds the node cap")
        if self.outcome is None:
            self.outcome = BudgetExceeded(start - 1, list(self.trace))
        return self.outcome

    # -- values ---------------------------------------------------------------

    def representative(self, node: Node, boundary: int) -> Node:
        w = node.word
        if len(w) > boundary:
            k = -(-(len(w) - boundary) // self.S)
            w = w[k * self.S:]
        return Node(w, node.var)


class ImmediateConflictError(Exception):
    def __init__(self, node: Node, reason: str):
        super().__init__(reason)
        self.node = node
        self.reason = reason


class LevelTooWide(Exception):
    pass


class ClassCapExceeded(Exception):
    def __init__(self, node: Node):
        super().__init__(str(node))
        self.node = node


def propagate(
    nf: NormalFormSystem,
    pattern: ZeroInfinityPattern,
    budget: int,
    index: AnchorIndex | None = None,
    period: int | None = None,
) -> PropagationOutcome:
    if index is None:
        from .reach import Entailment

        ent = Entailment(nf.source.tree, nf.alphabet, nf.source.variables)
        index = AnchorIndex(ent, [a for a in nf.arith_vars if isinstance(a, Node)])
    if period is None:
        period = compute_S(nf.source)
    return Propagation(nf, pattern, index, period).advance(budget)


def stabilization_check(prop: Propagation, base: int) -> bool:
    return prop.stabilized_at(base)


# ---------------------------------------------------------------------------
# the window program


class _Eps:
    """The shared strictness margin."""

    def __repr__(self) -> str:
        return "eps"

    __str__ = __repr__

    def __eq__(self, other) -> bool:
        return isinstance(other, _Eps)

    def __hash__(self) -> int:
        return hash("utcsolve.eps")

    def __lt__(self, other) -> bool:
        return False


EPS = _Eps()


def _ge(diff: Form) -> ArithConstraint:
    """``diff >= 0`` as a constraint between nonnegative forms."""
    pos, neg = diff.split()
    return ArithConstraint(">=", pos, neg)


@dataclass
class WindowProgram:
    lp: LinearProgram
    objective: Form
    node_vars: tuple[Node, ...]
    boundary: int
    period: int


def emit_lp(prop: Propagation, outcome: Stabilized) -> WindowProgram:
    """Finite program whose solutions are exactly the periodic schemes.

    Variables are the arithmetic variables outside the pattern and the
    bounded nodes up to the boundary. Tree constraints are instantiated at
    every prefix up to the boundary with deeper nodes replaced by their
    periodic representative; longer prefixes repeat these instances.
    Interval non-emptiness and the strictness margin are added on top.
    """
    pattern = prop.pattern
    system = prop.nf.source
    N = outcome.boundary

    def value(node: Node):
        k = prop.kind(node)
        if k is Kind.INF:
            return INF
        if k is Kind.ZERO:
            return ZERO_FORM
        if node.level > N:
            node = prop.representative(node, N)
            if prop.kind(node) is not Kind.BOUNDED:
                raise InfinityConflict(f"representative {node} is not bounded")
        return Form.var(node)

    def subst(f: Form):
        out = Form.constant(f.const)
        for k, c in f.coeffs:
            if isinstance(k, Lam):
                kk = pattern.kind(k)
                v = INF if kk is Kind.INF else (ZERO_FORM if kk is Kind.ZERO else Form.var(k))
            else:
                v = value(k)
            if v is INF:
                if c < 0:
                    raise InfinityConflict(f"{k} is infinite but subtracted")
                return INF
            out = out + v * c
        return out

    cons: list[ArithConstraint] = []

    def require(greater: Form, lesser: Form, label: str) -> None:
        g, l = subst(greater), subst(lesser)
        if g is INF:
            return
        if l is INF:
            raise InfinityConflict(f"{label}: finite side must dominate an infinite one")
        d = g - l
        if d.is_constant():
            if d.const < 0:
                raise InfinityConflict(f"{label}: constant contradiction")
            return
        cons.append(_ge(d))

    for c in prop.nf.ac:
        for g, l in c.oriented():
            require(g, l, str(c))
    for c in system.tree:
        lesser = Form()
        for t in c.rhs:
            lesser = lesser + Form.var(t.node, t.coeff)
        for w in words_upto(system.alphabet, N):
            inst_l = Form([(k.prefixed(w), v) for k, v in lesser.coeffs])
            require(Form.var(c.lhs.node.prefixed(w)), inst_l, str(c))
    node_vars = tuple(sorted(v for v, k in outcome.kinds.items() if k is Kind.BOUNDED and v.level >= prop.n))
    for v in node_vars:
        cls = outcome.classes[v]
        for lo in cls.lowers:
            for up in cls.uppers:
                require_signed(cons, up - lo)
        for up in cls.uppers:
            require_signed(cons, up)
    free = [a for a in prop.nf.arith_vars if pattern.kind(a) is Kind.BOUNDED]
    for a in free:
        cons.append(ArithConstraint(">=", Form.var(a), Form.var(EPS)))
    cons.append(ArithConstraint("<=", Form.var(EPS), Form.constant(1)))
    variables = tuple(free) + node_vars + (EPS,)
    return WindowProgram(LinearProgram(tuple(dict.fromkeys(cons)), variables), Form.var(EPS), node_vars, N, prop.S)


def require_signed(cons: list[ArithConstraint], diff: Form) -> None:
    if diff.is_constant():
        if diff.const < 0:
            raise InfinityConflict("empty interval")
        return
    cons.append(_ge(diff))


# ---------------------------------------------------------------------------
# pattern enumeration


def patterns(variables: Sequence, eager: Iterable[ZeroInfinityPattern] = (), forbid_inf: Iterable = ()) -> Iterator[ZeroInfinityPattern]:
    """The empty pattern, the single-variable patterns, ``eager`` ones, then
    the rest by ascending size; each pattern once."""
    variables = tuple(variables)
    forbid = set(forbid_inf)
    seen: set[ZeroInfinityPattern] = set()

    def fresh(p: ZeroInfinityPattern) -> bool:
        if p in seen or p.inf & forbid:
            return False
        seen.add(p)
        return True

    def of_size(k: int) -> Iterator[ZeroInfinityPattern]:
        from itertools import combinations

        for chosen in combinations(variables, k):
            for signs in product((0, 1), repeat=k):
                z = frozenset(v for v, s in zip(chosen, signs) if s == 0)
                i = frozenset(v for v, s in zip(chosen, signs) if s == 1)
                yield ZeroInfinityPattern(z, i)

    for k in (0, 1):
        for p in of_size(k):
            if fresh(p):
                yield p
    for p in eager:
        if fresh(p):
            yield p
    for k in range(2, len(variables) + 1):
        for p in of_size(k):
            if fresh(p):
                yield p


def ac_program(nf: NormalFormSystem, pattern: ZeroInfinityPattern) -> LinearProgram:
    """AC' under the pattern, with the strictness margin; raises InfinityConflict."""
    cons: list[ArithConstraint] = []

    def subst(f: Form):
        out = Form.constant(f.const)
        for k, c in f.coeffs:
            kk = pattern.kind(k)
            if kk is Kind.INF:
                return INF
            if kk is Kind.BOUNDED:
                out = out + Form.var(k, c)
        return out

    for c in nf.ac:
        for g, l in c.oriented():
            gs, ls = subst(g), subst(l)
            if gs is INF:
                continue
            if ls is INF:
                raise InfinityConflict(f"{c}: finite side must dominate an infinite one")
            require_signed(cons, gs - ls)
    free = [a for a in nf.arith_vars if pattern.kind(a) is Kind.BOUNDED]
    cons += [ArithConstraint(">=", Form.var(a), Form.var(EPS)) for a in free]
    cons.append(ArithConstraint("<=", Form.var(EPS), Form.constant(1)))
    return LinearProgram(tuple(dict.fromkeys(cons)), tuple(free) + (EPS,))
