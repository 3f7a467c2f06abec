"""Normal form: every derived bound has its head node on one common level n.

Each constraint has its longest word isolated on one side, which makes it a
lower bound (head above strictly shorter summands), an upper bound (head
below a shorter positive term minus shorter terms) or an undirected one
(head and some summand on the same level). Shorter constraints are lifted by
label application, and their instances above level n become arithmetic
constraints over the nodes of levels below n.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    ArithConstraint,
    ConstraintSystem,
    Lam,
    Node,
    TreeConstraint,
    TreeExpr,
    words_of_length,
    words_upto,
)
from .unfold import root_projection


class BoundKind(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    UNDIRECTED = "undirected"


@dataclass(frozen=True)
class Bound:
    """``head >= sum(pos)`` (rel ``>=``) or ``head <= pos[0] - sum(neg)`` (rel ``<=``)."""

    kind: BoundKind
    rel: str
    head: Node
    pos: tuple[TreeExpr, ...]
    neg: tuple[TreeExpr, ...] = ()

    def shifted(self, w: Sequence[str]) -> "Bound":
        w = tuple(w)
        return Bound(
            self.kind,
            self.rel,
            self.head.prefixed(w),
            tuple(t.prefixed(w) for t in self.pos),
            tuple(t.prefixed(w) for t in self.neg),
        )

    def as_constraint(self) -> TreeConstraint:
        """The bound as a unilateral tree constraint (coefficients cleared)."""
        if self.rel == ">=":
            return TreeConstraint(TreeExpr(self.head.word, self.head.var), self.pos)
        (big,) = self.pos
        k = 1 / big.coeff
        rhs = [TreeExpr(self.head.word, self.head.var, k)] + [t.scaled(k) for t in self.neg]
        return TreeConstraint(TreeExpr(big.word, big.var), tuple(rhs))

    def __str__(self) -> str:
        if self.rel == ">=":
            return f"{self.head} >= " + " + ".join(map(str, self.pos))
        return f"{self.head} <= " + " - ".join(map(str, self.pos + self.neg))


def _group(terms: Iterable[TreeExpr]) -> list[TreeExpr]:
    acc: dict[Node, Fraction] = {}
    for t in terms:
        acc[t.node] = acc.get(t.node, Fraction(0)) + t.coeff
    return [TreeExpr(n.word, n.var, c) for n, c in acc.items()]


def classify(c: TreeConstraint | Bound) -> BoundKind:
    """Kind of a constraint judged by where its longest word sits."""
    if isinstance(c, Bound):
        return c.kind
    top = c.max_len
    if c.lhs.level < top:
        return BoundKind.UPPER
    if any(t.level == top for t in c.rhs):
        return BoundKind.UNDIRECTED
    return BoundKind.LOWER


def isolate(c: TreeConstraint) -> list[Bound]:
    """Bounds with the longest word isolated; one variant per distinct longest summand."""
    rhs = _group(c.rhs)
    kind = classify(c)
    if kind is not BoundKind.UPPER:
        return [Bound(kind, ">=", c.lhs.node, tuple(rhs))]
    top = max(t.level for t in rhs)
    out = []
    for s in rhs:
        if s.level != top:
            continue
        k = 1 / s.coeff
        others = tuple(t.scaled(k) for t in rhs if t is not s)
        out.append(Bound(BoundKind.UPPER, "<=", s.node, (c.lhs.scaled(k),), others))
    return out


# ---------------------------------------------------------------------------
# cycles among undirected bounds


@dataclass
class CollapseResult:
    components: list[tuple[Node, ...]]  # topological order, greater side first
    comp_of: dict[Node, int]
    edges: set[tuple[int, int]]
    equalities: list[tuple[Node, Node]]
    zero_forced: tuple[TreeExpr, ...]
    derived: list[Bound] = field(default_factory=list)

    def is_acyclic(self) -> bool:
        return all(a != b for a, b in self.edges)


def _tarjan(nodes: list[Node], succ: dict[Node, list[Node]]) -> list[list[Node]]:
    """Strongly connected components, emitted sinks first."""
    index: dict[Node, int] = {}
    low: dict[Node, int] = {}
    stack: list[Node] = []
    on_stack: set[Node] = set()
    out: list[list[Node]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            nxt = next(it, None)
            if nxt is not None:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ.get(nxt, ()))))
                elif nxt in on_stack:
                    low[v] = min(low[v], index[nxt])
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def collapse_cycles(undirected: Sequence[Bound]) -> CollapseResult:
    """Contract transitivity-only cycles and record both traversal directions.

    Edges run from a head to each of its same-level summands. Members of a
    cycle are equal in every finite solution, and the other summands of the
    bounds inside a cycle are then forced to zero.
    """
    succ: dict[Node, list[Node]] = {}
    nodes: dict[Node, None] = {}
    for b in undirected:
        nodes.setdefault(b.head, None)
        for t in b.pos:
            if t.level == b.head.level:
                nodes.setdefault(t.node, None)
                succ.setdefault(b.head, []).append(t.node)
    comps = _tarjan(list(nodes), succ)
    comps.reverse()  # sources first
    comp_of = {v: i for i, c in enumerate(comps) for v in c}
    edges = {(comp_of[a], comp_of[b]) for a, bs in succ.items() for b in bs if comp_of[a] != comp_of[b]}
    equalities = [(c[0], v) for c in comps if len(c) > 1 for v in c[1:]]
    zero: dict[TreeExpr, None] = {}
    derived: list[Bound] = []
    for b in undirected:
        inside = [t for t in b.pos if t.node in comp_of and comp_of[t.node] == comp_of.get(b.head)]
        if inside:
            keep = inside[0]
            for t in b.pos:
                if t is not keep:
                    zero.setdefault(TreeExpr(t.word, t.var), None)
        for t in b.pos:
            if t.level != b.head.level:
                continue
            k = 1 / t.coeff
            others = tuple(o.scaled(k) for o in b.pos if o is not t)
            derived.append(Bound(BoundKind.UNDIRECTED, "<=", t.node, (TreeExpr(b.head.word, b.head.var, k),), others))
    return CollapseResult(comps, comp_of, edges, equalities, tuple(zero), derived)


# ---------------------------------------------------------------------------
# the normal form


@dataclass
class NormalFormSystem:
    source: ConstraintSystem
    level: int
    lowers: list[Bound]
    uppers: list[Bound]
    undirected: list[Bound]
    collapse: CollapseResult
    ac: tuple[ArithConstraint, ...]
    arith_vars: tuple

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.source.alphabet

    @property
    def derived(self) -> list[Bound]:
        return self.collapse.derived

    def bounds(self) -> list[Bound]:
        return self.lowers + self.uppers + self.undirected + self.derived

    def heads_by_node(self) -> dict[Node, list[Bound]]:
        out: dict[Node, list[Bound]] = {}
        for b in self.bounds():
            out.setdefault(b.head, []).append(b)
        return out

    def as_system(self) -> ConstraintSystem:
        """Equivalent system: lifted constraints plus AC'."""
        tree = [b.as_constraint() for b in self.lowers + self.uppers + self.undirected]
        return ConstraintSystem(self.source.alphabet, self.source.variables, tuple(tree), self.ac, self.source.lambdas)

    def to_text(self) -> str:
        lines = [f"# level {self.level}"]
        if self.source.alphabet:
            lines.append("labels: " + " ".join(self.source.alphabet))
        lines += [str(c) for c in self.ac]
        lines += [str(b) for b in self.bounds()]
        return "\n".join(lines) + "\n"


def _arith_depth(ac: Iterable[ArithConstraint]) -> int:
    depth = -1
    for c in ac:
        for a in c.atoms:
            if isinstance(a, Node):
                depth = max(depth, a.level)
    return depth


def normalize(system: ConstraintSystem) -> NormalFormSystem:
    variants = [(c, b) for c in system.tree for b in isolate(c)]
    n = max([c.max_len for c in system.tree] + [_arith_depth(system.arith) + 1, 0])
    ac: dict[ArithConstraint, None] = dict.fromkeys(system.arith)
    for c in system.tree:
        for w in words_upto(system.alphabet, n - c.max_len - 1):
            ac.setdefault(root_projection(c.shifted(w)), None)
    groups: dict[BoundKind, list[Bound]] = {k: [] for k in BoundKind}
    seen: set[Bound] = set()
    for c, b in variants:
        for w in words_of_length(system.alphabet, n - b.head.level):
            lifted = b.shifted(w)
            if lifted not in seen:
                seen.add(lifted)
                groups[b.kind].append(lifted)
    collapse = collapse_cycles(groups[BoundKind.UNDIRECTED])
    arith_vars = tuple(Node(w, x) for x in system.variables for w in words_upto(system.alphabet, n - 1))
    arith_vars += tuple(Lam(name) for name in system.lambdas)
    return NormalFormSystem(
        system,
        n,
        groups[BoundKind.LOWER],
        groups[BoundKind.UPPER],
        groups[BoundKind.UNDIRECTED],
        collapse,
        tuple(ac),
        arith_vars,
    )
