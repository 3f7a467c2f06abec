"""Level-wise unfolding (the unsat side) and the two ground-truth oracles.

``check_assignment`` evaluates constraints pointwise on an explicit
valuation; ``brute_entails`` closes the proof rules by rewriting. Neither
depends on the automata or interval machinery, so both can certify results
produced by it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

from .core import (
    INF,
    ArithConstraint,
    ConstraintSystem,
    ExtValue,
    Form,
    Lam,
    Node,
    TreeConstraint,
    TreeRelation,
    Word,
    ext,
    ext_add,
    ext_compare,
    ext_scale,
    format_value,
    words_of_length,
)
from .lp import Infeasible, LinearProgram, Refutation, d_feasible, must_finite, verify_refutation


class BudgetExceeded(RuntimeError):
    """The bounded search was truncated before a positive answer was found."""


# ---------------------------------------------------------------------------
# solution schemes and the pointwise checker


@dataclass
class KindAutomaton:
    """Deterministic classifier for nodes below the table boundary.

    Words are read innermost label first from ``start[var]``; the label of
    the final state says whether the node is ``zero``, ``inf`` or looked up
    in the table (``table``).
    """

    start: dict[str, int]
    delta: dict[tuple[int, str], int]
    labels: dict[int, str]

    def step(self, state: int, a: str) -> int:
        return self.delta[(state, a)]

    def run(self, word: Sequence[str], var: str) -> int:
        q = self.start[var]
        for a in reversed(tuple(word)):
            q = self.delta[(q, a)]
        return q

    def to_json(self) -> dict:
        return {
            "start": dict(sorted(self.start.items())),
            "delta": [[p, a, q] for (p, a), q in sorted(self.delta.items())],
            "labels": [[q, lab] for q, lab in sorted(self.labels.items())],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "KindAutomaton":
        start = {k: int(v) for k, v in doc["start"].items()}
        delta = {(int(p), a): int(q) for p, a, q in doc["delta"]}
        labels = {int(q): str(lab) for q, lab in doc["labels"]}
        if set(labels.values()) - {"zero", "inf", "table"}:
            raise ValueError("unknown state label")
        return cls(start, delta, labels)


@dataclass
class SolutionScheme:
    """Finite table for words up to ``boundary``. A longer word is classified
    by ``kinds`` when present; table-labelled (and, without ``kinds``, all)
    longer words drop their outermost ``period`` letters until they fit."""

    table: dict[Node, ExtValue]
    period: int
    boundary: int
    lambdas: dict[str, ExtValue] = field(default_factory=dict)
    kinds: KindAutomaton | None = None

    def __post_init__(self):
        if self.period < 1 or self.boundary < 0:
            raise ValueError("period must be positive and boundary nonnegative")

    def reduce(self, word: Sequence[str]) -> Word:
        word = tuple(word)
        if len(word) > self.boundary:
            k = -(-(len(word) - self.boundary) // self.period)
            word = word[k * self.period:]
        return word

    def value(self, node: Node) -> ExtValue:
        if node.level > self.boundary and self.kinds is not None:
            lab = self.kinds.labels[self.kinds.run(node.word, node.var)]
            if lab == "zero":
                return Fraction(0)
            if lab == "inf":
                return INF
        key = Node(self.reduce(node.word), node.var)
        try:
            return self.table[key]
        except KeyError:
            raise KeyError(f"scheme has no entry for {key}") from None

    __call__ = value

    def to_json(self) -> dict:
        rows = sorted(self.table.items())
        doc = {
            "period": self.period,
            "boundary": self.boundary,
            "table": [[" ".join(n.word), n.var, format_value(v)] for n, v in rows],
            "lambdas": {k: format_value(v) for k, v in sorted(self.lambdas.items())},
        }
        if self.kinds is not None:
            doc["kinds"] = self.kinds.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "SolutionScheme":
        table = {Node(tuple(w.split()), x): ext(v) for w, x, v in doc["table"]}
        lambdas = {k: ext(v) for k, v in doc.get("lambdas", {}).items()}
        kinds = KindAutomaton.from_json(doc["kinds"]) if doc.get("kinds") else None
        return cls(table, int(doc["period"]), int(doc["boundary"]), lambdas, kinds)


Valuation = Union[SolutionScheme, Callable[[Node], ExtValue]]


@dataclass(frozen=True)
class Violation:
    constraint: str
    prefix: Word
    node: Node | None
    greater: ExtValue
    lesser: ExtValue

    def __str__(self) -> str:
        where = f" at node {self.node}" if self.node is not None else ""
        return f"{self.constraint}{where}: {format_value(self.greater)} < {format_value(self.lesser)}"


@dataclass
class Report:
    ok: bool
    depth: int
    instances: int
    violation: Violation | None = None
    exhaustive: bool = False

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "depth": self.depth,
            "instances": self.instances,
            "exhaustive": self.exhaustive,
            "violation": None if self.violation is None else str(self.violation),
        }


def _side_value(side: Iterable, val: Callable[[Node], ExtValue]) -> ExtValue:
    total: ExtValue = Fraction(0)
    for t in side:
        total = ext_add(total, ext_scale(t.coeff, val(t.node)))
        if total is INF:
            return INF
    return total


def check_assignment(
    system: ConstraintSystem | tuple,
    valuation: Valuation,
    depth: int,
    lambdas: Mapping[str, ExtValue] | None = None,
) -> Report:
    """Check every tree constraint at every prefix ``|w| <= depth`` and every
    arithmetic constraint, exactly.

    ``system`` is a :class:`ConstraintSystem` or an ``(alphabet, relations,
    arith)`` triple from :func:`core.parse_relations` (bilateral allowed).

    For a :class:`SolutionScheme` the values at ``w u x`` for all summands
    ``u x`` are determined by a finite signature of ``w`` once ``w`` is
    longer than the boundary: its innermost ``boundary`` letters, ``|w|``
    modulo the period and the classifier states. Prefixes whose signature
    was already seen are skipped together with their extensions, and the
    report is exhaustive when no unseen signature is left within ``depth``.
    """
    if isinstance(system, ConstraintSystem):
        alphabet = system.alphabet
        relations = [TreeRelation.of(c) for c in system.tree]
        arith = system.arith
    else:
        alphabet, relations, arith = system
        relations = [r if isinstance(r, TreeRelation) else TreeRelation.of(r) for r in relations]
    scheme = valuation if isinstance(valuation, SolutionScheme) else None
    lam_env = dict(scheme.lambdas) if scheme else {}
    if lambdas:
        lam_env.update(lambdas)

    def atom(k) -> ExtValue:
        if isinstance(k, Lam):
            return lam_env[k.name]
        return valuation(k)

    count = 0
    for c in arith:
        count += 1
        for g, l in c.oriented():
            gv, lv = g.evaluate(atom), l.evaluate(atom)
            if ext_compare(gv, lv) < 0:
                return Report(False, depth, count, Violation(str(c), (), None, gv, lv), False)

    def check_at(w: Word) -> Report | None:
        nonlocal count
        for rel in relations:
            count += 1
            inst = rel.shifted(w)
            for g, l in inst.oriented():
                gv, lv = _side_value(g, valuation), _side_value(l, valuation)
                if ext_compare(gv, lv) < 0:
                    node = g[0].node if len(g) == 1 else None
                    return Report(False, depth, count, Violation(str(rel), w, node, gv, lv), False)
        return None

    if scheme is None:
        for n in range(depth + 1):
            for w in words_of_length(alphabet, n):
                bad = check_at(w)
                if bad is not None:
                    return bad
        return Report(True, depth, count, None, False)

    N, S, kinds = scheme.boundary, scheme.period, scheme.kinds
    summands = sorted({(t.word, t.var) for rel in relations for side in (rel.lhs, rel.rhs) for t in side})

    def signature(w: Word, states: tuple) -> tuple:
        if len(w) <= N:
            return ("exact", w)
        return (w[len(w) - N:], len(w) % S, states)

    start = tuple(kinds.run(u, y) for u, y in summands) if kinds else ()
    seen = {signature((), start)}
    layer = [((), start)]
    level = 0
    while layer:
        for w, _ in layer:
            bad = check_at(w)
            if bad is not None:
                return bad
        if level == depth:
            return Report(True, depth, count, None, False)
        nxt = []
        for w, st in layer:
            for a in alphabet:
                st2 = tuple(kinds.step(q, a) for q in st) if kinds else ()
                w2 = (a,) + w
                sig = signature(w2, st2)
                if sig not in seen:
                    seen.add(sig)
                    nxt.append((w2, st2))
        layer = nxt
        level += 1
    return Report(True, depth, count, None, True)


# ---------------------------------------------------------------------------
# brute-force derivations


def _successors(tc: Sequence[TreeConstraint], node: Node) -> Iterable[Node]:
    w = node.word
    for c in tc:
        if c.lhs.var != node.var:
            continue
        k = len(c.lhs.word)
        if k > len(w) or w[len(w) - k:] != c.lhs.word:
            continue
        prefix = w[: len(w) - k]
        for s in c.rhs:
            yield Node(prefix + s.word, s.var)


def brute_reachable(tc: Sequence[TreeConstraint], start: Node, max_len: int) -> tuple[set[Node], bool]:
    """All nodes ``n`` with ``start >= n`` derivable through expressions of
    length at most ``max_len``; the flag reports truncation."""
    seen = {start}
    todo = deque([start])
    truncated = False
    while todo:
        cur = todo.popleft()
        for nxt in _successors(tc, cur):
            if nxt.level > max_len:
                truncated = True
            elif nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen, truncated


def brute_entails(
    tc: Sequence[TreeConstraint], u: Sequence[str], x: str, v: Sequence[str], y: str, max_len: int, strict: bool = False
) -> bool:
    """Whether ``u x >= v y`` follows by reflexivity, label application and
    transitivity, searching expressions of length at most ``max_len``.

    A negative answer is only certain up to the bound; with ``strict`` a
    truncated negative search raises :class:`BudgetExceeded` instead.
    """
    target = Node(tuple(v), y)
    seen, truncated = brute_reachable(tc, Node(tuple(u), x), max_len)
    if target in seen:
        return True
    if strict and truncated:
        raise BudgetExceeded(f"search truncated at length {max_len}")
    return False


# ---------------------------------------------------------------------------
# unfolding


def root_projection(c: TreeConstraint) -> ArithConstraint:
    rhs = Form()
    for s in c.rhs:
        rhs = rhs + Form.var(s.node, s.coeff)
    return ArithConstraint(">=", Form.var(c.lhs.node), rhs)


@dataclass(frozen=True)
class UnfoldState:
    level: int
    alphabet: tuple[str, ...]
    frontier: tuple[TreeConstraint, ...]
    program: tuple[ArithConstraint, ...]


def initial_state(system: ConstraintSystem) -> UnfoldState:
    proj = tuple(root_projection(c) for c in system.tree)
    return UnfoldState(0, system.alphabet, tuple(system.tree), tuple(system.arith) + proj)


def unfold_step(st: UnfoldState) -> UnfoldState:
    children = tuple(c.shifted((a,)) for c in st.frontier for a in st.alphabet)
    proj = tuple(root_projection(c) for c in children)
    return UnfoldState(st.level + 1, st.alphabet, children, st.program + proj)


def program_at(system: ConstraintSystem, level: int) -> LinearProgram:
    st = initial_state(system)
    while st.level < level:
        st = unfold_step(st)
    return LinearProgram(st.program)


@dataclass
class UnsatCertificate:
    level: int
    program: LinearProgram
    mustfin: tuple
    derivation: tuple
    refutation: Refutation
    forced: tuple = ()

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "program": [str(c) for c in self.program.constraints],
            "mustfin": [str(v) for v in self.mustfin],
            "derivation": [[str(v), i] for v, i in self.derivation],
            "multipliers": [[i, str(m)] for i, m in self.refutation.multipliers],
            "combined": self.refutation.summary(),
            "forced": [str(v) for v in self.forced],
        }


def forced_atoms(system: ConstraintSystem, names: Iterable[str] | str | None) -> tuple:
    """Root atoms (and free variables) that must stay finite."""
    if not names:
        return ()
    if names == "all":
        names = list(system.variables) + list(system.lambdas)
    out = []
    for n in names:
        n = n.lstrip("$")
        if n in system.lambdas:
            out.append(Lam(n))
        elif n in system.variables:
            out.append(Node((), n))
        else:
            raise ValueError(f"unknown variable {n!r}")
    return tuple(out)


class UnsatSearch:
    """Resumable search for an infeasible program ``P_i``."""

    def __init__(self, system: ConstraintSystem, forced: Iterable = ()):
        self.system = system
        self.forced = tuple(forced)
        self.state = initial_state(system)
        self.checked = -1
        self._last_size = -1
        self.result: UnsatCertificate | None = None

    def advance(self, max_level: int, max_constraints: int | None = None) -> UnsatCertificate | None:
        while self.result is None and self.checked < max_level:
            if max_constraints is not None and self.checked >= 0 and self._next_size() > max_constraints:
                break
            if self.checked >= 0:
                self.state = unfold_step(self.state)
            self.checked = self.state.level
            lp = LinearProgram(self.state.program)
            mf = must_finite(lp, self.forced)
            size = sum(1 for c in lp.constraints if c.atoms <= mf.members)
            if size == self._last_size:
                continue  # same finite sub-program as the previous feasible level
            self._last_size = size
            res = d_feasible(lp, self.forced)
            if isinstance(res, Infeasible):
                self.result = UnsatCertificate(
                    self.state.level, lp, res.mustfin, res.derivation, res.refutation, self.forced
                )
            if not self.state.frontier:
                break
        return self.result

    def _next_size(self) -> int:
        return len(self.state.program) + len(self.state.frontier) * len(self.state.alphabet)


def semi_decide_unsat(system: ConstraintSystem, max_level: int, forced: Iterable = ()) -> UnsatCertificate | None:
    return UnsatSearch(system, forced).advance(max_level)


def verify_unsat(system: ConstraintSystem, cert: UnsatCertificate, forced: Iterable = ()) -> bool:
    """Recompute ``P_level`` from the system and check the refutation over D."""
    expected = program_at(system, cert.level)
    if set(expected.constraints) != set(cert.program.constraints):
        return False
    allowed = set(forced)
    if any(i < 0 and v not in allowed for v, i in cert.derivation):
        return False
    return verify_refutation(cert.program, cert.refutation, cert.derivation)
