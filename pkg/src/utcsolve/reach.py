"""Derivability ``TC |- u x >= v y`` by pushdown saturation.

A node expression is a stack holding its word with the innermost label on
top. A constraint ``a1..ak x >= sum v_i y_i`` becomes a transition chain from
state ``x`` that pops ``ak .. a1`` and then pushes one summand's word (its
innermost label last) while moving to that summand's variable state. The
relation Q of balanced-stack moves is saturated, after which entailment
questions reduce to finite automata built from Q, the pops and the pushes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import automata
from ._kernels import saturate_matrix
from .automata import NFA
from .core import Node, TreeConstraint, Word


@dataclass
class PushdownSystem:
    alphabet: tuple[str, ...]
    states: list = field(default_factory=list)
    plain: set = field(default_factory=set)
    push: set = field(default_factory=set)
    pop: set = field(default_factory=set)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    def state(self, name) -> int:
        if name not in self.index:
            self.index[name] = len(self.states)
            self.states.append(name)
        return self.index[name]

    def var(self, x: str) -> int:
        return self.state(("var", x))

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, k = len(self.states), len(self.alphabet)
        letter = {a: i for i, a in enumerate(self.alphabet)}
        plain = np.zeros((n, n), dtype=bool)
        push = np.zeros((k, n, n), dtype=bool)
        pop = np.zeros((k, n, n), dtype=bool)
        for p, q in self.plain:
            plain[p, q] = True
        for p, a, q in self.push:
            push[letter[a], p, q] = True
        for p, a, q in self.pop:
            pop[letter[a], p, q] = True
        return plain, push, pop

    def describe(self) -> str:
        name = lambda i: _state_label(self.states[i])  # noqa: E731
        lines = [f"{name(p)} -> {name(q)}" for p, q in sorted(self.plain)]
        lines += [f"{name(p)} --pop({a})--> {name(q)}" for p, a, q in sorted(self.pop)]
        lines += [f"{name(p)} --push({a})--> {name(q)}" for p, a, q in sorted(self.push)]
        return "\n".join(lines)


def _state_label(s) -> str:
    if s[0] == "var":
        return s[1]
    return "_".join(str(p) for p in s)


def build_pushdown(tc: Sequence[TreeConstraint], alphabet: Iterable[str], variables: Iterable[str] = ()) -> PushdownSystem:
    """Pushdown system whose runs are the rewriting derivations of ``tc``.

    Auxiliary state names carry the constraint index and position, so the
    construction is deterministic.
    """
    pds = PushdownSystem(tuple(alphabet))
    for x in variables:
        pds.var(x)
    for c in tc:
        pds.var(c.lhs.var)
        for t in c.rhs:
            pds.var(t.var)
    for ci, c in enumerate(tc):
        cur = pds.var(c.lhs.var)
        for j, a in enumerate(reversed(c.lhs.word)):
            nxt = pds.state(("pop", ci, j))
            pds.pop.add((cur, a, nxt))
            cur = nxt
        mid = cur
        for si, t in enumerate(c.rhs):
            target = pds.var(t.var)
            if not t.word:
                pds.plain.add((mid, target))
                continue
            src = mid
            for j, a in enumerate(t.word):
                dst = target if j == len(t.word) - 1 else pds.state(("push", ci, si, j))
                pds.push.add((src, a, dst))
                src = dst
    return pds


def saturate(pds: PushdownSystem, use_numba: bool | None = None) -> np.ndarray:
    """Boolean matrix of balanced-stack reachability between states."""
    if not pds.states:
        return np.zeros((0, 0), dtype=bool)
    plain, push, pop = pds.matrices()
    return saturate_matrix(plain, push, pop, use_numba)


def reach_pairs(pds: PushdownSystem, q: np.ndarray | None = None) -> set[tuple]:
    if q is None:
        q = saturate(pds)
    return {(pds.states[i], pds.states[j]) for i, j in zip(*np.nonzero(q))}


@dataclass
class EntailmentAutomaton:
    """Accepts written (outermost-first) words; internally reads innermost-first."""

    language: NFA
    start: object = None
    target: object = None

    def __post_init__(self):
        self.internal = self.language.reverse()

    def accepts(self, word: Sequence[str]) -> bool:
        return self.internal.accepts(tuple(reversed(tuple(word))))

    def to_dot(self) -> str:
        return self.language.to_dot()


class Entailment:
    """Saturated derivability oracle for one set of tree constraints."""

    def __init__(self, tc: Sequence[TreeConstraint], alphabet: Iterable[str], variables: Iterable[str] = (), use_numba: bool | None = None):
        self.alphabet = tuple(alphabet)
        self.pds = build_pushdown(tc, self.alphabet, variables)
        self.q = saturate(self.pds, use_numba)
        n = len(self.pds.states)
        self.pop_nfa = NFA(self.alphabet)
        self.push_nfa = NFA(self.alphabet)
        for nfa in (self.pop_nfa, self.push_nfa):
            for s in self.pds.states:
                nfa.add_state(_state_label(s))
        for i, j in zip(*np.nonzero(self.q)):
            self.pop_nfa.add_eps(int(i), int(j))
            self.push_nfa.add_eps(int(i), int(j))
        for p, a, q in self.pds.pop:
            self.pop_nfa.add_edge(p, a, q)
        for p, a, q in self.pds.push:
            self.push_nfa.add_edge(p, a, q)
        self._push_rev = self.push_nfa.reverse()
        self._pop_rev = self.pop_nfa.reverse()
        self.n_states = n
        self._popped: dict[tuple, frozenset] = {}
        self._pushed: dict[tuple, frozenset] = {}

    def _after_pop(self, u: Word, s: int) -> frozenset:
        """States reachable from ``s`` after popping ``u`` (innermost first)."""
        got = self._popped.get((u, s))
        if got is None:
            got = self._popped[(u, s)] = self.pop_nfa.run(u[::-1], [s])
        return got

    def _before_push(self, v: Word, s: int) -> frozenset:
        """States from which pushing ``v`` can end in ``s``."""
        got = self._pushed.get((v, s))
        if got is None:
            got = self._pushed[(v, s)] = self._push_rev.run(v[::-1], [s])
        return got

    def _var(self, x: str) -> int | None:
        return self.pds.index.get(("var", x))

    def pairs(self) -> set[tuple]:
        return reach_pairs(self.pds, self.q)

    def entails(self, u: Word, x: str, v: Word, y: str) -> bool:
        """Whether ``u x >= v y`` is derivable."""
        u, v = tuple(u), tuple(v)
        if u == v and x == y:
            return True
        index = self.pds.index
        sx, sy = index.get(("var", x)), index.get(("var", y))
        if sx is None or sy is None:
            return False
        for j in range(min(len(u), len(v)) + 1):
            if j > 0 and u[j - 1] != v[j - 1]:
                break
            after_pop = self._after_pop(u[j:], sx)
            if after_pop and not after_pop.isdisjoint(self._before_push(v[j:], sy)):
                return True
        return False

    def lower_language(self, x: str, target: Node, suffix: Word = ()) -> EntailmentAutomaton:
        """Words ``w`` with ``w suffix x >= target``."""
        v = target.word
        out = NFA(self.alphabet)
        sx, sy = self._var(x), self._var(target.var)
        chain = [out.add_state(("v", j)) for j in range(len(v) + 1)]
        out.start = {chain[0]}
        for j, a in enumerate(v):
            out.add_edge(chain[j], a, chain[j + 1])
        if sx is not None and sy is not None:
            m = self._pop_rev.copy_into(out)
            out.accept = {m[sx]}
            for j in range(len(v) + 1):
                for p in self._push_rev.run(tuple(reversed(v[j:])), [sy]):
                    out.add_eps(chain[j], m[p])
        if x == target.var:
            # reflexivity covers targets whose state never appears in the system
            out.accept.add(chain[-1])
        lang = out.right_quotient(tuple(suffix)) if suffix else out
        return EntailmentAutomaton(lang, (tuple(suffix), x), target)

    def upper_language(self, source: Node, x: str, suffix: Word = ()) -> EntailmentAutomaton:
        """Words ``w`` with ``source >= w suffix x``."""
        v = source.word
        out = NFA(self.alphabet)
        sx, sy = self._var(source.var), self._var(x)
        chain = [out.add_state(("v", j)) for j in range(len(v) + 1)]
        out.start = {chain[0]}
        for j, a in enumerate(v):
            out.add_edge(chain[j], a, chain[j + 1])
        if sx is not None and sy is not None:
            m = self.push_nfa.copy_into(out)
            out.accept = {m[sy]}
            for j in range(len(v) + 1):
                for p in self.pop_nfa.run(tuple(reversed(v[j:])), [sx]):
                    out.add_eps(chain[j], m[p])
        if x == source.var:
            out.accept.add(chain[-1])
        lang = out.right_quotient(tuple(suffix)) if suffix else out
        return EntailmentAutomaton(lang, source, (tuple(suffix), x))

    def language_for(self, x: str, y: str, u: Word = (), v: Word = ()) -> EntailmentAutomaton:
        """``{w | TC |- w u x >= v y}``."""
        return self.lower_language(x, Node(tuple(v), y), tuple(u))


def entails(tc: Sequence[TreeConstraint], u: Word, x: str, v: Word, y: str, alphabet: Iterable[str] | None = None) -> bool:
    if alphabet is None:
        labels: dict = {}
        for c in tc:
            for lab in sorted(c.labels):
                labels.setdefault(lab, None)
        for lab in tuple(u) + tuple(v):
            labels.setdefault(lab, None)
        alphabet = tuple(labels)
    return Entailment(tc, alphabet).entails(u, x, v, y)


@dataclass
class BoundedLanguages:
    """Per-variable languages of nodes bounded below / above by anchor nodes."""

    lower: dict[str, NFA]
    upper: dict[str, NFA]
    both: dict[str, NFA]

    def in_lower(self, node: Node) -> bool:
        nfa = self.lower.get(node.var)
        return nfa is not None and nfa.accepts(node.word)

    def in_upper(self, node: Node) -> bool:
        nfa = self.upper.get(node.var)
        return nfa is not None and nfa.accepts(node.word)

    def in_L(self, node: Node) -> bool:
        return self.in_lower(node) and self.in_upper(node)


def bounded_languages(ent: Entailment, anchors: Iterable[Node], variables: Iterable[str]) -> BoundedLanguages:
    """``L^>=`` (nodes above some anchor), ``L^<=`` and their intersection."""
    anchors = list(anchors)
    lower, upper, both = {}, {}, {}
    for x in variables:
        lo = [ent.lower_language(x, a).language for a in anchors]
        hi = [ent.upper_language(a, x).language for a in anchors]
        lower[x] = automata.union(*lo) if lo else automata.empty(ent.alphabet)
        upper[x] = automata.union(*hi) if hi else automata.empty(ent.alphabet)
        both[x] = automata.intersect(lower[x], upper[x])
    return BoundedLanguages(lower, upper, both)


class AnchorIndex:
    """For each node, the anchors it is derivably above and below.

    Automaton states are cached per node and extended one outer label at a
    time, so enumerating a whole level costs one NFA step per node.
    """

    def __init__(self, ent: Entailment, anchors: Iterable[Node]):
        self.ent = ent
        self.anchors = tuple(anchors)
        self._nfas: dict[str, tuple[list[NFA], list[NFA]]] = {}
        self._cache: dict[Node, tuple] = {}

    def _automata(self, x: str) -> tuple[list[NFA], list[NFA]]:
        if x not in self._nfas:
            lo = [self.ent.lower_language(x, a).internal for a in self.anchors]
            hi = [self.ent.upper_language(a, x).internal for a in self.anchors]
            self._nfas[x] = (lo, hi)
        return self._nfas[x]

    def _states(self, node: Node) -> tuple:
        got = self._cache.get(node)
        if got is not None:
            return got
        lo, hi = self._automata(node.var)
        if not node.word:
            st = (tuple(n.closure(n.start) for n in lo), tuple(n.closure(n.start) for n in hi))
        else:
            inner = self._states(Node(node.word[1:], node.var))
            a = node.word[0]
            st = (
                tuple(n.step(s, a) for n, s in zip(lo, inner[0])),
                tuple(n.step(s, a) for n, s in zip(hi, inner[1])),
            )
        self._cache[node] = st
        return st

    def start_state(self, x: str) -> tuple:
        return self._states(Node((), x))

    def step_state(self, x: str, st: tuple, a: str) -> tuple:
        """State of ``a w x`` from the state of ``w x``."""
        lo, hi = self._automata(x)
        return (
            tuple(n.step(s, a) for n, s in zip(lo, st[0])),
            tuple(n.step(s, a) for n, s in zip(hi, st[1])),
        )

    def bounds(self, node: Node) -> tuple[frozenset, frozenset]:
        """``(anchors a with node >= a, anchors b with b >= node)``."""
        return self.bounds_of_state(node.var, self._states(node))

    def bounds_of_state(self, x: str, st: tuple) -> tuple[frozenset, frozenset]:
        lo, hi = self._automata(x)
        s_lo, s_hi = st
        below = frozenset(a for a, n, s in zip(self.anchors, lo, s_lo) if s & n.accept)
        above = frozenset(a for a, n, s in zip(self.anchors, hi, s_hi) if s & n.accept)
        return below, above
