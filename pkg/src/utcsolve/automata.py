"""Small NFA toolkit: the closure operations the entailment languages need.

Only membership, union, concatenation, star, intersection, reversal,
quotient, emptiness and equivalence are provided; there is no regex parser.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


@dataclass
class NFA:
    alphabet: tuple[str, ...]
    n_states: int = 0
    start: set[int] = field(default_factory=set)
    accept: set[int] = field(default_factory=set)
    eps: dict[int, set[int]] = field(default_factory=dict)
    delta: dict[tuple[int, str], set[int]] = field(default_factory=dict)
    names: dict[int, Hashable] = field(default_factory=dict)

    def add_state(self, name: Hashable = None) -> int:
        s = self.n_states
        self.n_states += 1
        if name is not None:
            self.names[s] = name
        return s

    def add_eps(self, p: int, q: int) -> None:
        if p != q:
            self.eps.setdefault(p, set()).add(q)

    def add_edge(self, p: int, a: str, q: int) -> None:
        self.delta.setdefault((p, a), set()).add(q)

    # -- basic queries --------------------------------------------------------

    def closure(self, states: Iterable[int]) -> frozenset[int]:
        seen = set(states)
        todo = list(seen)
        while todo:
            p = todo.pop()
            for q in self.eps.get(p, ()):
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        return frozenset(seen)

    def step(self, states: Iterable[int], a: str) -> frozenset[int]:
        out: set[int] = set()
        for p in states:
            out |= self.delta.get((p, a), set())
        return self.closure(out)

    def run(self, word: Sequence[str], start: Iterable[int] | None = None) -> frozenset[int]:
        cur = self.closure(self.start if start is None else start)
        for a in word:
            if not cur:
                break
            cur = self.step(cur, a)
        return cur

    def accepts(self, word: Sequence[str]) -> bool:
        return bool(self.run(word) & self.accept)

    def is_empty(self) -> bool:
        return not (self.reachable() & self.accept)

    def reachable(self) -> set[int]:
        seen = set(self.start)
        todo = list(seen)
        succ: dict[int, set[int]] = {}
        for (p, _), qs in self.delta.items():
            succ.setdefault(p, set()).update(qs)
        while todo:
            p = todo.pop()
            for q in self.eps.get(p, set()) | succ.get(p, set()):
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        return seen

    def shortest_word(self) -> tuple[str, ...] | None:
        """A shortest accepted word, or None when the language is empty."""
        start = self.closure(self.start)
        prev = {start: None}
        todo = deque([start])
        while todo:
            cur = todo.popleft()
            if cur & self.accept:
                out = []
                while prev[cur] is not None:
                    cur, a = prev[cur]
                    out.append(a)
                return tuple(reversed(out))
            for a in self.alphabet:
                nxt = self.step(cur, a)
                if nxt and nxt not in prev:
                    prev[nxt] = (cur, a)
                    todo.append(nxt)
        return None

    # -- constructions --------------------------------------------------------

    def copy_into(self, other: "NFA") -> dict[int, int]:
        m = {s: other.add_state(self.names.get(s)) for s in range(self.n_states)}
        for p, qs in self.eps.items():
            for q in qs:
                other.add_eps(m[p], m[q])
        for (p, a), qs in self.delta.items():
            for q in qs:
                other.add_edge(m[p], a, m[q])
        return m

    def reverse(self) -> "NFA":
        out = NFA(self.alphabet)
        for s in range(self.n_states):
            out.add_state(self.names.get(s))
        for p, qs in self.eps.items():
            for q in qs:
                out.add_eps(q, p)
        for (p, a), qs in self.delta.items():
            for q in qs:
                out.add_edge(q, a, p)
        out.start = set(self.accept)
        out.accept = set(self.start)
        return out

    def right_quotient(self, suffix: Sequence[str]) -> "NFA":
        """``{w | w + suffix accepted}``."""
        out = NFA(self.alphabet)
        self.copy_into(out)
        out.start = set(self.start)
        out.accept = {s for s in range(self.n_states) if self.run(suffix, [s]) & self.accept}
        return out

    def left_quotient(self, prefix: Sequence[str]) -> "NFA":
        """``{w | prefix + w accepted}``."""
        out = NFA(self.alphabet)
        self.copy_into(out)
        out.start = set(self.run(prefix))
        out.accept = set(self.accept)
        return out

    def to_dot(self, name: str = "nfa") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for s in range(self.n_states):
            shape = "doublecircle" if s in self.accept else "circle"
            label = str(self.names.get(s, s)).replace('"', "'")
            lines.append(f'  s{s} [shape={shape}, label="{label}"];')
        for s in sorted(self.start):
            lines.append(f"  start{s} [shape=point]; start{s} -> s{s};")
        for p, qs in sorted(self.eps.items()):
            for q in sorted(qs):
                lines.append(f'  s{p} -> s{q} [label="ε"];')
        for (p, a), qs in sorted(self.delta.items()):
            for q in sorted(qs):
                lines.append(f'  s{p} -> s{q} [label="{a}"];')
        lines.append("}")
        return "\n".join(lines)


def _merge_alphabet(*nfas: NFA) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for n in nfas:
        for a in n.alphabet:
            seen.setdefault(a, None)
    return tuple(seen)


def empty(alphabet: Sequence[str]) -> NFA:
    out = NFA(tuple(alphabet))
    out.start = {out.add_state()}
    return out


def word(w: Sequence[str], alphabet: Sequence[str] | None = None) -> NFA:
    out = NFA(tuple(alphabet) if alphabet is not None else tuple(dict.fromkeys(w)))
    cur = out.add_state()
    out.start = {cur}
    for a in w:
        nxt = out.add_state()
        out.add_edge(cur, a, nxt)
        cur = nxt
    out.accept = {cur}
    return out


def union(*parts: NFA) -> NFA:
    out = NFA(_merge_alphabet(*parts))
    s = out.add_state()
    out.start = {s}
    for p in parts:
        m = p.copy_into(out)
        for q in p.start:
            out.add_eps(s, m[q])
        out.accept |= {m[q] for q in p.accept}
    return out


def concat(*parts: NFA) -> NFA:
    out = NFA(_merge_alphabet(*parts))
    s = out.add_state()
    out.start = {s}
    ends = {s}
    for p in parts:
        m = p.copy_into(out)
        for e in ends:
            for q in p.start:
                out.add_eps(e, m[q])
        ends = {m[q] for q in p.accept}
    out.accept = ends
    return out


def star(p: NFA) -> NFA:
    out = NFA(p.alphabet)
    s = out.add_state()
    out.start = {s}
    m = p.copy_into(out)
    for q in p.start:
        out.add_eps(s, m[q])
    for q in p.accept:
        out.add_eps(m[q], s)
    out.accept = {s}
    return out


def plus(p: NFA) -> NFA:
    return concat(p, star(p))


def intersect(a: NFA, b: NFA) -> NFA:
    """Product automaton (epsilon moves handled through closures)."""
    alphabet = _merge_alphabet(a, b)
    out = NFA(alphabet)
    start = (a.closure(a.start), b.closure(b.start))
    ids = {start: out.add_state()}
    out.start = {ids[start]}
    todo = [start]
    while todo:
        pa, pb = todo.pop()
        me = ids[(pa, pb)]
        if pa & a.accept and pb & b.accept:
            out.accept.add(me)
        for c in alphabet:
            na, nb = a.step(pa, c), b.step(pb, c)
            if na and nb:
                key = (na, nb)
                if key not in ids:
                    ids[key] = out.add_state()
                    todo.append(key)
                out.add_edge(me, c, ids[key])
    return out


def equivalent(a: NFA, b: NFA) -> bool:
    """Language equality by on-the-fly subset construction of both sides."""
    return counterexample(a, b) is None


def counterexample(a: NFA, b: NFA) -> tuple[str, ...] | None:
    alphabet = _merge_alphabet(a, b)
    start = (a.closure(a.start), b.closure(b.start))
    prev = {start: None}
    todo = deque([start])
    while todo:
        cur = todo.popleft()
        pa, pb = cur
        if bool(pa & a.accept) != bool(pb & b.accept):
            out = []
            while prev[cur] is not None:
                cur, c = prev[cur]
                out.append(c)
            return tuple(reversed(out))
        for c in alphabet:
            nxt = (a.step(pa, c), b.step(pb, c))
            if nxt not in prev:
                prev[nxt] = (cur, c)
                todo.append(nxt)
    return None


def included(a: NFA, b: NFA) -> bool:
    """Whether L(a) is a subset of L(b)."""
    return equivalent(union(a, b), b)
