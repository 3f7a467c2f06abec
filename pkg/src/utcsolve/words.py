"""Word combinatorics behind the stabilisation argument.

These are used for diagnostics (growth along a period) and as a tested
library; the decision procedure itself does not call them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .core import TreeConstraint, Word


class PreconditionViolated(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Decomposition:
    q: Word
    r: Word
    i: int


@dataclass(frozen=True)
class CommonRoot:
    """Every block of the constraint is a power of ``p``: growth along ``p``."""

    p: Word


@dataclass(frozen=True)
class IndependentAfter:
    """Prefixing ``t`` leaves no summand suffix-related to the greater side."""

    t: Word


def suffix_dependent(u: Sequence[str], v: Sequence[str]) -> bool:
    u, v = tuple(u), tuple(v)
    if len(u) > len(v):
        u, v = v, u
    return not u or v[len(v) - len(u):] == u


def primitive_root(w: Sequence[str]) -> Word:
    w = tuple(w)
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d]
    return w


def power_of(w: Sequence[str], p: Sequence[str]) -> int | None:
    """``k`` with ``w == p^k`` or None."""
    w, p = tuple(w), tuple(p)
    if not p:
        return 0 if not w else None
    k, rem = divmod(len(w), len(p))
    return k if not rem and p * k == w else None


def conjugacy_decompose(s: Sequence[str], t: Sequence[str], u: Sequence[str]) -> Decomposition:
    """Solve ``t u = s t`` as ``s = q r``, ``u = r q``, ``t = q (r q)^i``, shortest ``q``."""
    s, t, u = tuple(s), tuple(t), tuple(u)
    if not s or not t or not u:
        raise PreconditionViolated("s, t and u must be nonempty")
    if t + u != s + t:
        raise PreconditionViolated("t u differs from s t")
    for k in range(len(s) + 1):
        q, r = s[:k], s[k:]
        if r + q != u:
            continue
        if len(t) < len(q) or t[: len(q)] != q:
            continue
        i = power_of(t[len(q):], r + q)
        if i is not None:
            return Decomposition(q, r, i)
    raise AssertionError("no decomposition found")  # unreachable when t u == s t


def common_root(x: Sequence[str], y: Sequence[str], z: Sequence[str], n: int, m: int, k: int) -> Word:
    """Primitive root of ``z`` when ``x^n y^m = z^k`` with ``n, m, k >= 2``."""
    x, y, z = tuple(x), tuple(y), tuple(z)
    if min(n, m, k) < 2:
        raise PreconditionViolated("exponents must be at least 2")
    if x * n + y * m != z * k:
        raise PreconditionViolated("x^n y^m differs from z^k")
    t = primitive_root(z)
    if any(power_of(w, t) is None for w in (x, y)):
        raise AssertionError("inputs are not powers of a common word")
    return t


def _blocks(c: TreeConstraint) -> list[Word]:
    lhs = c.lhs.word
    cuts = {0, len(lhs)}
    for s in c.rhs:
        if s.var != c.lhs.var:
            raise ShapeMismatch(f"summand {s} is over another variable")
        if len(s.word) >= len(lhs) or lhs[len(lhs) - len(s.word):] != s.word:
            raise ShapeMismatch(f"summand {s} is not a proper suffix of {c.lhs}")
        cuts.add(len(lhs) - len(s.word))
    cuts = sorted(cuts)
    return [lhs[a:b] for a, b in zip(cuts, cuts[1:])]


def analyze_self_similar(c: TreeConstraint, alphabet: Iterable[str] | None = None) -> CommonRoot | IndependentAfter:
    blocks = _blocks(c)
    p = primitive_root(blocks[0])
    if all(power_of(b, p) for b in blocks):
        return CommonRoot(p)
    letters = tuple(dict.fromkeys(alphabet if alphabet is not None else sorted(c.labels)))
    lhs = c.lhs.word
    for n in range(2 * len(lhs) + 1):
        for t in product(letters, repeat=n):
            if not any(suffix_dependent(t + s.word, lhs) for s in c.rhs):
                return IndependentAfter(t)
    raise ShapeMismatch("no separating prefix within the search bound")
