"""Domain types, extended arithmetic over Q>=0 + {inf}, and the text format.

Words are tuples of label names written outermost-first: the word ``(l, r)``
applied to ``x`` is the term ``l(r(x))``, whose root sits at the end of the
tree path ``r`` then ``l`` starting from the root of ``x``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Word = tuple[str, ...]


class _Infinity:
    """The absorbing top element of D."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "inf"

    __str__ = __repr__

    def __hash__(self) -> int:
        return hash("utcsolve.inf")

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __mul__(self, other):
        if other == 0:
            raise ArithmeticError("0 * inf is undefined in D")
        return self

    __rmul__ = __mul__

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ExtValue = Union[Fraction, _Infinity]


def ext(value) -> ExtValue:
    """Coerce ints, strings like ``"3/4"`` or ``"inf"`` into an extended value."""
    if value is INF:
        return INF
    if isinstance(value, str) and value.strip() in ("inf", "∞"):
        return INF
    v = Fraction(value)
    if v < 0:
        raise ValueError(f"negative value {v} is outside D")
    return v


def ext_add(a: ExtValue, b: ExtValue) -> ExtValue:
    if a is INF or b is INF:
        return INF
    return a + b


def ext_compare(a: ExtValue, b: ExtValue) -> int:
    """Return -1, 0 or 1; inf equals only itself and exceeds every rational."""
    if a is INF:
        return 0 if b is INF else 1
    if b is INF:
        return -1
    return (a > b) - (a < b)


def ext_scale(c: Fraction, a: ExtValue) -> ExtValue:
    if c <= 0:
        raise ValueError("scaling factor must be positive")
    return INF if a is INF else c * a


def format_value(v: ExtValue) -> str:
    return "inf" if v is INF else str(v)


# ---------------------------------------------------------------------------
# tree expressions


@dataclass(frozen=True, order=True)
class Node:
    """A node expression ``u x``; as an arithmetic atom it stands for its root."""

    word: Word
    var: str

    @property
    def level(self) -> int:
        return len(self.word)

    def prefixed(self, w: Word) -> "Node":
        return Node(tuple(w) + self.word, self.var)

    def __str__(self) -> str:
        return " ".join(self.word + (self.var,))


@dataclass(frozen=True, order=True)
class Lam:
    """A free arithmetic variable (written ``$name``)."""

    name: str

    def __str__(self) -> str:
        return "$" + self.name


@dataclass(frozen=True)
class TreeExpr:
    word: Word
    var: str
    coeff: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        if self.coeff <= 0:
            raise ValueError("tree expression coefficients must be positive")

    @property
    def node(self) -> Node:
        return Node(self.word, self.var)

    @property
    def level(self) -> int:
        return len(self.word)

    def prefixed(self, w: Word) -> "TreeExpr":
        return TreeExpr(tuple(w) + self.word, self.var, self.coeff)

    def scaled(self, c) -> "TreeExpr":
        return TreeExpr(self.word, self.var, self.coeff * Fraction(c))

    def __str__(self) -> str:
        body = " ".join(self.word + (self.var,))
        return body if self.coeff == 1 else f"{self.coeff} * {body}"


@dataclass(frozen=True)
class TreeConstraint:
    """``lhs >= sum(rhs)`` holding at every node; lhs carries coefficient 1."""

    lhs: TreeExpr
    rhs: tuple[TreeExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if self.lhs.coeff != 1:
            raise NonUnilateral("greater side must have coefficient 1")
        if not self.rhs:
            raise ValueError("tree constraint needs at least one summand")

    def shifted(self, w: Word) -> "TreeConstraint":
        return TreeConstraint(self.lhs.prefixed(w), tuple(t.prefixed(w) for t in self.rhs))

    @property
    def max_len(self) -> int:
        return max([self.lhs.level] + [t.level for t in self.rhs])

    @property
    def labels(self) -> set[str]:
        out = set(self.lhs.word)
        for t in self.rhs:
            out.update(t.word)
        return out

    def __str__(self) -> str:
        return f"{self.lhs} >= " + " + ".join(str(t) for t in self.rhs)


# ---------------------------------------------------------------------------
# linear forms


def _key_order(k) -> tuple:
    return (type(k).__name__, str(k))


class Form:
    """Immutable linear form ``sum c_k * k + const`` with exact coefficients.

    Keys are any hashable objects (nodes, free variables, LP variable names).
    Zero coefficients are dropped so equal forms compare equal.
    """

    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs: Mapping | Iterable = (), const=0):
        acc: dict = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for k, c in items:
            c = Fraction(c)
            if c:
                acc[k] = acc.get(k, Fraction(0)) + c
        self.coeffs = tuple(sorted(((k, c) for k, c in acc.items() if c), key=lambda kc: _key_order(kc[0])))
        self.const = Fraction(const)
        self._hash = None

    @classmethod
    def var(cls, k, c=1) -> "Form":
        return cls({k: c})

    @classmethod
    def constant(cls, c) -> "Form":
        return cls((), c)

    def __iter__(self) -> Iterator:
        return iter(self.coeffs)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def coeff(self, k) -> Fraction:
        for key, c in self.coeffs:
            if key == k:
                return c
        return Fraction(0)

    @property
    def variables(self) -> tuple:
        return tuple(k for k, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def is_nonneg(self) -> bool:
        return self.const >= 0 and all(c > 0 for _, c in self.coeffs)

    def __add__(self, other: "Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        return Form(list(self.coeffs) + list(other.coeffs), self.const + other.const)

    def __sub__(self, other: "Form") -> "Form":
        return self + other * -1

    def __mul__(self, c) -> "Form":
        c = Fraction(c)
        return Form([(k, v * c) for k, v in self.coeffs], self.const * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Form":
        return self * -1

    def __eq__(self, other) -> bool:
        return isinstance(other, Form) and self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.coeffs, self.const))
        return self._hash

    def split(self) -> tuple["Form", "Form"]:
        """Return ``(pos, neg)`` with ``self == pos - neg`` and both nonnegative."""
        pos = [(k, c) for k, c in self.coeffs if c > 0]
        neg = [(k, -c) for k, c in self.coeffs if c < 0]
        return (Form(pos, max(self.const, 0)), Form(neg, max(-self.const, 0)))

    def substitute(self, env: Mapping) -> "Form":
        """Replace keys found in ``env`` by forms or rational values (no inf)."""
        out = Form.constant(self.const)
        for k, c in self.coeffs:
            if k in env:
                v = env[k]
                out = out + (v * c if isinstance(v, Form) else Form.constant(Fraction(v) * c))
            else:
                out = out + Form.var(k, c)
        return out

    def evaluate(self, env) -> ExtValue:
        """Evaluate a nonnegative form under ``env`` (a mapping or callable)."""
        get = env if callable(env) else env.__getitem__
        total: ExtValue = self.const
        for k, c in self.coeffs:
            if c < 0:
                raise ValueError("evaluate() needs a nonnegative form")
            total = ext_add(total, ext_scale(c, get(k)))
        return total

    def __repr__(self) -> str:
        return f"Form({self})"

    def __str__(self) -> str:
        return format_form(self)


def format_form(f: Form, atom=str) -> str:
    parts = []
    for k, c in f.coeffs:
        a = atom(k)
        if c == 1:
            parts.append(("+", a))
        elif c == -1:
            parts.append(("-", a))
        elif c > 0:
            parts.append(("+", f"{c} * {a}"))
        else:
            parts.append(("-", f"{-c} * {a}"))
    if f.const or not parts:
        parts.append(("+" if f.const >= 0 else "-", str(abs(f.const))))
    out = ""
    for i, (sign, text) in enumerate(parts):
        if i == 0:
            out = text if sign == "+" else "-" + text
        else:
            out += f" {sign} {text}"
    return out


@dataclass(frozen=True)
class ArithConstraint:
    """``lhs rel rhs`` between nonnegative forms over root atoms and free variables."""

    rel: str
    lhs: Form
    rhs: Form

    def __post_init__(self):
        if self.rel not in (">=", "<=", "="):
            raise ValueError(f"bad relation {self.rel!r}")
        if not (self.lhs.is_nonneg() and self.rhs.is_nonneg()):
            raise ValueError("arithmetic constraint sides must be nonnegative sums")

    def oriented(self) -> list[tuple[Form, Form]]:
        """Pairs ``(greater, lesser)`` expressing this relation."""
        if self.rel == ">=":
            return [(self.lhs, self.rhs)]
        if self.rel == "<=":
            return [(self.rhs, self.lhs)]
        return [(self.lhs, self.rhs), (self.rhs, self.lhs)]

    @property
    def atoms(self) -> set:
        return set(self.lhs.variables) | set(self.rhs.variables)

    def holds(self, env) -> bool:
        for g, l in self.oriented():
            if ext_compare(g.evaluate(env), l.evaluate(env)) < 0:
                return False
        return True

    def __str__(self) -> str:
        return f"{_fmt_arith(self.lhs)} {self.rel} {_fmt_arith(self.rhs)}"


def _fmt_atom(k) -> str:
    if isinstance(k, Node):
        return f"@({k})"
    return str(k)


def _fmt_arith(f: Form) -> str:
    return format_form(f, _fmt_atom)


@dataclass(frozen=True)
class ConstraintSystem:
    alphabet: tuple[str, ...]
    variables: tuple[str, ...]
    tree: tuple[TreeConstraint, ...] = ()
    arith: tuple[ArithConstraint, ...] = ()
    lambdas: tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate labels in alphabet")
        labels = set(self.alphabet)
        for c in self.tree:
            if not c.labels <= labels:
                raise UnknownLabel(f"labels {sorted(c.labels - labels)} not in alphabet")
        for c in self.arith:
            for a in c.atoms:
                if isinstance(a, Node) and not set(a.word) <= labels:
                    raise UnknownLabel(f"labels in {a} not in alphabet")

    @property
    def root_atoms(self) -> list[Node]:
        seen: dict = {}
        for c in self.arith:
            for a in c.atoms:
                if isinstance(a, Node):
                    seen.setdefault(a, None)
        return sorted(seen)

    def with_tree(self, tree: Iterable[TreeConstraint]) -> "ConstraintSystem":
        return ConstraintSystem(self.alphabet, self.variables, tuple(tree), self.arith, self.lambdas)

    def __str__(self) -> str:
        return print_system(self)


# ---------------------------------------------------------------------------
# parser


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class NonUnilateral(ParseError):
    pass


class UnknownLabel(ParseError):
    pass


class NegativeConstant(ParseError):
    pass


class MixedAtom(ParseError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<rel>>=|<=|=)|(?P<root>@\()|(?P<lam>\$[A-Za-z_][\w']*)"
    r"|(?P<id>[A-Za-z_][\w']*)|(?P<op>[+\-*)]))"
)


def _tokenize(text: str, line: int) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r}", line)
        pos = m.end()
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
    return out


@dataclass
class _Term:
    sign: int
    coeff: Fraction
    kind: str  # "tree" | "root" | "lam" | "const"
    node: Node | None = None
    name: str | None = None


@dataclass
class _Parser:
    toks: list
    line: int
    i: int = 0
    labels_used: list = field(default_factory=list)

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.take()
        if t[0] != kind or (value is not None and t[1] != value):
            raise ParseError(f"expected {value or kind}, got {t[1]!r}", self.line)
        return t

    def tree_atom(self) -> Node:
        ids = []
        while self.peek()[0] == "id":
            ids.append(self.take()[1])
        if not ids:
            raise ParseError(f"expected tree atom, got {self.peek()[1]!r}", self.line)
        return Node(tuple(ids[:-1]), ids[-1])

    def term(self, sign: int) -> _Term:
        kind, val = self.peek()
        if kind == "op" and val == "-":
            raise NegativeConstant("unary minus is not allowed", self.line)
        coeff = Fraction(1)
        if kind == "num":
            self.take()
            coeff = Fraction(val)
            nk, nv = self.peek()
            if nk == "op" and nv == "*":
                self.take()
            elif nk not in ("id", "root", "lam"):
                return _Term(sign, coeff, "const")
            kind, val = self.peek()
        if coeff == 0:
            raise ParseError("zero coefficient", self.line)
        if kind == "root":
            self.take()
            node = self.tree_atom()
            self.expect("op", ")")
            return _Term(sign, coeff, "root", node=node)
        if kind == "lam":
            self.take()
            return _Term(sign, coeff, "lam", name=val[1:])
        if kind == "id":
            return _Term(sign, coeff, "tree", node=self.tree_atom())
        raise ParseError(f"unexpected token {val!r}", self.line)

    def side(self) -> list[_Term]:
        terms = [self.term(+1)]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = +1 if self.take()[1] == "+" else -1
            terms.append(self.term(sign))
        return terms


def _move(lhs: list[_Term], rhs: list[_Term]) -> tuple[list[_Term], list[_Term]]:
    """Move subtracted terms across the relation so both sides are sums."""
    new_l = [t for t in lhs if t.sign > 0] + [_Term(1, t.coeff, t.kind, t.node, t.name) for t in rhs if t.sign < 0]
    new_r = [t for t in rhs if t.sign > 0] + [_Term(1, t.coeff, t.kind, t.node, t.name) for t in lhs if t.sign < 0]
    return new_l, new_r


def _tree_side(terms: list[_Term]) -> list[TreeExpr]:
    acc: dict[Node, Fraction] = {}
    for t in terms:
        acc[t.node] = acc.get(t.node, Fraction(0)) + t.coeff
    return [TreeExpr(n.word, n.var, c) for n, c in acc.items()]


def _arith_form(terms: list[_Term]) -> Form:
    items, const = [], Fraction(0)
    for t in terms:
        if t.kind == "const":
            const += t.coeff
        elif t.kind == "root":
            items.append((t.node, t.coeff))
        else:
            items.append((Lam(t.name), t.coeff))
    return Form(items, const)


def _orient(greater: list[TreeExpr], lesser: list[TreeExpr], line: int) -> TreeConstraint:
    if len(greater) != 1 or greater[0].coeff != 1:
        raise NonUnilateral("greater side of a tree relation must be one atom with coefficient 1", line)
    if not lesser:
        raise ParseError("tree relation with an empty lesser side", line)
    return TreeConstraint(greater[0], tuple(lesser))


def parse_system(text: str) -> ConstraintSystem:
    """Parse the line-oriented constraint format (``#`` comments, ``;`` separators)."""
    declared: list[str] | None = None
    tree: list[TreeConstraint] = []
    arith: list[ArithConstraint] = []
    used_labels: dict[str, None] = {}
    variables: set[str] = set()
    lambdas: dict[str, None] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        for stmt in body.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            if stmt.startswith("labels:"):
                names = stmt[len("labels:"):].split()
                if not all(re.fullmatch(r"[A-Za-z_][\w']*", n) for n in names):
                    raise ParseError("bad label declaration", lineno)
                declared = (declared or []) + [n for n in names if n not in (declared or [])]
                continue
            p = _Parser(_tokenize(stmt, lineno), lineno)
            lhs = p.side()
            kind, rel = p.take()
            if kind != "rel":
                raise ParseError(f"expected relation, got {rel!r}", lineno)
            rhs = p.side()
            if p.peek()[0] is not None:
                raise ParseError(f"trailing input {p.peek()[1]!r}", lineno)
            all_terms = lhs + rhs
            for t in all_terms:
                if t.node is not None:
                    for lab in t.node.word:
                        used_labels.setdefault(lab, None)
                    variables.add(t.node.var)
                if t.kind == "lam":
                    lambdas.setdefault(t.name, None)
            lhs, rhs = _move(lhs, rhs)
            if any(t.kind == "tree" for t in all_terms):
                if any(t.kind != "tree" for t in all_terms):
                    raise MixedAtom("tree relation mixes bare tree atoms with root atoms or numbers", lineno)
                l_side, r_side = _tree_side(lhs), _tree_side(rhs)
                if rel in (">=", "="):
                    tree.append(_orient(l_side, r_side, lineno))
                if rel in ("<=", "="):
                    tree.append(_orient(r_side, l_side, lineno))
            else:
                arith.append(ArithConstraint(rel, _arith_form(lhs), _arith_form(rhs)))
    if declared is not None:
        unknown = [lab for lab in used_labels if lab not in declared]
        if unknown:
            raise UnknownLabel(f"labels {unknown} not declared")
        alphabet = tuple(declared)
    else:
        alphabet = tuple(used_labels)
    overlap = variables & set(alphabet)
    if overlap:
        raise ParseError(f"identifiers used both as label and variable: {sorted(overlap)}")
    return ConstraintSystem(alphabet, tuple(sorted(variables)), tuple(tree), tuple(arith), tuple(lambdas))


def print_system(sys: ConstraintSystem) -> str:
    lines = []
    if sys.alphabet:
        lines.append("labels: " + " ".join(sys.alphabet))
    lines.extend(str(c) for c in sys.arith)
    lines.extend(str(c) for c in sys.tree)
    return "\n".join(lines) + "\n"


def words_upto(alphabet: Iterable[str], n: int) -> Iterator[Word]:
    """All words of length <= n in length-lexicographic order."""
    alphabet = tuple(alphabet)
    layer: list[Word] = [()]
    for _ in range(n + 1):
        yield from layer
        if not alphabet:
            return
        layer = [w + (a,) for w in layer for a in alphabet]


def words_of_length(alphabet: Iterable[str], n: int) -> list[Word]:
    alphabet = tuple(alphabet)
    layer: list[Word] = [()]
    for _ in range(n):
        layer = [w + (a,) for w in layer for a in alphabet]
    return layer


@dataclass(frozen=True)
class TreeRelation:
    """A general (possibly bilateral) tree relation, for the pointwise checker only."""

    lhs: tuple[TreeExpr, ...]
    rel: str
    rhs: tuple[TreeExpr, ...]

    def oriented(self) -> list[tuple[tuple[TreeExpr, ...], tuple[TreeExpr, ...]]]:
        if self.rel == ">=":
            return [(self.lhs, self.rhs)]
        if self.rel == "<=":
            return [(self.rhs, self.lhs)]
        return [(self.lhs, self.rhs), (self.rhs, self.lhs)]

    def shifted(self, w: Word) -> "TreeRelation":
        return TreeRelation(tuple(t.prefixed(w) for t in self.lhs), self.rel, tuple(t.prefixed(w) for t in self.rhs))

    @classmethod
    def of(cls, c: TreeConstraint) -> "TreeRelation":
        return cls((c.lhs,), ">=", c.rhs)

    def __str__(self) -> str:
        return " + ".join(map(str, self.lhs)) + f" {self.rel} " + " + ".join(map(str, self.rhs))


def parse_relations(text: str) -> tuple[tuple[str, ...], list[TreeRelation], list[ArithConstraint]]:
    """Parse without the unilateral restriction; returns (alphabet, tree relations, arithmetic)."""
    labels: dict[str, None] = {}
    rels: list[TreeRelation] = []
    arith: list[ArithConstraint] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        for stmt in raw.split("#", 1)[0].split(";"):
            stmt = stmt.strip()
            if not stmt or stmt.startswith("labels:"):
                for n in stmt[len("labels:"):].split() if stmt else ():
                    labels.setdefault(n, None)
                continue
            p = _Parser(_tokenize(stmt, lineno), lineno)
            lhs = p.side()
            kind, rel = p.take()
            if kind != "rel":
                raise ParseError(f"expected relation, got {rel!r}", lineno)
            rhs = p.side()
            for t in lhs + rhs:
                if t.node is not None:
                    for lab in t.node.word:
                        labels.setdefault(lab, None)
            lhs, rhs = _move(lhs, rhs)
            if any(t.kind == "tree" for t in lhs + rhs):
                if any(t.kind != "tree" for t in lhs + rhs):
                    raise MixedAtom("tree relation mixes bare tree atoms with root atoms or numbers", lineno)
                rels.append(TreeRelation(tuple(_tree_side(lhs)), rel, tuple(_tree_side(rhs))))
            else:
                arith.append(ArithConstraint(rel, _arith_form(lhs), _arith_form(rhs)))
    return tuple(labels), rels, arith
