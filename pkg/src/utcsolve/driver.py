"""Top-level decision loop, verdicts and certificates.

Rounds alternate between the unfolding search for an infeasible program and
interval propagation for every live zero/infinity pattern, with budgets that
grow geometrically. A verdict is returned only after its certificate has
been re-checked by code that does not use the search machinery.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .core import (
    INF,
    ConstraintSystem,
    ExtValue,
    Form,
    Lam,
    Node,
    format_value,
    parse_system,
    print_system,
    words_upto,
)
from .interval import (
    EPS,
    ImmediateConflict,
    InfinityConflict,
    Kind,
    LevelTooWide,
    PatternConflict,
    NodeClass,
    Propagation,
    Stabilized,
    ZeroInfinityPattern,
    ac_program,
    compute_S,
    emit_lp,
    patterns,
)
from .lp import Feasible, LinearProgram, Refutation, combine, must_finite, q_feasible, verify_refutation
from .normal import NormalFormSystem, normalize
from .reach import AnchorIndex, Entailment
from .unfold import (
    Report,
    SolutionScheme,
    UnsatCertificate,
    UnsatSearch,
    check_assignment,
    forced_atoms,
    program_at,
    verify_unsat,
)

CERT_FORMAT = "utc-certificate"
CERT_VERSION = 1


class HardLimit(RuntimeError):
    pass


@dataclass
class SolverConfig:
    initial_budget: int = 2
    growth: int = 2
    checker_depth: int = 50
    max_steps: int | None = None
    forbid_infinity: tuple[str, ...] | str | None = None
    parallel: bool = False
    class_cap: int = 64
    patterns_per_round: int = 32
    unsat_constraints: int = 2000
    max_nodes: int = 20000

    def __post_init__(self):
        if self.initial_budget < 1 or self.patterns_per_round < 1:
            raise ValueError("budgets must be positive")
        if self.growth < 2:
            raise ValueError("growth factor must exceed 1")


@dataclass
class Sat:
    pattern: ZeroInfinityPattern
    classes: dict[Node, NodeClass]
    program: LinearProgram
    witness: dict
    scheme: SolutionScheme
    report: Report
    notes: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    kind: str = "sat"


@dataclass
class Unsat:
    certificate: UnsatCertificate
    notes: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    kind: str = "unsat"


@dataclass
class Unknown:
    reason: str
    notes: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    kind: str = "unknown"


Verdict = Sat | Unsat | Unknown


def all_inf_eligible(nf: NormalFormSystem, forced: Iterable = ()) -> ZeroInfinityPattern:
    """Every arithmetic variable that AC' does not force finite goes to infinity."""
    mf = must_finite(LinearProgram(nf.ac), forced)
    return ZeroInfinityPattern(frozenset(), frozenset(a for a in nf.arith_vars if a not in mf.members))


class _Attempt:
    """One pattern's state across rounds."""

    def __init__(self, pattern: ZeroInfinityPattern, prop: Propagation):
        self.pattern = pattern
        self.prop = prop
        self.dead = False
        self.why = ""


class Solver:
    def __init__(self, system: ConstraintSystem, cfg: SolverConfig | None = None):
        self.system = system
        self.cfg = cfg or SolverConfig()
        self.nf = normalize(system)
        self.S = compute_S(system)
        self.ent = Entailment(system.tree, system.alphabet, system.variables)
        self.index = AnchorIndex(self.ent, [a for a in self.nf.arith_vars if isinstance(a, Node)])
        self.forced = forced_atoms(system, self.cfg.forbid_infinity)
        self.unsat = UnsatSearch(system, self.forced)
        eager = [all_inf_eligible(self.nf, self.forced)]
        self._patterns = patterns(self.nf.arith_vars, eager, forbid_inf=self.forced)
        self._exhausted = False
        self.attempts: list[_Attempt] = []
        self.stats = {"rounds": 0, "patterns_opened": 0, "patterns_rejected": 0, "unsat_level": -1, "S": self.S, "level": self.nf.level}
        self.log: list[str] = []

    # -- pattern side ----------------------------------------------------------

    def _open_patterns(self, k: int) -> None:
        while k > 0 and not self._exhausted:
            p = next(self._patterns, None)
            if p is None:
                self._exhausted = True
                break
            self.stats["patterns_opened"] += 1
            try:
                res = q_feasible(ac_program(self.nf, p), Form.var(EPS))
                ok = isinstance(res, Feasible) and res.objective > 0
            except InfinityConflict:
                ok = False
            if not ok:
                self.stats["patterns_rejected"] += 1
                continue
            prop = Propagation(self.nf, p, self.index, self.S, self.cfg.class_cap, self.cfg.max_nodes)
            self.attempts.append(_Attempt(p, prop))
            k -= 1

    def _try(self, att: _Attempt, budget: int) -> Sat | None:
        out = att.prop.advance(budget)
        if isinstance(out, ImmediateConflict):
            att.dead, att.why = True, out.reason
            return None
        if not isinstance(out, Stabilized):
            return None
        try:
            wp = emit_lp(att.prop, out)
        except InfinityConflict as e:
            att.dead, att.why = True, str(e)
            return None
        res = q_feasible(wp.lp, wp.objective)
        if not isinstance(res, Feasible):
            att.dead, att.why = True, "window program infeasible"
            return None
        try:
            scheme = self._scheme(att, out, res.witness)
        except (PatternConflict, LevelTooWide) as e:
            att.dead, att.why = True, f"no classifier: {e}"
            return None
        report = check_assignment(self.system, scheme, self.cfg.checker_depth)
        if not report.ok:
            att.dead, att.why = True, f"scheme rejected by checker: {report.violation}"
            self.log.append(att.why)
            return None
        notes = []
        infinite = sorted(str(v) for v, x in scheme.table.items() if x is INF)
        if infinite:
            notes.append("solution uses infinity at: " + ", ".join(infinite[:20]) + (" ..." if len(infinite) > 20 else ""))
        notes.append(f"strictness margin eps = {res.objective}")
        return Sat(att.pattern, out.classes, wp.lp, res.witness, scheme, report, notes)

    def _scheme(self, att: _Attempt, out: Stabilized, witness: Mapping) -> SolutionScheme:
        prop = att.prop
        table: dict[Node, ExtValue] = {}
        for x in self.system.variables:
            for w in words_upto(self.system.alphabet, out.boundary):
                v = Node(w, x)
                k = prop.kind(v)
                if k is Kind.INF:
                    table[v] = INF
                elif k is Kind.ZERO:
                    table[v] = Fraction(0)
                else:
                    table[v] = witness.get(v, Fraction(0))
        lambdas: dict[str, ExtValue] = {}
        for name in self.system.lambdas:
            k = att.pattern.kind(Lam(name))
            lambdas[name] = INF if k is Kind.INF else (Fraction(0) if k is Kind.ZERO else witness.get(Lam(name), Fraction(0)))
        return SolutionScheme(table, out.period, out.boundary, lambdas, prop.classifier(self.cfg.max_nodes))

    def _constant(self, value: ExtValue) -> Sat | None:
        """The constant valuation ``value`` everywhere, checked directly."""
        if value is INF and self.forced:
            return None
        table = {Node((), x): value for x in self.system.variables}
        lambdas = {name: value for name in self.system.lambdas}
        scheme = SolutionScheme(table, 1, 0, lambdas)
        report = check_assignment(self.system, scheme, self.cfg.checker_depth)
        if report.ok:
            everything = frozenset(self.nf.arith_vars)
            pattern = ZeroInfinityPattern(everything, frozenset()) if value == 0 else ZeroInfinityPattern(frozenset(), everything)
            note = "constant solution: every node is " + format_value(value)
            return Sat(pattern, {}, LinearProgram(()), {}, scheme, report, [note])
        return None

    # -- main loop -------------------------------------------------------------

    def solve(self) -> Verdict:
        cfg = self.cfg
        budget = cfg.initial_budget
        r = 0
        quick = self._constant(Fraction(0))
        if quick is not None:
            quick.stats = self._stats()
            return quick
        while True:
            if cfg.max_steps is not None and r >= cfg.max_steps:
                return Unknown(f"step limit {cfg.max_steps} reached", stats=self._stats())
            self.stats["rounds"] = r + 1
            cert = self.unsat.advance(budget, cfg.unsat_constraints * cfg.growth**r)
            self.stats["unsat_level"] = self.unsat.checked
            if cert is not None:
                if not verify_unsat(self.system, cert, self.forced):
                    raise AssertionError("unsat certificate failed revalidation")
                notes = []
                if self.forced:
                    notes.append("assumed finite: " + ", ".join(map(str, self.forced)))
                return Unsat(cert, notes, self._stats())
            self._open_patterns(cfg.patterns_per_round * cfg.growth**r)
            live = [a for a in self.attempts if not a.dead]
            if cfg.parallel and len(live) > 1:
                with ThreadPoolExecutor() as pool:
                    results = list(pool.map(lambda a: self._try(a, budget), live))
            else:
                results = []
                for a in live:
                    results.append(self._try(a, budget))
                    if results[-1] is not None:
                        break
            if r == 0:
                results.append(self._constant(INF))
            for res in results:
                if res is not None:
                    res.stats = self._stats()
                    return res
            self.attempts = [a for a in self.attempts if not a.dead]
            self.stats["patterns_rejected"] += len(live) - len(self.attempts)
            if self._exhausted and not self.attempts and not self.unsat.state.frontier:
                return Unknown("every pattern was rejected and unfolding is complete", stats=self._stats())
            budget *= cfg.growth
            r += 1

    def _stats(self) -> dict:
        return dict(self.stats)


def solve(system: ConstraintSystem, cfg: SolverConfig | None = None) -> Verdict:
    return Solver(system, cfg).solve()


# ---------------------------------------------------------------------------
# certificates


def emit_certificate(system: ConstraintSystem, v: Verdict, cfg: SolverConfig | None = None) -> dict:
    cfg = cfg or SolverConfig()
    doc: dict = {
        "format": CERT_FORMAT,
        "version": CERT_VERSION,
        "verdict": v.kind,
        "system": print_system(system),
        "notes": list(v.notes),
        "stats": dict(v.stats),
    }
    if isinstance(v, Sat):
        doc["sat"] = {
            "pattern": v.pattern.to_json(),
            "classes": [[str(n), str(c)] for n, c in sorted(v.classes.items())],
            "program": [str(c) for c in v.program.constraints],
            "witness": {str(k): format_value(x) for k, x in sorted(v.witness.items(), key=lambda kv: str(kv[0]))},
            "scheme": v.scheme.to_json(),
            "report": v.report.to_json(),
            "checker_depth": cfg.checker_depth,
        }
    elif isinstance(v, Unsat):
        doc["unsat"] = v.certificate.to_json()
    else:
        doc["unknown"] = {"reason": v.reason}
    return doc


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _atom(text: str):
    if text.startswith("$"):
        return Lam(text[1:])
    parts = text.split()
    return Node(tuple(parts[:-1]), parts[-1])


def revalidate(doc: Mapping) -> bool:
    """Re-check a certificate using only parsing, the checker and the LP checks."""
    if doc.get("format") != CERT_FORMAT:
        return False
    system = parse_system(doc["system"])
    if doc["verdict"] == "sat":
        sat = doc["sat"]
        scheme = SolutionScheme.from_json(sat["scheme"])
        return check_assignment(system, scheme, int(sat.get("checker_depth", 50))).ok
    if doc["verdict"] == "unsat":
        u = doc["unsat"]
        program = program_at(system, int(u["level"]))
        if [str(c) for c in program.constraints] != list(u["program"]):
            return False
        forced = {_atom(s) for s in u.get("forced", [])}
        derivation = tuple((_atom(s), int(i)) for s, i in u["derivation"])
        if any(i < 0 and a not in forced for a, i in derivation):
            return False
        mult = tuple((int(i), Fraction(m)) for i, m in u["multipliers"])
        ref = Refutation(mult, combine(program, mult))
        return verify_refutation(program, ref, derivation)
    return False


def explain(v: Verdict) -> str:
    lines = []
    if isinstance(v, Sat):
        lines.append(f"pattern: {v.pattern}")
        lines.append(f"period {v.scheme.period}, boundary level {v.scheme.boundary}")
        for n, c in sorted(v.classes.items()):
            lines.append(f"  class of {n}: {c}")
        lines.append(f"checker: {v.report.instances} instances, exhaustive={v.report.exhaustive}")
    elif isinstance(v, Unsat):
        c = v.certificate
        lines.append(f"program P_{c.level} has {len(c.program.constraints)} constraints")
        lines.append(f"finite by derivation: {', '.join(map(str, c.mustfin))}")
        for i, m in c.refutation.multipliers:
            lines.append(f"  {m} x [{c.program.constraints[i]}]")
        lines.append(f"sum: {c.refutation.summary()}")
    else:
        lines.append(v.reason)
    lines += [f"note: {n}" for n in v.notes]
    return "\n".join(lines)
