"""Decision procedure for unilateral linear tree constraints over Q>=0 + {inf}."""

from .core import (
    INF,
    ArithConstraint,
    ConstraintSystem,
    Form,
    Lam,
    Node,
    ParseError,
    TreeConstraint,
    TreeExpr,
    parse_system,
    print_system,
)
from .driver import Sat, SolverConfig, Unknown, Unsat, emit_certificate, explain, revalidate, solve
from .normal import normalize
from .reach import Entailment, entails
from .unfold import SolutionScheme, brute_entails, check_assignment, semi_decide_unsat

__all__ = [
    "INF",
    "ArithConstraint",
    "ConstraintSystem",
    "Entailment",
    "Form",
    "Lam",
    "Node",
    "ParseError",
    "Sat",
    "SolutionScheme",
    "SolverConfig",
    "TreeConstraint",
    "TreeExpr",
    "Unknown",
    "Unsat",
    "brute_entails",
    "check_assignment",
    "emit_certificate",
    "entails",
    "explain",
    "normalize",
    "parse_system",
    "print_system",
    "revalidate",
    "semi_decide_unsat",
    "solve",
]

__version__ = "0.1.0"
