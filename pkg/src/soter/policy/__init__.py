"""Datalog-with-constraints policy language: parsing, evaluation, abduction."""

from importlib import resources

from soter.policy.engine import (
    FactStore,
    evaluate,
    match,
    query,
    query_fixpoint,
    unify,
    unsatisfied_requirements,
)
from soter.policy.errors import (
    GoalAlreadySatisfied,
    PolicyError,
    PolicySyntaxError,
    UngroundConstraint,
    UnsafeRule,
)
from soter.policy.parser import parse_atom, parse_program, tokenize
from soter.policy.terms import (
    Atom,
    Constraint,
    Int,
    PolicyProgram,
    Rule,
    Str,
    Sym,
    Term,
    Var,
    atom,
    const,
    pretty_print,
    sorted_atoms,
    term_key,
    to_python,
)

PRELUDES = ("hipaa", "iomt")


def prelude(name: str) -> PolicyProgram:
    """Load one of the shipped fact/rule libraries (``hipaa`` or ``iomt``)."""
    if name not in PRELUDES:
        raise KeyError(f"unknown prelude {name!r}; choose from {PRELUDES}")
    text = resources.files("soter.policy").joinpath("preludes", f"{name}.meddl").read_text("utf-8")
    return parse_program(text)


def load_policy(text: str, preludes: tuple[str, ...] = (), guards=None) -> PolicyProgram:
    """Parse ``text`` and merge in the named preludes."""
    program = parse_program(text, guards)
    return program.merge(*(prelude(p) for p in preludes))


__all__ = [
    "Atom",
    "Constraint",
    "FactStore",
    "GoalAlreadySatisfied",
    "Int",
    "PRELUDES",
    "PolicyError",
    "PolicyProgram",
    "PolicySyntaxError",
    "Rule",
    "Str",
    "Sym",
    "Term",
    "UngroundConstraint",
    "UnsafeRule",
    "Var",
    "atom",
    "const",
    "evaluate",
    "load_policy",
    "match",
    "parse_atom",
    "parse_program",
    "pretty_print",
    "prelude",
    "query",
    "query_fixpoint",
    "sorted_atoms",
    "term_key",
    "to_python",
    "tokenize",
    "unify",
    "unsatisfied_requirements",
]
