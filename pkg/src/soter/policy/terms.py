"""Syntax tree for the policy language: terms, atoms, constraints, rules, programs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from soter.policy.errors import UnsafeRule

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_VAR_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        if not _VAR_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Sym:
    name: str

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid symbol {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Int:
    value: int

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeError("Int requires an int")
        if not INT64_MIN <= self.value <= INT64_MAX:
            raise ValueError(f"integer {self.value} outside signed 64-bit range")

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Str:
    value: str

    def __post_init__(self) -> None:
        if "\x00" in self.value:
            raise ValueError("strings may not contain NUL")

    def __str__(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


Const = Union[Sym, Int, Str]
Term = Union[Var, Sym, Int, Str]

# Total order on constants: integers, then symbols, then strings (bytewise).


def term_key(t: Term) -> tuple:
    if isinstance(t, Int):
        return (0, t.value)
    if isinstance(t, Sym):
        return (1, t.name.encode())
    if isinstance(t, Str):
        return (2, t.value.encode())
    return (3, t.name.encode())


def is_ground_term(t: Term) -> bool:
    return not isinstance(t, Var)


def const(value: Union[int, str, Term]) -> Term:
    """Lift a Python value to a constant term.

    Lower-case identifier strings become symbols, anything else becomes a
    quoted string; terms pass through unchanged.
    """
    if isinstance(value, (Var, Sym, Int, Str)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not policy constants")
    if isinstance(value, int):
        return Int(value)
    if isinstance(value, str):
        return Sym(value) if _IDENT_RE.match(value) else Str(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a constant")


def to_python(t: Term) -> Union[int, str]:
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Sym):
        return t.name
    if isinstance(t, Str):
        return t.value
    raise ValueError(f"variable {t} has no value")


Subst = Mapping[Var, Term]


def subst_term(t: Term, theta: Subst) -> Term:
    if isinstance(t, Var):
        return theta.get(t, t)
    return t


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.predicate):
            raise ValueError(f"invalid predicate name {self.predicate!r}")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 1:
            raise ValueError("atoms need at least one argument")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    def is_ground(self) -> bool:
        return all(is_ground_term(a) for a in self.args)

    def variables(self) -> Iterator[Var]:
        for a in self.args:
            if isinstance(a, Var):
                yield a

    def substitute(self, theta: Subst) -> "Atom":
        return Atom(self.predicate, tuple(subst_term(a, theta) for a in self.args))

    def sort_key(self) -> tuple:
        return (self.predicate.encode(), len(self.args), tuple(term_key(a) for a in self.args))

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


def atom(predicate: str, *args: Union[int, str, Term]) -> Atom:
    """Convenience constructor: ``atom("credential", "alice", "role", "physician")``.

    Capitalised strings are read as variables.
    """
    terms: list[Term] = []
    for a in args:
        if isinstance(a, str) and _VAR_RE.match(a):
            terms.append(Var(a))
        else:
            terms.append(const(a))
    return Atom(predicate, tuple(terms))


OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Constraint:
    lhs: Term
    op: str
    rhs: Term

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def variables(self) -> Iterator[Var]:
        for t in (self.lhs, self.rhs):
            if isinstance(t, Var):
                yield t

    def substitute(self, theta: Subst) -> "Constraint":
        return Constraint(subst_term(self.lhs, theta), self.op, subst_term(self.rhs, theta))

    def is_ground(self) -> bool:
        return is_ground_term(self.lhs) and is_ground_term(self.rhs)

    def holds(self) -> bool:
        """Evaluate a ground constraint.

        Equality is structural, so values from different domains are never
        equal. Order comparisons across domains are false.
        """
        a, b = self.lhs, self.rhs
        if isinstance(a, Var) or isinstance(b, Var):
            raise ValueError(f"constraint {self} is not ground")
        if self.op == "=":
            return a == b
        if self.op == "!=":
            return a != b
        if type(a) is not type(b):
            return False
        x, y = term_key(a)[1], term_key(b)[1]
        if self.op == "<":
            return x < y
        if self.op == "<=":
            return x <= y
        if self.op == ">":
            return x > y
        return x >= y

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


Literal = Union[Atom, Constraint]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    @property
    def atoms(self) -> tuple[Atom, ...]:
        return tuple(l for l in self.body if isinstance(l, Atom))

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        return tuple(l for l in self.body if isinstance(l, Constraint))

    def unsafe_variable(self) -> Var | None:
        """First head/constraint variable not bound by a body atom, if any."""
        bound = {v for a in self.atoms for v in a.variables()}
        for v in self.head.variables():
            if v not in bound:
                return v
        for c in self.constraints:
            for v in c.variables():
                if v not in bound:
                    return v
        return None

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(l) for l in self.body)}."


@dataclass(frozen=True)
class PolicyProgram:
    rules: tuple[Rule, ...] = ()
    facts: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "facts", tuple(self.facts))
        for i, r in enumerate(self.rules):
            v = r.unsafe_variable()
            if v is not None:
                raise UnsafeRule(i, v.name)
        for f in self.facts:
            if not f.is_ground():
                raise ValueError(f"fact {f} is not ground")

    def merge(self, *others: "PolicyProgram") -> "PolicyProgram":
        rules = list(self.rules)
        facts = list(self.facts)
        for o in others:
            rules.extend(o.rules)
            facts.extend(o.facts)
        return PolicyProgram(tuple(rules), tuple(facts))

    def constants(self) -> set[Term]:
        out: set[Term] = set()
        for f in self.facts:
            out.update(f.args)
        for r in self.rules:
            for a in (r.head, *r.atoms):
                out.update(t for t in a.args if not isinstance(t, Var))
            for c in r.constraints:
                out.update(t for t in (c.lhs, c.rhs) if not isinstance(t, Var))
        return out

    def predicates(self) -> set[tuple[str, int]]:
        out = {f.signature for f in self.facts}
        for r in self.rules:
            out.add(r.head.signature)
            out.update(a.signature for a in r.atoms)
        return out


def pretty_print(program: PolicyProgram) -> str:
    lines = [f"{f}." for f in program.facts]
    lines.extend(str(r) for r in program.rules)
    return "\n".join(lines) + ("\n" if lines else "")


def sorted_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(set(atoms), key=Atom.sort_key)
