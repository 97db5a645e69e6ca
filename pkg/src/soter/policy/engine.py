"""Bottom-up evaluation, goal queries and single-level credential abduction."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Iterator, Optional

from soter.policy.errors import GoalAlreadySatisfied, UngroundConstraint
from soter.policy.terms import (
    Atom,
    Constraint,
    Literal,
    PolicyProgram,
    Rule,
    Term,
    Var,
    sorted_atoms,
    term_key,
)

Binding = dict[Var, Term]

CREDENTIAL = ("credential", 3)


class FactStore:
    """Set of ground atoms indexed by signature and by (signature, position, value)."""

    def __init__(self, facts: Iterable[Atom] = ()):
        self._by_sig: dict[tuple[str, int], set[Atom]] = defaultdict(set)
        self._by_arg: dict[tuple[str, int, int, Term], set[Atom]] = defaultdict(set)
        self._all: set[Atom] = set()
        for f in facts:
            self.add(f)

    def add(self, fact: Atom) -> bool:
        if fact in self._all:
            return False
        self._all.add(fact)
        self._by_sig[fact.signature].add(fact)
        for pos, value in enumerate(fact.args):
            self._by_arg[(fact.predicate, fact.arity, pos, value)].add(fact)
        return True

    def __contains__(self, fact: Atom) -> bool:
        return fact in self._all

    def __len__(self) -> int:
        return len(self._all)

    def signatures(self) -> set[tuple[str, int]]:
        return {s for s, v in self._by_sig.items() if v}

    def candidates(self, pattern: Atom) -> Iterable[Atom]:
        best: Optional[set[Atom]] = None
        for pos, t in enumerate(pattern.args):
            if not isinstance(t, Var):
                bucket = self._by_arg.get((pattern.predicate, pattern.arity, pos, t))
                if bucket is None:
                    return ()
                if best is None or len(bucket) < len(best):
                    best = bucket
        if best is None:
            best = self._by_sig.get(pattern.signature, set())
        return best

    def facts(self) -> frozenset[Atom]:
        return frozenset(self._all)


def match(pattern: Atom, fact: Atom, theta: Binding) -> Optional[Binding]:
    """Extend ``theta`` so that ``pattern`` equals the ground ``fact``."""
    if pattern.predicate != fact.predicate or pattern.arity != fact.arity:
        return None
    out = theta
    copied = False
    for p, f in zip(pattern.args, fact.args):
        if isinstance(p, Var):
            bound = out.get(p)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[p] = f
            elif bound != f:
                return None
        elif p != f:
            return None
    return out


def _walk(t: Term, theta: Binding) -> Term:
    while isinstance(t, Var) and t in theta:
        t = theta[t]
    return t


def unify(a: Atom, b: Atom, theta: Optional[Binding] = None) -> Optional[Binding]:
    """Two-sided unification of atoms (no function symbols, so no occurs check)."""
    if a.signature != b.signature:
        return None
    out: Binding = dict(theta or {})
    for x, y in zip(a.args, b.args):
        x, y = _walk(x, out), _walk(y, out)
        if x == y:
            continue
        if isinstance(x, Var):
            out[x] = y
        elif isinstance(y, Var):
            out[y] = x
        else:
            return None
    return out


def resolve(theta: Binding) -> Binding:
    return {v: _walk(v, theta) for v in theta}


def _plan(rule: Rule) -> tuple[Literal, ...]:
    """Body order for evaluation: atoms as written, each constraint right after
    the first atom that binds all of its variables."""
    pending = list(rule.constraints)
    bound: set[Var] = set()
    plan: list[Literal] = []

    def flush() -> None:
        for c in list(pending):
            if all(v in bound for v in c.variables()):
                plan.append(c)
                pending.remove(c)

    flush()
    for a in rule.atoms:
        plan.append(a)
        bound.update(a.variables())
        flush()
    # SAFE rules leave nothing behind; anything left trips UngroundConstraint.
    plan.extend(pending)
    return tuple(plan)


def _check(c: Constraint, theta: Binding) -> bool:
    g = c.substitute(theta)
    if not g.is_ground():
        raise UngroundConstraint(f"constraint {c} evaluated with unbound variables")
    return g.holds()


def _join(
    plan: tuple[Literal, ...],
    total: FactStore,
    delta: Optional[FactStore],
    delta_pos: int,
) -> Iterator[Binding]:
    def rec(i: int, theta: Binding) -> Iterator[Binding]:
        if i == len(plan):
            yield theta
            return
        lit = plan[i]
        if isinstance(lit, Constraint):
            if _check(lit, theta):
                yield from rec(i + 1, theta)
            return
        pattern = lit.substitute(theta)
        store = delta if (delta is not None and i == delta_pos) else total
        for fact in list(store.candidates(pattern)):
            ext = match(pattern, fact, theta)
            if ext is not None:
                yield from rec(i + 1, ext)

    yield from rec(0, {})


def evaluate(program: PolicyProgram, extra_facts: Iterable[Atom] = ()) -> frozenset[Atom]:
    """Least fixpoint of ``program`` over its facts plus ``extra_facts`` (semi-naive)."""
    extra = list(extra_facts)
    for f in extra:
        if not f.is_ground():
            raise ValueError(f"extra fact {f} is not ground")
    total = FactStore(program.facts)
    for f in extra:
        total.add(f)
    plans = [_plan(r) for r in program.rules]

    derived: set[Atom] = set()
    for rule, plan in zip(program.rules, plans):
        for theta in _join(plan, total, None, -1):
            derived.add(rule.head.substitute(theta))
    delta = FactStore(f for f in derived if total.add(f))

    while len(delta):
        sigs = delta.signatures()
        new: list[Atom] = []
        for rule, plan in zip(program.rules, plans):
            for pos, lit in enumerate(plan):
                if isinstance(lit, Atom) and lit.signature in sigs:
                    for theta in _join(plan, total, delta, pos):
                        new.append(rule.head.substitute(theta))
        delta = FactStore(f for f in new if total.add(f))
    return total.facts()


def _bindings_key(goal_vars: list[Var], b: Binding) -> tuple:
    return tuple(term_key(b[v]) for v in goal_vars)


def _goal_vars(goal: Atom) -> list[Var]:
    seen: list[Var] = []
    for v in goal.variables():
        if v not in seen:
            seen.append(v)
    return seen


def query_fixpoint(fixpoint: Iterable[Atom], goal: Atom) -> list[Binding]:
    goal_vars = _goal_vars(goal)
    seen: set[tuple] = set()
    out: list[Binding] = []
    for fact in fixpoint:
        theta = match(goal, fact, {})
        if theta is None:
            continue
        b = {v: theta[v] for v in goal_vars}
        key = _bindings_key(goal_vars, b)
        if key not in seen:
            seen.add(key)
            out.append(b)
    out.sort(key=lambda b: _bindings_key(goal_vars, b))
    return out


def query(program: PolicyProgram, extra_facts: Iterable[Atom], goal: Atom) -> list[Binding]:
    """All substitutions for the goal's variables under which it is derivable,
    ordered lexicographically by the bound constants (variables in order of
    first occurrence). A ground derivable goal yields ``[{}]``."""
    return query_fixpoint(evaluate(program, extra_facts), goal)


def _rename_apart(rule: Rule, taken: set[Var]) -> Rule:
    names = {v for a in (rule.head, *rule.atoms) for v in a.variables()}
    if not names & taken:
        return rule
    mapping: dict[Var, Term] = {}
    n = 0
    for v in sorted(names):
        if v in taken:
            while True:
                n += 1
                cand = Var(f"{v.name}_{n}")
                if cand not in names and cand not in taken:
                    break
            mapping[v] = cand
    return Rule(rule.head.substitute(mapping), tuple(l.substitute(mapping) for l in rule.body))


def _abduce_rule(rule: Rule, goal: Atom, fix: FactStore) -> list[frozenset[Atom]]:
    theta0 = unify(rule.head, goal)
    if theta0 is None:
        return []
    atoms = rule.atoms
    constraints = rule.constraints
    found: list[frozenset[Atom]] = []

    def finish(theta: Binding, missing: list[Atom]) -> None:
        resolved = resolve(theta)
        for c in constraints:
            g = c.substitute(resolved)
            # Constraints on variables that only a missing credential would
            # bind are left for the credential holder to satisfy.
            if g.is_ground() and not g.holds():
                return
        if missing:
            found.append(frozenset(a.substitute(resolved) for a in missing))

    def rec(i: int, theta: Binding, missing: list[Atom]) -> None:
        if i == len(atoms):
            finish(theta, missing)
            return
        pattern = atoms[i].substitute(resolve(theta))
        for fact in list(fix.candidates(pattern)):
            ext = match(pattern, fact, theta)
            if ext is not None:
                rec(i + 1, ext, missing)
        if pattern.signature == CREDENTIAL:
            rec(i + 1, theta, missing + [atoms[i]])

    rec(0, theta0, [])
    return found


def unsatisfied_requirements(
    program: PolicyProgram, extra_facts: Iterable[Atom], goal: Atom
) -> list[Atom]:
    """Credential atoms whose addition would make ``goal`` derivable.

    Abduction goes one level deep: only ``credential/3`` literals in the bodies
    of rules whose head unifies with ``goal`` may be assumed. Among all ways of
    satisfying those rules, only the minimal missing sets are kept, and their
    union is returned sorted.
    """
    fixpoint = evaluate(program, extra_facts)
    if query_fixpoint(fixpoint, goal):
        raise GoalAlreadySatisfied(f"{goal} is already derivable")
    fix = FactStore(fixpoint)
    taken = set(goal.variables())
    solutions: list[frozenset[Atom]] = []
    for rule in program.rules:
        solutions.extend(_abduce_rule(_rename_apart(rule, taken), goal, fix))
    unique = set(solutions)
    minimal = [s for s in unique if not any(o < s for o in unique)]
    return sorted_atoms(a for s in minimal for a in s)
