"""Independent reference implementations the engine is checked against.

Nothing here imports the engine: programs are plain tuples, evaluation is the
textbook naive fixpoint over the active domain, and abduction is brute force
over subsets of candidate credential atoms.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

# A term is ("var", name) or ("int", n) / ("sym", s) / ("str", s).
# An atom is (pred, (term, ...)); a constraint is ("cmp", op, lhs, rhs).


@dataclass(frozen=True)
class NaiveRule:
    head: tuple
    body: tuple


@dataclass(frozen=True)
class NaiveProgram:
    rules: tuple
    facts: tuple


def is_var(t) -> bool:
    return t[0] == "var"


def _vars(rule: NaiveRule) -> list[str]:
    seen: list[str] = []
    lits = [rule.head] + list(rule.body)
    for lit in lits:
        terms = lit[2:] if lit[0] == "cmp" else lit[1]
        for t in terms:
            if is_var(t) and t[1] not in seen:
                seen.append(t[1])
    return seen


def _sub(t, env):
    return env[t[1]] if is_var(t) else t


def _cmp(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if a[0] != b[0]:
        return False
    x, y = a[1], b[1]
    if a[0] in ("sym", "str"):
        x, y = x.encode("utf-8"), y.encode("utf-8")
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def naive_fixpoint(program: NaiveProgram, extra=()) -> set:
    """Apply every rule under every assignment over the active domain until nothing changes."""
    facts = set(program.facts) | set(extra)
    domain = set()
    for f in facts:
        domain.update(f[1])
    for r in program.rules:
        for lit in (r.head, *r.body):
            terms = lit[2:] if lit[0] == "cmp" else lit[1]
            domain.update(t for t in terms if not is_var(t))
    domain = sorted(domain)
    changed = True
    while changed:
        changed = False
        for r in program.rules:
            names = _vars(r)
            for values in itertools.product(domain, repeat=len(names)):
                env = dict(zip(names, values))
                ok = True
                for lit in r.body:
                    if lit[0] == "cmp":
                        if not _cmp(lit[1], _sub(lit[2], env), _sub(lit[3], env)):
                            ok = False
                            break
                    elif (lit[0], tuple(_sub(t, env) for t in lit[1])) not in facts:
                        ok = False
                        break
                if ok:
                    head = (r.head[0], tuple(_sub(t, env) for t in r.head[1]))
                    if head not in facts:
                        facts.add(head)
                        changed = True
    return facts


def naive_holds(program: NaiveProgram, goal, extra=()) -> bool:
    return goal in naive_fixpoint(program, extra)


def brute_force_requirements(program: NaiveProgram, goal, candidates, max_size: int = 2) -> set:
    """Union of the minimal subsets of ``candidates`` whose addition derives ``goal``."""
    cands = sorted(set(candidates))
    winners: list[frozenset] = []
    for k in range(1, max_size + 1):
        for combo in itertools.combinations(cands, k):
            s = frozenset(combo)
            if any(w <= s for w in winners):
                continue
            if naive_holds(program, goal, s):
                winners.append(s)
    return set().union(*winners) if winners else set()


# Random program generation, shared by the equivalence tests.

PREDICATES = ("p", "q", "r", "s", "t", "u")
OPS = ("=", "!=", "<", "<=", ">", ">=")


def random_constant_pool(rng: random.Random, size: int) -> list:
    pool = [("int", 1), ("int", 2), ("int", 3), ("sym", "a"), ("sym", "b"), ("str", "x y")]
    rng.shuffle(pool)
    return pool[:size]


def random_program(rng: random.Random, *, max_rules: int = 10, max_consts: int = 5, max_arity: int = 3):
    """A random safe program plus the arity table it uses."""
    consts = random_constant_pool(rng, rng.randint(1, max_consts))
    preds = {p: rng.randint(1, max_arity) for p in rng.sample(PREDICATES, rng.randint(2, len(PREDICATES)))}
    names = sorted(preds)
    var_names = ["X", "Y", "Z", "W"]

    def rand_atom(allow_vars: bool):
        p = rng.choice(names)
        args = []
        for _ in range(preds[p]):
            if allow_vars and rng.random() < 0.6:
                args.append(("var", rng.choice(var_names)))
            else:
                args.append(rng.choice(consts))
        return (p, tuple(args))

    facts = {rand_atom(False) for _ in range(rng.randint(0, 8))}
    rules = []
    for _ in range(rng.randint(0, max_rules)):
        body = [rand_atom(True) for _ in range(rng.randint(1, 3))]
        bound = sorted({t[1] for a in body for t in a[1] if is_var(t)})
        if bound and rng.random() < 0.4:
            lhs = ("var", rng.choice(bound))
            rhs = ("var", rng.choice(bound)) if rng.random() < 0.4 else rng.choice(consts)
            body.append(("cmp", rng.choice(OPS), lhs, rhs))
        hp = rng.choice(names)
        head_args = []
        for _ in range(preds[hp]):
            if bound and rng.random() < 0.7:
                head_args.append(("var", rng.choice(bound)))
            else:
                head_args.append(rng.choice(consts))
        rules.append(NaiveRule((hp, tuple(head_args)), tuple(body)))
    return NaiveProgram(tuple(rules), tuple(sorted(facts))), preds, consts


def term_text(t) -> str:
    kind, v = t
    if kind == "var" or kind == "sym":
        return v
    if kind == "int":
        return str(v)
    return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'


def atom_text(a) -> str:
    return f"{a[0]}({', '.join(term_text(t) for t in a[1])})"


def program_text(program: NaiveProgram) -> str:
    """Render as policy source so the engine sees it through its own parser."""
    lines = [atom_text(f) + "." for f in program.facts]
    for r in program.rules:
        parts = []
        for lit in r.body:
            if lit[0] == "cmp":
                parts.append(f"{term_text(lit[2])} {lit[1]} {term_text(lit[3])}")
            else:
                parts.append(atom_text(lit))
        lines.append(f"{atom_text(r.head)} :- {', '.join(parts)}.")
    return "\n".join(lines) + "\n"
