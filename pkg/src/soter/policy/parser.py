"""Tokenizer and recursive-descent parser for ``.meddl`` policy source."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from soter.policy.errors import PolicySyntaxError, UnsafeRule
from soter.policy.terms import (
    INT64_MAX,
    INT64_MIN,
    OPS,
    Atom,
    Constraint,
    Int,
    Literal,
    PolicyProgram,
    Rule,
    Str,
    Sym,
    Term,
    Var,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<neck>:-)
  | (?P<op><=|>=|!=|<|>|=)
  | (?P<int>-?[0-9]+)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[(),.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unescape(raw: str, tok: Token) -> str:
    out = []
    i = 1
    while i < len(raw) - 1:
        ch = raw[i]
        if ch == "\\":
            nxt = raw[i + 1]
            if nxt not in ('"', "\\"):
                raise PolicySyntaxError(f"unknown escape \\{nxt}", tok.line, tok.column + i)
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    value = "".join(out)
    if "\x00" in value:
        raise PolicySyntaxError("NUL inside string literal", tok.line, tok.column)
    return value


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected: str) -> PolicySyntaxError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return PolicySyntaxError(f"unexpected {found}", t.line, t.column, expected)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            raise self.fail(repr(text) if text else kind)
        return self.advance()

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Var(t.text)
        if t.kind == "ident":
            self.advance()
            return Sym(t.text)
        if t.kind == "int":
            value = int(t.text)
            if not INT64_MIN <= value <= INT64_MAX:
                raise PolicySyntaxError("integer outside signed 64-bit range", t.line, t.column)
            self.advance()
            return Int(value)
        if t.kind == "string":
            self.advance()
            return Str(_unescape(t.text, t))
        raise self.fail("term")

    def atom(self) -> Atom:
        name = self.expect("ident").text
        self.expect("punct", "(")
        args = [self.term()]
        while self.tok.kind == "punct" and self.tok.text == ",":
            self.advance()
            args.append(self.term())
        self.expect("punct", ")")
        return Atom(name, tuple(args))

    def literal(self) -> Literal:
        # An identifier followed by "(" starts an atom; everything else is a constraint.
        nxt = self.tokens[self.i + 1] if self.i + 1 < len(self.tokens) else self.tok
        if self.tok.kind == "ident" and nxt.kind == "punct" and nxt.text == "(":
            return self.atom()
        lhs = self.term()
        if self.tok.kind != "op":
            raise self.fail("comparison operator")
        op = self.advance().text
        assert op in OPS
        return Constraint(lhs, op, self.term())

    def program(self, guards: Guards) -> PolicyProgram:
        rules: list[Rule] = []
        facts: list[Atom] = []
        index = 0
        while self.tok.kind != "eof":
            head = self.atom()
            body: list[Literal] = []
            if self.tok.kind == "neck":
                self.advance()
                body.append(self.literal())
                while self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    body.append(self.literal())
            self.expect("punct", ".")
            body += _guard_atoms(head, body, guards)
            if body:
                rule = Rule(head, tuple(body))
                bad = rule.unsafe_variable()
                if bad is not None:
                    raise UnsafeRule(index, bad.name)
                rules.append(rule)
            else:
                for v in head.variables():
                    raise UnsafeRule(index, v.name)
                facts.append(head)
            index += 1
        return PolicyProgram(tuple(rules), tuple(facts))


Guards = Mapping[tuple[str, int], tuple[Optional[str], ...]]


def _guard_atoms(head: Atom, body: list[Literal], guards: Guards) -> list[Atom]:
    """Domain atoms for head variables that ``guards`` lets the body leave unbound."""
    spec = guards.get(head.signature)
    if not spec:
        return []
    bound = {v for lit in body if isinstance(lit, Atom) for v in lit.variables()}
    out = []
    for arg, pred in zip(head.args, spec):
        if pred is not None and isinstance(arg, Var) and arg not in bound:
            out.append(Atom(pred, (arg,)))
            bound.add(arg)
    return out


def parse_program(text: str, guards: Optional[Guards] = None) -> PolicyProgram:
    """Parse policy source into a program, rejecting unsafe rules.

    ``UnsafeRule.rule_index`` counts statements (facts and rules) from zero.

    ``guards`` maps a head signature to one domain predicate (or None) per
    argument. A head variable at a guarded position that the body does not
    bind gets an implicit ``pred(Var)`` body atom, so ``release(1, R).`` reads
    as ``release(1, R) :- requester(R).``
    """
    return _Parser(tokenize(text)).program(guards or {})


def parse_atom(text: str) -> Atom:
    p = _Parser(tokenize(text))
    a = p.atom()
    if p.tok.kind == "punct" and p.tok.text == ".":
        p.advance()
    p.expect("eof")
    return a
