"""Formulas of LTL extended with the bundle modality R.

Core connectives are atoms, negation, conjunction, next, until and R
("for all related plays").  Everything else (true, false, ->, |, F, G, W,
<R>) is parser sugar expanded into the core.  ASTs are immutable and
compared structurally, so they can be used as dict keys and deduplicated
by value.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import FormulaParseError, NameCollisionError

__all__ = [
    "Formula", "Atom", "Not", "And", "Next", "Until", "R",
    "parse", "format_formula", "atoms", "subformulas", "r_depth",
    "depth1_r_subformulas", "substitute", "true_formula", "false_formula",
]

# Reserved atom used by the tautology that `true` expands to; its truth
# value never matters.
TRUE_ATOM = "@true"


class Formula:
    """Base class for AST nodes."""

    __slots__ = ()

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Next(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class R(Formula):
    sub: Formula


def false_formula() -> Formula:
    return And(Atom(TRUE_ATOM), Not(Atom(TRUE_ATOM)))


def true_formula() -> Formula:
    return Not(false_formula())


def _or(f: Formula, g: Formula) -> Formula:
    return Not(And(Not(f), Not(g)))


def _implies(f: Formula, g: Formula) -> Formula:
    return Not(And(f, Not(g)))


def _finally(f: Formula) -> Formula:
    return Until(true_formula(), f)


def _globally(f: Formula) -> Formula:
    return Not(_finally(Not(f)))


def _weak_until(f: Formula, g: Formula) -> Formula:
    return _or(Until(f, g), _globally(f))


def _r_diamond(f: Formula) -> Formula:
    return Not(R(Not(f)))


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lbrak>\[R\])|(?P<dia><R>)|(?P<arrow>->)|"
    r"(?P<sym>[()!&|])|(?P<ident>[A-Za-z_@][A-Za-z0-9_@#]*))"
)

_KEYWORDS = {"X", "U", "W", "F", "G", "true", "false"}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaParseError(f"unknown token {text[pos]!r}", pos)
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            raise FormulaParseError(f"expected {value!r}, found {val!r}", pos)

    # grammar: f ::= f_impl (('U'|'W') f)?     with U/W right associative
    def parse_formula(self) -> Formula:
        left = self.parse_implies()
        kind, val, _ = self.peek()
        if kind == "ident" and val in ("U", "W"):
            self.next()
            right = self.parse_formula()
            return Until(left, right) if val == "U" else _weak_until(left, right)
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        kind, val, _ = self.peek()
        if kind == "arrow":
            self.next()
            return _implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        out = self.parse_and()
        while self.peek()[1] == "|":
            self.next()
            out = _or(out, self.parse_and())
        return out

    def parse_and(self) -> Formula:
        out = self.parse_unary()
        while self.peek()[1] == "&":
            self.next()
            out = And(out, self.parse_unary())
        return out

    def parse_unary(self) -> Formula:
        kind, val, pos = self.next()
        if kind == "sym" and val == "!":
            return Not(self.parse_unary())
        if kind == "lbrak":
            return R(self.parse_unary())
        if kind == "dia":
            return _r_diamond(self.parse_unary())
        if kind == "ident" and val == "X":
            return Next(self.parse_unary())
        if kind == "ident" and val == "F":
            return _finally(self.parse_unary())
        if kind == "ident" and val == "G":
            return _globally(self.parse_unary())
        if kind == "ident" and val == "true":
            return true_formula()
        if kind == "ident" and val == "false":
            return false_formula()
        if kind == "ident" and val not in _KEYWORDS:
            return Atom(val)
        if kind == "sym" and val == "(":
            inner = self.parse_formula()
            self.expect(")")
            return inner
        raise FormulaParseError(f"unexpected token {val!r}", pos)


def parse(text: str) -> Formula:
    """Parse formula text into a core AST, expanding all sugar."""
    parser = _Parser(text)
    out = parser.parse_formula()
    kind, val, pos = parser.peek()
    if kind != "end":
        raise FormulaParseError(f"trailing input {val!r}", pos)
    return out


# ---------------------------------------------------------------------------
# Printing (core connectives only; parse(format_formula(f)) == f)

def format_formula(f: Formula) -> str:
    def fmt(g: Formula, parent: str) -> str:
        if isinstance(g, Atom):
            return g.name
        if isinstance(g, Not):
            return "!" + fmt(g.sub, "unary")
        if isinstance(g, Next):
            return "X " + fmt(g.sub, "unary")
        if isinstance(g, R):
            return "[R] " + fmt(g.sub, "unary")
        if isinstance(g, And):
            body = fmt(g.left, "and-left") + " & " + fmt(g.right, "and-right")
            return body if parent in ("root", "and-left") else "(" + body + ")"
        if isinstance(g, Until):
            body = fmt(g.left, "until-arg") + " U " + fmt(g.right, "root")
            return body if parent == "root" else "(" + body + ")"
        raise TypeError(f"not a formula node: {g!r}")

    # "until-arg"/"unary" positions require tighter-binding operands, which
    # fmt enforces by parenthesizing And/Until there.
    return fmt(f, "root")


# ---------------------------------------------------------------------------
# Structure

def subformulas(f: Formula) -> list[Formula]:
    """All subformulas including f itself, first-occurrence order, deduplicated."""
    seen: dict[Formula, None] = {}

    def walk(g: Formula):
        if g in seen:
            return
        seen[g] = None
        if isinstance(g, (Not, Next, R)):
            walk(g.sub)
        elif isinstance(g, (And, Until)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return list(seen)


def atoms(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def r_depth(f: Formula) -> int:
    """Maximum nesting of R modalities; 0 means plain LTL."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, (Not, Next)):
        return r_depth(f.sub)
    if isinstance(f, (And, Until)):
        return max(r_depth(f.left), r_depth(f.right))
    if isinstance(f, R):
        return 1 + r_depth(f.sub)
    raise TypeError(f"not a formula node: {f!r}")


def depth1_r_subformulas(f: Formula) -> list[Formula]:
    """Subformulas of shape [R] psi with LTL psi, first-occurrence order."""
    return [g for g in subformulas(f)
            if isinstance(g, R) and r_depth(g.sub) == 0]


def substitute(f: Formula, target: Formula, atom: str) -> Formula:
    """Replace every structural occurrence of target in f by Atom(atom).

    The replacement name must not already occur in f.
    """
    if atom in atoms(f):
        raise NameCollisionError(
            f"name collision: proposition {atom!r} already occurs in the formula")
    replacement = Atom(atom)

    def walk(g: Formula) -> Formula:
        if g == target:
            return replacement
        if isinstance(g, Not):
            return Not(walk(g.sub))
        if isinstance(g, Next):
            return Next(walk(g.sub))
        if isinstance(g, R):
            return R(walk(g.sub))
        if isinstance(g, And):
            return And(walk(g.left), walk(g.right))
        if isinstance(g, Until):
            return Until(walk(g.left), walk(g.right))
        return g

    return walk(f)


def fresh_atom_name(index: int, body: Formula, used: set[str]) -> str:
    """Deterministic fresh proposition name for an eliminated [R] subformula."""
    digest = hashlib.sha256(format_formula(body).encode()).hexdigest()[:8]
    name = f"@R{index}#{digest}"
    salt = 0
    while name in used:
        salt += 1
        name = f"@R{index}#{digest}#{salt}"
    return name
