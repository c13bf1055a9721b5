"""LTLf formulas over finite alphabets: AST, parser, printer, desugaring.

The concrete syntax accepts `G F X U R ! & | -> true false` plus the
`[]` / `<>` aliases for `G` / `F`.  Precedence, from tightest to loosest:
unary (! X G F) > U/R > & > | > ->, with U, R and -> right-associative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

ATOM_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")

_KEYWORDS = {"G", "F", "X", "U", "R", "true", "false"}


class FormulaError(Exception):
    """Malformed formula, alphabet, or pattern instantiation."""


class ParseError(FormulaError):
    def __init__(self, message: str, position: int, expected: Sequence[str] = ()):
        self.position = position
        self.expected = tuple(expected)
        suffix = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"at position {position}: {message}{suffix}")


@dataclass(frozen=True)
class Alphabet:
    """Ordered, distinct atom names; ordering fixes trace matrix columns."""

    atoms: tuple[str, ...]

    def __init__(self, atoms: Sequence[str]):
        atoms = tuple(atoms)
        if len(atoms) < 1:
            raise FormulaError("alphabet must contain at least one atom")
        seen = set()
        for name in atoms:
            if not ATOM_RE.fullmatch(name):
                raise FormulaError(f"invalid atom name {name!r}")
            if name in seen:
                raise FormulaError(f"duplicate atom name {name!r}")
            seen.add(name)
        object.__setattr__(self, "atoms", atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise FormulaError(f"unknown atom {name!r}") from None

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {a: i for i, a in enumerate(self.atoms)}
            self.__dict__["_index_cache"] = idx
        return idx


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


TRUE = TrueF()
FALSE = FalseF()

_UNARY = (Not, Next, Globally, Eventually)
_BINARY = (And, Or, Implies, Until, Release)


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, _UNARY):
        return atoms_of(f.arg)
    if isinstance(f, _BINARY):
        return atoms_of(f.left) | atoms_of(f.right)
    return set()


# --- Parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lpar>\()|(?P<rpar>\))|(?P<implies>->)|(?P<and>&)|(?P<or>\|)"
    r"|(?P<not>!)|(?P<galias>\[\])|(?P<falias><>)|(?P<word>[a-zA-Z_][a-zA-Z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}",
                             len(text) - len(stripped))
        kind = m.lastgroup
        value = m.group(kind)
        start = m.end() - len(value)
        if kind == "word" and value in ("G", "F", "X", "U", "R", "true", "false"):
            kind = value
        elif kind == "galias":
            kind, value = "G", "G"
        elif kind == "falias":
            kind, value = "F", "F"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, alphabet: Alphabet, labels: tuple[str, ...]):
        self.tokens = tokens
        self.i = 0
        self.alphabet = alphabet
        self.labels = labels

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            raise ParseError(f"unexpected token {tok[1] or 'end of input'!r}",
                             tok[2], [kind])
        return tok

    # implies (lowest, right-assoc)
    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek()[0] == "implies":
            self.take()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.peek()[0] == "or":
            self.take()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_temporal()
        while self.peek()[0] == "and":
            self.take()
            f = And(f, self.parse_temporal())
        return f

    # U / R (right-assoc)
    def parse_temporal(self) -> Formula:
        left = self.parse_unary()
        kind = self.peek()[0]
        if kind == "U":
            self.take()
            return Until(left, self.parse_temporal())
        if kind == "R":
            self.take()
            return Release(left, self.parse_temporal())
        return left

    def parse_unary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "not":
            self.take()
            return Not(self.parse_unary())
        if kind == "X":
            self.take()
            return Next(self.parse_unary())
        if kind == "G":
            self.take()
            return Globally(self.parse_unary())
        if kind == "F":
            self.take()
            return Eventually(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        kind, value, pos = self.take()
        if kind == "lpar":
            f = self.parse_implies()
            self.expect("rpar")
            return f
        if kind == "true":
            return TRUE
        if kind == "false":
            return FALSE
        if kind == "word":
            if value in self.alphabet or value in self.labels:
                return Atom(value)
            raise FormulaError(f"unknown atom {value!r} at position {pos}")
        raise ParseError(f"unexpected token {value or 'end of input'!r}", pos,
                         ["atom", "(", "!", "X", "G", "F", "true", "false"])


def parse_formula(text: str, alphabet: Alphabet,
                  labels: Optional[Sequence[str]] = None) -> Formula:
    """Parse `text` into an AST; atoms must come from `alphabet` or `labels`."""
    if not text or not text.strip():
        raise ParseError("empty formula", 0)
    parser = _Parser(_tokenize(text), alphabet, tuple(labels or ()))
    f = parser.parse_implies()
    kind, value, pos = parser.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {value!r}", pos)
    return f


# --- Printing --------------------------------------------------------------

def _wrap(f: Formula) -> str:
    text = format_formula(f)
    if isinstance(f, _BINARY):
        return f"({text})"
    return text


def format_formula(f: Formula) -> str:
    """Deterministic text form; `parse_formula(format_formula(f))` equals f."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Not):
        return f"!({format_formula(f.arg)})"
    if isinstance(f, Next):
        return f"X({format_formula(f.arg)})"
    if isinstance(f, Globally):
        return f"G({format_formula(f.arg)})"
    if isinstance(f, Eventually):
        return f"F({format_formula(f.arg)})"
    if isinstance(f, And):
        return f"{_wrap(f.left)} & {_wrap(f.right)}"
    if isinstance(f, Or):
        return f"{_wrap(f.left)} | {_wrap(f.right)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.left)} -> {_wrap(f.right)}"
    if isinstance(f, Until):
        return f"{_wrap(f.left)} U {_wrap(f.right)}"
    if isinstance(f, Release):
        return f"{_wrap(f.left)} R {_wrap(f.right)}"
    raise FormulaError(f"unknown node {f!r}")


# --- Desugaring ------------------------------------------------------------

def _neg(f: Formula) -> Formula:
    # double negations are dropped; semantics unchanged under min/max/1-x
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def desugar(f: Formula) -> Formula:
    """Rewrite to the core {Atom, true, false, !, &, |, X, U} fragment.

    a -> b becomes !a | b (material implication); a R b becomes
    !(!a U !b); G a becomes !(true U !a); F a becomes true U a.
    """
    if isinstance(f, (Atom, TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        return _neg(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Implies):
        return Or(_neg(desugar(f.left)), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Release):
        return _neg(Until(_neg(desugar(f.left)), _neg(desugar(f.right))))
    if isinstance(f, Globally):
        return _neg(Until(TRUE, _neg(desugar(f.arg))))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.arg))
    raise FormulaError(f"unknown node {f!r}")


CORE_NODES = (Atom, TrueF, FalseF, Not, And, Or, Next, Until)


def is_core(f: Formula) -> bool:
    if not isinstance(f, CORE_NODES):
        return False
    if isinstance(f, _UNARY):
        return is_core(f.arg)
    if isinstance(f, _BINARY):
        return is_core(f.left) and is_core(f.right)
    return True
