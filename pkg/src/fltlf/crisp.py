"""Crisp LTLf satisfaction over symbolic traces.

Next is strong: X f holds at instant i iff i+1 <= len(trace) and f holds
at i+1, so X f is never satisfied at the last instant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .formulas import (
    Alphabet,
    And,
    Atom,
    FalseF,
    Formula,
    FormulaError,
    Next,
    Not,
    Or,
    TrueF,
    Until,
    desugar,
    is_core,
)


@dataclass(frozen=True)
class SymbolicTrace:
    """Finite, non-empty sequence of atom subsets (one per instant)."""

    instants: tuple[frozenset, ...]

    def __init__(self, instants: Sequence):
        instants = tuple(frozenset(s) for s in instants)
        if len(instants) < 1:
            raise FormulaError("trace must be non-empty")
        object.__setattr__(self, "instants", instants)

    def __len__(self) -> int:
        return len(self.instants)

    def validate(self, alphabet: Alphabet) -> None:
        for i, inst in enumerate(self.instants, start=1):
            for atom in inst:
                if atom not in alphabet:
                    raise FormulaError(
                        f"atom {atom!r} at instant {i} not in alphabet")


def _truth_table(trace: SymbolicTrace, f: Formula) -> list[bool]:
    """Per-instant truth values of a core-form formula (memoized DP)."""
    n = len(trace)
    memo: dict[Formula, list[bool]] = {}

    def table(g: Formula) -> list[bool]:
        cached = memo.get(g)
        if cached is not None:
            return cached
        if isinstance(g, Atom):
            vals = [g.name in inst for inst in trace.instants]
        elif isinstance(g, TrueF):
            vals = [True] * n
        elif isinstance(g, FalseF):
            vals = [False] * n
        elif isinstance(g, Not):
            vals = [not v for v in table(g.arg)]
        elif isinstance(g, And):
            left, right = table(g.left), table(g.right)
            vals = [a and b for a, b in zip(left, right)]
        elif isinstance(g, Or):
            left, right = table(g.left), table(g.right)
            vals = [a or b for a, b in zip(left, right)]
        elif isinstance(g, Next):
            sub = table(g.arg)
            vals = sub[1:] + [False]
        elif isinstance(g, Until):
            left, right = table(g.left), table(g.right)
            vals = [False] * n
            vals[n - 1] = right[n - 1]
            for i in range(n - 2, -1, -1):
                vals[i] = right[i] or (left[i] and vals[i + 1])
        else:
            raise FormulaError(f"non-core node {g!r}; desugar first")
        memo[g] = vals
        return vals

    return table(f)


def satisfies_at(trace: SymbolicTrace, i: int, f: Formula) -> bool:
    """Truth of f at the 1-based instant i."""
    if not 1 <= i <= len(trace):
        raise IndexError(f"instant {i} out of range 1..{len(trace)}")
    if not is_core(f):
        f = desugar(f)
    return _truth_table(trace, f)[i - 1]


def satisfies(trace: SymbolicTrace, f: Formula) -> bool:
    """Truth of f at the first instant of the trace."""
    return satisfies_at(trace, 1, f)


def instant_choices(alphabet: Alphabet, mode: str) -> list[frozenset]:
    """All admissible single-instant atom sets, in deterministic order."""
    atoms = alphabet.atoms
    singles = [frozenset({a}) for a in atoms]
    if mode == "me":
        return singles
    if mode == "nme":
        pairs = [frozenset(p) for p in itertools.combinations(atoms, 2)]
        return singles + pairs
    raise FormulaError(f"unknown mode {mode!r}; use 'me' or 'nme'")


def enumerate_traces(alphabet: Alphabet, min_len: int, max_len: int,
                     mode: str = "me") -> Iterator[SymbolicTrace]:
    """All traces with length in [min_len, max_len], length-lexicographic."""
    if not 1 <= min_len <= max_len:
        raise FormulaError(f"bad length range {min_len}..{max_len}")
    choices = instant_choices(alphabet, mode)
    for n in range(min_len, max_len + 1):
        for combo in itertools.product(choices, repeat=n):
            yield SymbolicTrace(combo)
