"""Fuzzy LTLf evaluation over [0,1]-valued traces (Zadeh min/max/1-x).

Until is evaluated through the recursion
    a U b  =  b | (a & X(a U b))
backward from the last instant; X at the last instant has value 0
(strong next).  On 0/1 traces this collapses to the crisp semantics.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .crisp import SymbolicTrace
from .formulas import (
    Alphabet,
    And,
    Atom,
    FalseF,
    Formula,
    FormulaError,
    Implies,
    Next,
    Not,
    Or,
    TrueF,
    Until,
    desugar,
    is_core,
)


def validate_fuzzy_trace(values: np.ndarray, alphabet: Alphabet) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise FormulaError("fuzzy trace must be a 2-D (instants x atoms) matrix")
    n, width = values.shape
    if n < 1:
        raise FormulaError("fuzzy trace must be non-empty")
    if width != len(alphabet):
        raise FormulaError(
            f"trace has {width} columns, alphabet has {len(alphabet)} atoms")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise FormulaError("fuzzy trace entries must lie in [0, 1]")
    return values


def crisp_to_fuzzy(trace: SymbolicTrace, alphabet: Alphabet) -> np.ndarray:
    """0/1 matrix encoding of a symbolic trace."""
    out = np.zeros((len(trace), len(alphabet)))
    for i, inst in enumerate(trace.instants):
        for atom in inst:
            out[i, alphabet.index(atom)] = 1.0
    return out


def evaluate(trace: np.ndarray, f: Formula, alphabet: Alphabet,
             labels: Sequence[str] = (),
             label_values: Optional[Sequence[float]] = None) -> float:
    """Fuzzy value of f at the first instant of the trace.

    `labels` names extra instant-independent atoms (the task labels) whose
    values come from `label_values`.
    """
    trace = validate_fuzzy_trace(trace, alphabet)
    labels = tuple(labels)
    if labels and label_values is None:
        raise FormulaError("label_values required when labels are declared")
    if not is_core(f):
        f = desugar(f)
    n = trace.shape[0]
    memo: dict[Formula, np.ndarray] = {}

    def table(g: Formula) -> np.ndarray:
        cached = memo.get(g)
        if cached is not None:
            return cached
        if isinstance(g, Atom):
            if g.name in labels:
                vals = np.full(n, float(label_values[labels.index(g.name)]))
            else:
                vals = trace[:, alphabet.index(g.name)].copy()
        elif isinstance(g, TrueF):
            vals = np.ones(n)
        elif isinstance(g, FalseF):
            vals = np.zeros(n)
        elif isinstance(g, Not):
            vals = 1.0 - table(g.arg)
        elif isinstance(g, And):
            vals = np.minimum(table(g.left), table(g.right))
        elif isinstance(g, Or):
            vals = np.maximum(table(g.left), table(g.right))
        elif isinstance(g, Next):
            sub = table(g.arg)
            vals = np.empty(n)
            vals[: n - 1] = sub[1:]
            vals[n - 1] = 0.0
        elif isinstance(g, Until):
            left, right = table(g.left), table(g.right)
            vals = np.empty(n)
            nxt = 0.0
            for i in range(n - 1, -1, -1):
                vals[i] = max(right[i], min(left[i], nxt))
                nxt = vals[i]
        else:
            raise FormulaError(f"non-core node {g!r}; desugar first")
        memo[g] = vals
        return vals

    return float(table(f)[0])


def build_knowledge_formula(phi: Formula, label: str = "y") -> Formula:
    """Biconditional tie between a property and its sequence label.

    Returns the desugared form of (phi -> y) & (!phi -> !y); the positive
    label literal sits directly under its disjunction, which lets the
    refinement pass hand it the residual satisfaction gap.
    """
    if label in atom_names_sorted(phi):
        raise FormulaError(f"label {label!r} collides with a formula atom")
    y = Atom(label)
    return desugar(And(Implies(phi, y), Implies(Not(phi), Not(y))))


def build_multi_knowledge_formula(formulas: Sequence[Formula],
                                  labels: Sequence[str]) -> Formula:
    """Conjunction of per-label implications (phi_k -> y_k), desugared."""
    if len(formulas) != len(labels) or not formulas:
        raise FormulaError("need one label per formula")
    parts = [Implies(phi, Atom(lbl)) for phi, lbl in zip(formulas, labels)]
    out: Formula = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return desugar(out)


def atom_names_sorted(f: Formula) -> tuple[str, ...]:
    from .formulas import atoms_of

    return tuple(sorted(atoms_of(f)))
