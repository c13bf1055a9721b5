"""DECLARE constraint templates and the conjunction-of-patterns sampler."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .formulas import (
    TRUE,
    Alphabet,
    And,
    Atom,
    Eventually,
    Formula,
    FormulaError,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    Until,
)


@dataclass(frozen=True)
class PatternInstance:
    template: str
    atoms: tuple[str, ...]

    def __init__(self, template: str, atoms: Sequence[str]):
        object.__setattr__(self, "template", template)
        object.__setattr__(self, "atoms", tuple(atoms))


def _at_most_once(a: Formula) -> Formula:
    # a holds, then never again strictly later
    return Not(Eventually(And(a, Next(Eventually(a)))))


def _precedence(a: Formula, b: Formula) -> Formula:
    return Or(Until(Not(b), a), Globally(Not(b)))


_TEMPLATES = {
    "existence": (1, lambda a: Eventually(a)),
    "absence": (1, lambda a: Globally(Not(a))),
    "absence2": (1, _at_most_once),
    "exactly1": (1, lambda a: And(Eventually(a), _at_most_once(a))),
    "init": (1, lambda a: a),
    "end": (1, lambda a: Eventually(And(a, Not(Next(TRUE))))),
    "responded_existence": (2, lambda a, b: Implies(Eventually(a), Eventually(b))),
    "co_existence": (2, lambda a, b: And(Implies(Eventually(a), Eventually(b)),
                                         Implies(Eventually(b), Eventually(a)))),
    "not_co_existence": (2, lambda a, b: Not(And(Eventually(a), Eventually(b)))),
    "response": (2, lambda a, b: Globally(Implies(a, Eventually(b)))),
    "precedence": (2, _precedence),
    "succession": (2, lambda a, b: And(Globally(Implies(a, Eventually(b))),
                                       _precedence(a, b))),
    "not_succession": (2, lambda a, b: Globally(Implies(a, Not(Eventually(b))))),
    "alternate_response": (2, lambda a, b: Globally(Implies(a, Next(Until(Not(a), b))))),
    "alternate_precedence": (2, lambda a, b: And(
        _precedence(a, b),
        Globally(Implies(b, Next(_precedence(a, b)))))),
    "chain_response": (2, lambda a, b: Globally(Implies(a, Next(b)))),
    "chain_precedence": (2, lambda a, b: Globally(Implies(Next(b), a))),
    "not_chain_succession": (2, lambda a, b: Globally(Implies(a, Not(Next(b))))),
    "choice": (2, lambda a, b: Or(Eventually(a), Eventually(b))),
    "exclusive_choice": (2, lambda a, b: And(
        Or(Eventually(a), Eventually(b)),
        Not(And(Eventually(a), Eventually(b))))),
}

TEMPLATE_NAMES = tuple(sorted(_TEMPLATES))
BINARY_TEMPLATE_NAMES = tuple(n for n in TEMPLATE_NAMES if _TEMPLATES[n][0] == 2)


def template_arity(name: str) -> int:
    try:
        return _TEMPLATES[name][0]
    except KeyError:
        raise FormulaError(f"unknown DECLARE template {name!r}") from None


def declare_pattern(instance: PatternInstance) -> Formula:
    """Instantiate a DECLARE template over its bound atoms."""
    arity, builder = _TEMPLATES.get(instance.template, (None, None))
    if builder is None:
        raise FormulaError(f"unknown DECLARE template {instance.template!r}")
    if len(instance.atoms) != arity:
        raise FormulaError(
            f"template {instance.template!r} takes {arity} atom(s), "
            f"got {len(instance.atoms)}")
    return builder(*(Atom(a) for a in instance.atoms))


def sample_conjunction_formula(alphabet: Alphabet, seed: int) -> Formula:
    """Sample a formula over the whole alphabet as a chain of 2-atom patterns.

    For k atoms the result is the conjunction of k-1 binary patterns over
    the overlapping pairs (p1,p2), (p2,p3), ...; a single pattern for k=2.
    Deterministic in `seed`.
    """
    atoms = alphabet.atoms
    if len(atoms) < 2:
        raise FormulaError("need at least 2 atoms to sample a formula")
    rng = random.Random(seed)
    parts = []
    for left, right in zip(atoms, atoms[1:]):
        name = rng.choice(BINARY_TEMPLATE_NAMES)
        parts.append(declare_pattern(PatternInstance(name, (left, right))))
    f = parts[0]
    for part in parts[1:]:
        f = And(f, part)
    return f
