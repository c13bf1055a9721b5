import itertools

import pytest

from fltlf import Alphabet, parse_formula
from fltlf.crisp import (
    SymbolicTrace,
    enumerate_traces,
    instant_choices,
    satisfies,
    satisfies_at,
)
from fltlf.formulas import (
    And,
    Atom,
    Eventually,
    FalseF,
    FormulaError,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
)
from fltlf.patterns import TEMPLATE_NAMES, PatternInstance, declare_pattern, template_arity

AB = Alphabet(["a", "b"])


def reference_satisfies(trace, i, f):
    """Independent doubly-recursive LTLf evaluator (1-based instants)."""
    n = len(trace)
    if isinstance(f, Atom):
        return f.name in trace.instants[i - 1]
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Not):
        return not reference_satisfies(trace, i, f.arg)
    if isinstance(f, And):
        return reference_satisfies(trace, i, f.left) and \
            reference_satisfies(trace, i, f.right)
    if isinstance(f, Or):
        return reference_satisfies(trace, i, f.left) or \
            reference_satisfies(trace, i, f.right)
    if isinstance(f, Implies):
        return (not reference_satisfies(trace, i, f.left)) or \
            reference_satisfies(trace, i, f.right)
    if isinstance(f, Next):
        return i < n and reference_satisfies(trace, i + 1, f.arg)
    if isinstance(f, Until):
        return any(
            reference_satisfies(trace, j, f.right)
            and all(reference_satisfies(trace, k, f.left) for k in range(i, j))
            for j in range(i, n + 1))
    if isinstance(f, Release):
        return not reference_satisfies(
            trace, i, Until(Not(f.left), Not(f.right)))
    if isinstance(f, Globally):
        return all(reference_satisfies(trace, j, f.arg)
                   for j in range(i, n + 1))
    if isinstance(f, Eventually):
        return any(reference_satisfies(trace, j, f.arg)
                   for j in range(i, n + 1))
    raise AssertionError(f)


FORMULAS = [
    "a", "!a", "a & b", "a | b", "a -> b", "X a", "X X b",
    "a U b", "b U a", "G a", "F b", "G(a -> F b)", "a R b",
    "F(a & X b)", "G(a -> X b)", "(!b U a) | G !b", "a U (b U a)",
    "!(F a & F b)", "X a U b",
]


class TestSymbolicTrace:
    def test_rejects_empty(self):
        with pytest.raises(FormulaError):
            SymbolicTrace([])

    def test_length_and_instants(self):
        t = SymbolicTrace([{"a"}, {"a", "b"}])
        assert len(t) == 2
        assert t.instants[1] == frozenset({"a", "b"})

    def test_validate_flags_foreign_atoms(self):
        t = SymbolicTrace([{"zz"}])
        with pytest.raises(FormulaError):
            t.validate(AB)

    def test_out_of_range_instant(self):
        t = SymbolicTrace([{"a"}])
        with pytest.raises(IndexError):
            satisfies_at(t, 2, Atom("a"))
        with pytest.raises(IndexError):
            satisfies_at(t, 0, Atom("a"))


class TestAgainstReference:
    @pytest.mark.parametrize("text", FORMULAS)
    def test_all_nme_traces_len_1_to_3(self, text):
        f = parse_formula(text, AB)
        for trace in enumerate_traces(AB, 1, 3, "nme"):
            for i in range(1, len(trace) + 1):
                assert satisfies_at(trace, i, f) == \
                    reference_satisfies(trace, i, f), (text, trace.instants, i)

    @pytest.mark.parametrize("name", TEMPLATE_NAMES)
    def test_declare_templates_match_reference(self, name):
        atoms = ("a", "b")[: template_arity(name)]
        f = declare_pattern(PatternInstance(name, atoms))
        for trace in enumerate_traces(AB, 1, 4, "me"):
            assert satisfies(trace, f) == reference_satisfies(trace, 1, f)


class TestSemantics:
    def test_strong_next_false_at_last_instant(self):
        t = SymbolicTrace([{"a"}])
        assert not satisfies(t, Next(TrueF()))

    def test_globally_is_not_eventually_not(self):
        f = parse_formula("G a", AB)
        g = parse_formula("!(F !a)", AB)
        for trace in enumerate_traces(AB, 1, 4, "nme"):
            assert satisfies(trace, f) == satisfies(trace, g)

    def test_eventually_monotone_under_extension(self):
        f = parse_formula("F b", AB)
        for trace in enumerate_traces(AB, 1, 3, "me"):
            if satisfies(trace, f):
                longer = SymbolicTrace(list(trace.instants) + [frozenset({"a"})])
                assert satisfies(longer, f)

    def test_until_requires_eventual_right(self):
        t = SymbolicTrace([{"a"}, {"a"}, {"a"}])
        assert not satisfies(t, parse_formula("a U b", AB))
        t2 = SymbolicTrace([{"a"}, {"a"}, {"b"}])
        assert satisfies(t2, parse_formula("a U b", AB))


class TestEnumeration:
    def test_me_counts(self):
        assert sum(1 for _ in enumerate_traces(AB, 1, 4, "me")) == 30

    def test_nme_counts(self):
        assert sum(1 for _ in enumerate_traces(AB, 1, 4, "nme")) == 120

    def test_me_choices_are_singletons(self):
        assert instant_choices(AB, "me") == \
            [frozenset({"a"}), frozenset({"b"})]

    def test_nme_choices_include_pairs(self):
        choices = instant_choices(AB, "nme")
        assert frozenset({"a", "b"}) in choices and len(choices) == 3

    def test_three_atom_nme_choices(self):
        ab3 = Alphabet(["a", "b", "c"])
        assert len(instant_choices(ab3, "nme")) == 6

    def test_unknown_mode(self):
        with pytest.raises(FormulaError):
            instant_choices(AB, "bogus")

    def test_bad_length_range(self):
        with pytest.raises(FormulaError):
            list(enumerate_traces(AB, 3, 2))

    def test_deterministic_order(self):
        a = [t.instants for t in enumerate_traces(AB, 1, 3, "me")]
        b = [t.instants for t in enumerate_traces(AB, 1, 3, "me")]
        assert a == b
        assert a == sorted(a, key=len)
