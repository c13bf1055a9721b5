import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fltlf import (
    Alphabet,
    And,
    Atom,
    Eventually,
    FormulaError,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    ParseError,
    Release,
    Until,
    desugar,
    format_formula,
    parse_formula,
)
from fltlf.crisp import enumerate_traces, satisfies
from fltlf.formulas import FALSE, TRUE, atoms_of, is_core
from fltlf.patterns import (
    TEMPLATE_NAMES,
    PatternInstance,
    declare_pattern,
    sample_conjunction_formula,
    template_arity,
)

AB = Alphabet(["a", "b", "c"])


class TestAlphabet:
    def test_ordering_fixes_indices(self):
        ab = Alphabet(["z", "a"])
        assert ab.index("z") == 0 and ab.index("a") == 1

    def test_rejects_duplicates(self):
        with pytest.raises(FormulaError):
            Alphabet(["a", "a"])

    def test_rejects_empty(self):
        with pytest.raises(FormulaError):
            Alphabet([])

    def test_rejects_bad_name(self):
        with pytest.raises(FormulaError):
            Alphabet(["1bad"])

    def test_unknown_atom(self):
        with pytest.raises(FormulaError):
            AB.index("zz")


class TestParser:
    @pytest.mark.parametrize("text,expected", [
        ("a", Atom("a")),
        ("!a", Not(Atom("a"))),
        ("a & b", And(Atom("a"), Atom("b"))),
        ("a | b & c", Or(Atom("a"), And(Atom("b"), Atom("c")))),
        ("a -> b -> c", Implies(Atom("a"), Implies(Atom("b"), Atom("c")))),
        ("a U b | c", Or(Until(Atom("a"), Atom("b")), Atom("c"))),
        ("a U b U c", Until(Atom("a"), Until(Atom("b"), Atom("c")))),
        ("X a U b", Until(Next(Atom("a")), Atom("b"))),
        ("G(a -> F b)", Globally(Implies(Atom("a"), Eventually(Atom("b"))))),
        ("[] a", Globally(Atom("a"))),
        ("<> a", Eventually(Atom("a"))),
        ("a R b", Release(Atom("a"), Atom("b"))),
        ("true & false", And(TRUE, FALSE)),
        ("!!a", Not(Not(Atom("a")))),
    ])
    def test_precedence_and_operators(self, text, expected):
        assert parse_formula(text, AB) == expected

    def test_unary_binds_tighter_than_until(self):
        assert parse_formula("!a U b", AB) == Until(Not(Atom("a")), Atom("b"))

    def test_and_binds_tighter_than_or(self):
        f = parse_formula("a & b | c", AB)
        assert f == Or(And(Atom("a"), Atom("b")), Atom("c"))

    def test_implies_is_loosest(self):
        f = parse_formula("a | b -> c", AB)
        assert f == Implies(Or(Atom("a"), Atom("b")), Atom("c"))

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse_formula("   ", AB)

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse_formula("a b", AB)

    def test_unbalanced_paren(self):
        with pytest.raises(ParseError):
            parse_formula("(a & b", AB)

    def test_unknown_character(self):
        with pytest.raises(ParseError) as e:
            parse_formula("a & ?", AB)
        assert e.value.position == 4

    def test_atom_outside_alphabet(self):
        with pytest.raises(FormulaError):
            parse_formula("a & zz", AB)

    def test_label_atoms_allowed_when_declared(self):
        f = parse_formula("a -> y", AB, labels=["y"])
        assert f == Implies(Atom("a"), Atom("y"))


class TestPrinter:
    @pytest.mark.parametrize("text,printed", [
        ("a U b | c", "(a U b) | c"),
        ("G(a -> F b)", "G(a -> F(b))"),
        ("!a", "!(a)"),
        ("a & b & c", "(a & b) & c"),
    ])
    def test_canonical_forms(self, text, printed):
        assert format_formula(parse_formula(text, AB)) == printed

    def test_round_trip_fixed(self):
        for text in ["a U (b R c)", "X X a", "[](a -> <> b)",
                     "true U !a", "(a -> b) -> c"]:
            f = parse_formula(text, AB)
            assert parse_formula(format_formula(f), AB) == f


def formula_strategy():
    atoms = st.sampled_from([Atom("a"), Atom("b"), Atom("c"), TRUE, FALSE])
    return st.recursive(
        atoms,
        lambda sub: st.one_of(
            st.builds(Not, sub),
            st.builds(Next, sub),
            st.builds(Globally, sub),
            st.builds(Eventually, sub),
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Implies, sub, sub),
            st.builds(Until, sub, sub),
            st.builds(Release, sub, sub),
        ),
        max_leaves=12,
    )


@settings(max_examples=200, deadline=None)
@given(formula_strategy())
def test_print_parse_round_trip(f):
    assert parse_formula(format_formula(f), AB) == f


@settings(max_examples=60, deadline=None)
@given(formula_strategy())
def test_desugar_is_core_and_preserves_crisp_truth(f):
    core = desugar(f)
    assert is_core(core)
    for trace in enumerate_traces(Alphabet(["a", "b"]), 1, 3, "nme"):
        assert satisfies(trace, f) == satisfies(trace, core)


class TestDesugar:
    def test_implies(self):
        assert desugar(Implies(Atom("a"), Atom("b"))) == \
            Or(Not(Atom("a")), Atom("b"))

    def test_eventually(self):
        assert desugar(Eventually(Atom("a"))) == Until(TRUE, Atom("a"))

    def test_globally(self):
        assert desugar(Globally(Atom("a"))) == \
            Not(Until(TRUE, Not(Atom("a"))))

    def test_release(self):
        assert desugar(Release(Atom("a"), Atom("b"))) == \
            Not(Until(Not(Atom("a")), Not(Atom("b"))))

    def test_double_negation_collapses(self):
        assert desugar(Not(Not(Atom("a")))) == Atom("a")


class TestPatterns:
    def test_twenty_templates(self):
        assert len(TEMPLATE_NAMES) == 20

    @pytest.mark.parametrize("name", TEMPLATE_NAMES)
    def test_instantiation_uses_bound_atoms(self, name):
        atoms = ("a", "b")[: template_arity(name)]
        f = declare_pattern(PatternInstance(name, atoms))
        assert atoms_of(f) == set(atoms)

    def test_unknown_template(self):
        with pytest.raises(FormulaError):
            declare_pattern(PatternInstance("no_such", ("a",)))

    def test_wrong_arity(self):
        with pytest.raises(FormulaError):
            declare_pattern(PatternInstance("response", ("a",)))

    def test_chain_response_shape(self):
        f = declare_pattern(PatternInstance("chain_response", ("a", "b")))
        assert f == Globally(Implies(Atom("a"), Next(Atom("b"))))

    def test_sampler_deterministic(self):
        ab = Alphabet(["p0", "p1", "p2"])
        assert sample_conjunction_formula(ab, 7) == \
            sample_conjunction_formula(ab, 7)

    def test_sampler_covers_alphabet(self):
        ab = Alphabet(["p0", "p1", "p2", "p3"])
        f = sample_conjunction_formula(ab, 3)
        assert atoms_of(f) == set(ab.atoms)
