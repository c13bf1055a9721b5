import numpy as np
import pytest

from fltlf import (
    Alphabet,
    RefinementConfig,
    compile_formula,
    crisp_to_fuzzy,
    evaluate,
    ilr_refine,
    parse_formula,
    predict,
    refine_node,
)
from fltlf.crisp import enumerate_traces, satisfies
from fltlf.formulas import FormulaError
from fltlf.fuzzy import build_knowledge_formula
from fltlf.graph import CONST, MAX, MIN, NEG
from fltlf.patterns import TEMPLATE_NAMES, PatternInstance, declare_pattern, template_arity

AB = Alphabet(["p", "q"])


def apply_targets(children, targets):
    return [c if t is None else t for c, t in zip(children, targets)]


class TestRefineNodeRules:
    def test_neg(self):
        assert refine_node(NEG, [0.4], 0.6, 1.0) == [0.0]
        assert refine_node(NEG, [0.4], 0.6, 0.25) == [0.75]

    def test_const_is_empty(self):
        assert refine_node(CONST, [], 1.0, 0.0) == []

    def test_min_raise_lifts_all_below_target(self):
        assert refine_node(MIN, [0.3, 0.8], 0.3, 1.0) == [1.0, 1.0]
        assert refine_node(MIN, [0.3, 0.8], 0.3, 0.5) == [0.5, None]

    def test_min_lower_targets_the_minimal_child(self):
        assert refine_node(MIN, [0.3, 0.8], 0.3, 0.1) == [0.1, None]

    def test_max_raise_targets_the_maximal_child(self):
        assert refine_node(MAX, [0.3, 0.8], 0.8, 1.0) == [None, 1.0]

    def test_max_lower_caps_all_above_target(self):
        assert refine_node(MAX, [0.3, 0.8], 0.8, 0.2) == [0.2, 0.2]
        assert refine_node(MAX, [0.3, 0.8], 0.8, 0.5) == [None, 0.5]

    def test_rightmost_tie_break(self):
        assert refine_node(MAX, [0.5, 0.5], 0.5, 1.0) == [None, 1.0]
        assert refine_node(MIN, [0.5, 0.5], 0.5, 0.1) == [None, 0.1]

    def test_leftmost_tie_break_option(self):
        assert refine_node(MAX, [0.5, 0.5], 0.5, 1.0,
                           tie_break="leftmost") == [1.0, None]

    def test_unknown_kind(self):
        with pytest.raises(FormulaError):
            refine_node("prop", [0.5], 0.5, 1.0)


class TestLocalExactness:
    @pytest.mark.parametrize("kind", [MIN, MAX])
    def test_reapplying_rule_hits_target(self, kind, rng):
        op = min if kind == MIN else max
        for _ in range(300):
            k = rng.integers(1, 4)
            children = rng.uniform(size=k).round(2).tolist()
            t = round(float(rng.uniform()), 2)
            v = op(children)
            refined = apply_targets(
                children, refine_node(kind, children, v, t))
            assert op(refined) == pytest.approx(t, abs=0.0)

    def test_neg_exactness(self, rng):
        for _ in range(50):
            c, t = rng.uniform(), rng.uniform()
            (new_c,) = refine_node(NEG, [c], 1 - c, t)
            assert 1 - new_c == pytest.approx(t)


class TestRefinementConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RefinementConfig(max_iterations=0)
        with pytest.raises(ValueError):
            RefinementConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            RefinementConfig(tie_break="random")


class TestIlrOnTraces:
    def test_idempotent_on_satisfying_input(self):
        f = parse_formula("p U q", AB)
        trace = np.array([[1.0, 0.0], [0.0, 1.0]])
        graph = compile_formula(f, 2, AB)
        result = ilr_refine(graph, trace)
        assert result.iterations == 0
        assert result.converged
        assert np.array_equal(result.trace, trace)

    def test_single_max_raise(self):
        f = parse_formula("p | q", AB)
        trace = np.array([[0.3, 0.8]])
        result = ilr_refine(compile_formula(f, 1, AB), trace)
        assert float(result.value) == 1.0
        # Only the maximal disjunct moves; the other leaf is conserved.
        assert result.trace[0, 1] == 1.0 and result.trace[0, 0] == 0.3

    def test_min_raise_lifts_both(self):
        f = parse_formula("p & q", AB)
        trace = np.array([[0.3, 0.8]])
        result = ilr_refine(compile_formula(f, 1, AB), trace)
        assert np.array_equal(result.trace, [[1.0, 1.0]])

    def test_lowering_to_target(self):
        f = parse_formula("p | q", AB)
        trace = np.array([[0.3, 0.8]])
        cfg = RefinementConfig(target=0.2)
        result = ilr_refine(compile_formula(f, 1, AB), trace, cfg=cfg)
        assert float(result.value) == pytest.approx(0.2)
        assert np.all(result.trace <= 0.2 + 1e-12)

    def test_unreachable_target_reports_not_converged(self):
        f = parse_formula("p & !p", AB)  # value is min(p, 1-p) <= 0.5
        trace = np.array([[0.5, 0.0]])
        result = ilr_refine(compile_formula(f, 1, AB), trace)
        assert not result.converged
        assert float(result.value) <= 0.5 + 1e-9

    def test_values_stay_in_unit_interval(self, rng):
        f = parse_formula("G(p -> F q)", AB)
        graph = compile_formula(f, 4, AB)
        for _ in range(20):
            trace = rng.uniform(size=(4, 2))
            result = ilr_refine(graph, trace)
            assert np.all(result.trace >= 0.0) and np.all(result.trace <= 1.0)

    def test_batched_matches_per_element(self, rng):
        f = parse_formula("p U q", AB)
        graph = compile_formula(f, 3, AB)
        batch = rng.uniform(size=(5, 3, 2))
        got = ilr_refine(graph, batch)
        for b in range(5):
            single = ilr_refine(graph, batch[b])
            assert np.allclose(got.trace[b], single.trace)
            assert got.converged_mask[b] == single.converged

    def test_shape_mismatch_rejected(self):
        f = parse_formula("p", AB)
        graph = compile_formula(f, 2, AB)
        with pytest.raises(FormulaError):
            ilr_refine(graph, np.zeros((3, 2)))

    def test_missing_labels_rejected(self):
        phi = parse_formula("p", AB)
        k = build_knowledge_formula(phi, "y")
        graph = compile_formula(k, 1, AB, labels=("y",))
        with pytest.raises(FormulaError):
            ilr_refine(graph, np.zeros((1, 2)))


class TestKnowledgeRefinement:
    @pytest.mark.parametrize("text", ["p U q", "G p", "F q", "G(p -> X q)",
                                      "p -> F q", "!(F p & F q)"])
    def test_crisp_traces_recover_the_label(self, text):
        phi = parse_formula(text, AB)
        k = build_knowledge_formula(phi, "y")
        for n in (1, 2, 3, 4):
            graph = compile_formula(k, n, AB, labels=("y",))
            for trace in enumerate_traces(AB, n, n, "me"):
                fuzzy = crisp_to_fuzzy(trace, AB)
                result = ilr_refine(graph, fuzzy, np.zeros(1))
                want = float(satisfies(trace, phi))
                assert result.converged
                assert result.iterations <= 2
                assert result.labels[0] == want
                # The trace itself is never touched on crisp input.
                assert np.array_equal(result.trace, fuzzy)

    @pytest.mark.parametrize("name", TEMPLATE_NAMES)
    def test_all_templates_len_2(self, name):
        atoms = AB.atoms[: template_arity(name)]
        phi = declare_pattern(PatternInstance(name, atoms))
        k = build_knowledge_formula(phi, "y")
        graph = compile_formula(k, 2, AB, labels=("y",))
        for trace in enumerate_traces(AB, 2, 2, "me"):
            fuzzy = crisp_to_fuzzy(trace, AB)
            result = ilr_refine(graph, fuzzy, np.zeros(1))
            assert result.labels[0] == float(satisfies(trace, phi))
            assert np.array_equal(result.trace, fuzzy)

    def test_fuzzy_label_equals_satisfaction_degree(self, rng):
        """One refinement pass hands y the fuzzy satisfaction value of phi."""
        phi = parse_formula("p U q", AB)
        k = build_knowledge_formula(phi, "y")
        cfg = RefinementConfig(max_iterations=1)
        for n in (1, 2, 4):
            graph = compile_formula(k, n, AB, labels=("y",))
            for _ in range(10):
                trace = rng.uniform(0.05, 0.95, size=(n, 2))
                result = ilr_refine(graph, trace, np.zeros(1), cfg)
                assert result.labels[0] == pytest.approx(
                    evaluate(trace, phi, AB), abs=1e-12)


class TestPredict:
    def test_thresholding(self):
        assert predict(np.array([0.9]))[0]
        assert not predict(np.array([0.1]))[0]

    def test_boundary_maps_to_true(self):
        assert predict(np.array([0.5]))[0]

    def test_accepts_refinement_result(self):
        phi = parse_formula("p", AB)
        k = build_knowledge_formula(phi, "y")
        graph = compile_formula(k, 1, AB, labels=("y",))
        result = ilr_refine(graph, np.array([[1.0, 0.0]]), np.zeros(1))
        assert predict(result).tolist() == [True]
