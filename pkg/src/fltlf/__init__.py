"""Fuzzy LTLf evaluation, iterative local refinement, and end-to-end
symbol-grounding training over image sequences."""

from .autodiff import Tensor, binary_cross_entropy
from .crisp import SymbolicTrace, enumerate_traces, satisfies, satisfies_at
from .datasets import (
    DatasetRecord,
    SamplingPlan,
    attach_images,
    read_dataset,
    sample_symbolic_dataset,
    write_dataset,
)
from .formulas import (
    Alphabet,
    And,
    Atom,
    Eventually,
    FalseF,
    Formula,
    FormulaError,
    Globally,
    Implies,
    Next,
    Not,
    Or,
    ParseError,
    Release,
    TrueF,
    Until,
    desugar,
    format_formula,
    parse_formula,
)
from .fuzzy import (
    build_knowledge_formula,
    crisp_to_fuzzy,
    evaluate,
    validate_fuzzy_trace,
)
from .graph import CompiledGraph, compile_cached, compile_formula, graph_forward
from .mnist import MnistStore, read_idx, synthetic_digit_store, write_idx
from .patterns import (
    TEMPLATE_NAMES,
    PatternInstance,
    declare_pattern,
    sample_conjunction_formula,
)
from .perception import (
    AdamState,
    PerceptionModel,
    adam_step,
    load_checkpoint,
    perceive,
    save_checkpoint,
)
from .refine import (
    RefinementConfig,
    RefinementResult,
    ilr_refine,
    predict,
    refine_node,
)
from .training import (
    Metrics,
    TrainConfig,
    evaluate_grounding,
    evaluate_sequence,
    run_benchmark,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "And", "Atom", "Eventually", "FalseF", "Formula",
    "FormulaError", "Globally", "Implies", "Next", "Not", "Or", "ParseError",
    "Release", "TrueF", "Until", "desugar", "format_formula", "parse_formula",
    "SymbolicTrace", "enumerate_traces", "satisfies", "satisfies_at",
    "evaluate", "crisp_to_fuzzy", "validate_fuzzy_trace",
    "build_knowledge_formula",
    "CompiledGraph", "compile_formula", "compile_cached", "graph_forward",
    "RefinementConfig", "RefinementResult", "ilr_refine", "refine_node",
    "predict",
    "Tensor", "binary_cross_entropy",
    "PerceptionModel", "AdamState", "adam_step", "perceive",
    "save_checkpoint", "load_checkpoint",
    "MnistStore", "read_idx", "write_idx", "synthetic_digit_store",
    "TEMPLATE_NAMES", "PatternInstance", "declare_pattern",
    "sample_conjunction_formula",
    "SamplingPlan", "DatasetRecord", "sample_symbolic_dataset",
    "attach_images", "write_dataset", "read_dataset",
    "TrainConfig", "Metrics", "train", "evaluate_grounding",
    "evaluate_sequence", "run_benchmark",
]
