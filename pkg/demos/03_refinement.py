"""Iterative local refinement.

Refines fuzzy traces toward full satisfaction of a formula, and shows
the knowledge-formula construction that extracts a sequence label:
refining (phi -> y) & (!phi -> !y) with y = 0 hands y the satisfaction
degree of phi without disturbing the trace.
"""

import numpy as np

from fltlf import (
    Alphabet,
    RefinementConfig,
    compile_formula,
    evaluate,
    ilr_refine,
    parse_formula,
    predict,
)
from fltlf.fuzzy import build_knowledge_formula

alphabet = Alphabet(["p", "q"])

print("== refining a trace toward satisfaction ==")
f = parse_formula("G(p -> F q)", alphabet)
trace = np.array([[0.9, 0.2], [0.7, 0.1], [0.4, 0.3]])
graph = compile_formula(f, 3, alphabet)
print(f"before: value = {evaluate(trace, f, alphabet):.3f}")
result = ilr_refine(graph, trace)
print(f"after : value = {float(result.value):.3f} "
      f"({result.iterations} iteration(s), converged={result.converged})")
print("refined trace:")
print(np.round(result.trace, 3))

print("\n== extracting a label with a knowledge formula ==")
phi = parse_formula("p U q", alphabet)
knowledge = build_knowledge_formula(phi, "y")
print(f"Phi = {knowledge}")
kgraph = compile_formula(knowledge, 3, alphabet, labels=("y",))
cfg = RefinementConfig(max_iterations=1)
for trace in (
    np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),   # crisp, satisfies phi
    np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]),   # crisp, violates phi
    np.array([[0.9, 0.1], [0.8, 0.6], [0.3, 0.2]]),   # fuzzy
):
    r = ilr_refine(kgraph, trace, np.zeros(1), cfg)
    print(f"  phi = {evaluate(trace, phi, alphabet):.2f}  ->  "
          f"y-hat = {r.labels[0]:.2f}, predicted label = {bool(predict(r)[0])}, "
          f"trace changed = {not np.array_equal(r.trace, trace)}")
