"""Fuzzy evaluation under Zadeh semantics (min / max / 1-x).

Reproduces the until backward recursion on a small fuzzy trace and shows
that the compiled min/max graph agrees with recursive evaluation.
"""

import numpy as np

from fltlf import Alphabet, compile_formula, evaluate, graph_forward, parse_formula

alphabet = Alphabet(["p", "q"])
trace = np.array([
    [0.9, 0.1],
    [0.8, 0.6],
    [0.3, 0.2],
])

f = parse_formula("p U q", alphabet)
print("trace (rows = instants, columns = p, q):")
print(trace)

print("\nbackward recursion for p U q:")
p, q = trace[:, 0], trace[:, 1]
nxt = 0.0
for i in (2, 1, 0):
    v = max(q[i], min(p[i], nxt))
    print(f"  V_{i + 1} = max({q[i]}, min({p[i]}, {nxt})) = {v}")
    nxt = v
print(f"\nevaluate(p U q) = {evaluate(trace, f, alphabet)}")

graph = compile_formula(f, 3, alphabet)
out = graph_forward(graph, trace)[graph.output]
print(f"compiled graph ({len(graph)} nodes) = {float(np.asarray(out))}")

print("\nother connectives on the same trace:")
for text in ["G p", "F q", "p -> q", "X q", "!(p & q)"]:
    print(f"  {text:10} = {evaluate(trace, parse_formula(text, alphabet), alphabet):.3f}")
