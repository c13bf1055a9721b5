"""Formulas, traces, and the crisp oracle.

Parses a few LTLf formulas, instantiates DECLARE templates, and checks
them against symbolic traces with the exact finite-trace semantics.
"""

from fltlf import Alphabet, SymbolicTrace, parse_formula, satisfies
from fltlf.crisp import enumerate_traces
from fltlf.patterns import PatternInstance, declare_pattern

alphabet = Alphabet(["a", "b"])

print("== parsing and printing ==")
for text in ["a U b | a", "G(a -> F b)", "[](a -> <> b)"]:
    f = parse_formula(text, alphabet)
    print(f"  {text!r:24} -> {f}")

print("\n== crisp satisfaction ==")
trace = SymbolicTrace([{"a"}, {"a"}, {"b"}])
for text in ["a U b", "G a", "F b", "X a", "G(a -> F b)"]:
    f = parse_formula(text, alphabet)
    print(f"  {text:14} on <a, a, b>  ->  {satisfies(trace, f)}")

print("\n== a DECLARE template ==")
chain = declare_pattern(PatternInstance("chain_response", ("a", "b")))
print(f"  chain_response(a, b) = {chain}")
accepted = [t for t in enumerate_traces(alphabet, 2, 3, "me")
            if satisfies(t, chain)]
print(f"  accepted ME traces of length 2-3: {len(accepted)}")
for t in accepted[:4]:
    print("   ", [sorted(i) for i in t.instants])
