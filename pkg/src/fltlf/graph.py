"""Compilation of a core-form formula over a fixed trace length into a
shared min/max/neg DAG.

Nodes are hash-consed so each (subformula, instant) pair appears once;
constant subtrees are folded away at construction, which keeps the until
unrolling linear in the trace length.  Forward evaluation works on plain
arrays or on autodiff Tensors.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor, fmax, fmin, fneg
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

PROP = "prop"
LABEL = "label"
CONST = "const"
NEG = "neg"
MIN = "min"
MAX = "max"


@dataclass(frozen=True)
class GraphNode:
    kind: str
    children: tuple[int, ...] = ()
    instant: int = 0       # 1-based, prop nodes
    atom_index: int = 0    # prop nodes
    label_index: int = 0   # label nodes
    value: float = 0.0     # const nodes


@dataclass
class CompiledGraph:
    nodes: list[GraphNode]
    output: int
    trace_len: int
    alphabet: Alphabet
    labels: tuple[str, ...]
    provenance: dict[int, tuple[Formula, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)


class _Builder:
    def __init__(self, n: int, alphabet: Alphabet, labels: tuple[str, ...]):
        self.n = n
        self.alphabet = alphabet
        self.labels = labels
        self.nodes: list[GraphNode] = []
        self.interned: dict[tuple, int] = {}
        self.provenance: dict[int, tuple[Formula, int]] = {}

    def intern(self, node: GraphNode) -> int:
        key = (node.kind, node.children, node.instant, node.atom_index,
               node.label_index, node.value)
        idx = self.interned.get(key)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(node)
            self.interned[key] = idx
        return idx

    def const(self, value: float) -> int:
        return self.intern(GraphNode(CONST, value=float(value)))

    def _const_value(self, idx: int) -> Optional[float]:
        node = self.nodes[idx]
        return node.value if node.kind == CONST else None

    def neg(self, child: int) -> int:
        cv = self._const_value(child)
        if cv is not None:
            return self.const(1.0 - cv)
        return self.intern(GraphNode(NEG, (child,)))

    def min_(self, a: int, b: int) -> int:
        av, bv = self._const_value(a), self._const_value(b)
        if av == 0.0 or bv == 0.0:
            return self.const(0.0)
        if av == 1.0:
            return b
        if bv == 1.0:
            return a
        if av is not None and bv is not None:
            return self.const(min(av, bv))
        if a == b:
            return a
        return self.intern(GraphNode(MIN, (a, b)))

    def max_(self, a: int, b: int) -> int:
        av, bv = self._const_value(a), self._const_value(b)
        if av == 1.0 or bv == 1.0:
            return self.const(1.0)
        if av == 0.0:
            return b
        if bv == 0.0:
            return a
        if av is not None and bv is not None:
            return self.const(max(av, bv))
        if a == b:
            return a
        return self.intern(GraphNode(MAX, (a, b)))


def compile_formula(phi: Formula, trace_len: int, alphabet: Alphabet,
                    labels: Sequence[str] = ()) -> CompiledGraph:
    """Unfold phi over a trace of `trace_len` instants into a shared DAG."""
    if trace_len < 1:
        raise FormulaError("trace length must be >= 1")
    if not is_core(phi):
        phi = desugar(phi)
    labels = tuple(labels)
    b = _Builder(trace_len, alphabet, labels)
    memo: dict[tuple[Formula, int], int] = {}

    def build(f: Formula, i: int) -> int:
        key = (f, i)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if isinstance(f, Atom):
            if f.name in labels:
                idx = b.intern(GraphNode(LABEL, label_index=labels.index(f.name)))
            else:
                idx = b.intern(GraphNode(
                    PROP, instant=i, atom_index=alphabet.index(f.name)))
        elif isinstance(f, TrueF):
            idx = b.const(1.0)
        elif isinstance(f, FalseF):
            idx = b.const(0.0)
        elif isinstance(f, Not):
            idx = b.neg(build(f.arg, i))
        elif isinstance(f, And):
            idx = b.min_(build(f.left, i), build(f.right, i))
        elif isinstance(f, Or):
            idx = b.max_(build(f.left, i), build(f.right, i))
        elif isinstance(f, Next):
            idx = build(f.arg, i + 1) if i < trace_len else b.const(0.0)
        elif isinstance(f, Until):
            # b | (a & X(a U b)), X at the last instant is 0
            nxt = build(f, i + 1) if i < trace_len else b.const(0.0)
            idx = b.max_(build(f.right, i), b.min_(build(f.left, i), nxt))
        else:
            raise FormulaError(f"non-core node {f!r}")
        memo[key] = idx
        b.provenance.setdefault(idx, (f, i))
        return idx

    output = build(phi, 1)
    return CompiledGraph(b.nodes, output, trace_len, alphabet, labels,
                         b.provenance)


_cache: dict[tuple, CompiledGraph] = {}
_cache_lock = threading.Lock()


def compile_cached(phi: Formula, trace_len: int, alphabet: Alphabet,
                   labels: Sequence[str] = ()) -> CompiledGraph:
    key = (phi, trace_len, alphabet, tuple(labels))
    with _cache_lock:
        graph = _cache.get(key)
    if graph is None:
        graph = compile_formula(phi, trace_len, alphabet, labels)
        with _cache_lock:
            _cache.setdefault(key, graph)
    return graph


def graph_forward(graph: CompiledGraph, trace_values,
                  label_values=None) -> list:
    """Value of every node, in topological (creation) order.

    `trace_values` is (n, |P|) or batched (B, n, |P|); `label_values` is
    (m,) or (B, m).  Tensors flow through with gradients intact.
    """
    shape = trace_values.shape
    if shape[-2] != graph.trace_len or shape[-1] != len(graph.alphabet):
        raise FormulaError(
            f"trace shape {shape} does not match graph "
            f"(n={graph.trace_len}, |P|={len(graph.alphabet)})")
    if graph.labels and label_values is None:
        raise FormulaError("graph has label leaves but no label values given")
    values: list = [None] * len(graph.nodes)
    for idx, node in enumerate(graph.nodes):
        if node.kind == PROP:
            values[idx] = trace_values[..., node.instant - 1, node.atom_index]
        elif node.kind == LABEL:
            values[idx] = label_values[..., node.label_index]
        elif node.kind == CONST:
            values[idx] = node.value
        elif node.kind == NEG:
            values[idx] = fneg(values[node.children[0]])
        elif node.kind == MIN:
            values[idx] = fmin(values[node.children[0]], values[node.children[1]])
        elif node.kind == MAX:
            values[idx] = fmax(values[node.children[0]], values[node.children[1]])
        else:
            raise FormulaError(f"unknown node kind {node.kind}")
    return values
