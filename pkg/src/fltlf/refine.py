"""Iterative local refinement over a compiled min/max/neg graph.

Each iteration runs a forward pass, then walks the DAG backward handing
every node a target value.  Per-connective rules (minimal under the
sup-norm):

* neg: the child gets 1 - t.
* min, raising (t >= v): every child below t is raised to t.
* min, lowering (t < v): the minimal child is lowered to t.
* max, lowering (t <= v): every child above t is capped at t.
* max, raising (t > v): the maximal child is raised to t.  Label leaves
  hanging directly under the disjunction additionally receive the shifted
  value c + (t - v); this is what hands the sequence label the residual
  satisfaction gap and makes the label differentiable in the trace.

Ties between extremal children select the rightmost one, so in a
knowledge formula (!phi | y) the label absorbs the target instead of the
perception output.  Proposals reaching a shared leaf are averaged and
clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor, as_tensor, fclip01, fdata, fneg, fwhere
from .formulas import FormulaError
from .graph import CONST, LABEL, MAX, MIN, NEG, PROP, CompiledGraph


@dataclass
class RefinementConfig:
    target: float = 1.0
    max_iterations: int = 10
    tolerance: float = 1e-6
    tie_break: str = "rightmost"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.tie_break not in ("rightmost", "leftmost"):
            raise ValueError("tie_break must be 'rightmost' or 'leftmost'")


@dataclass
class RefinementResult:
    trace: np.ndarray
    labels: np.ndarray
    value: np.ndarray
    iterations: int
    converged: bool
    converged_mask: np.ndarray
    label_tensors: Optional[list] = None
    value_tensor: Optional[Tensor] = None


# -- single-node refinement rules -------------------------------------------

def refine_node(kind: str, children_values: Sequence[float], current_value: float,
                target: float, tie_break: str = "rightmost") -> list:
    """Per-child targets for one connective; None marks 'leave unchanged'."""
    c = [float(x) for x in children_values]
    v, t = float(current_value), float(target)
    if kind == NEG:
        return [1.0 - t]
    if kind == CONST:
        return []
    if kind == MIN:
        if t >= v:
            return [t if ci < t else None for ci in c]
        sel = _select_extremal(c, smallest=True, tie_break=tie_break)
        return [t if i == sel else None for i in range(len(c))]
    if kind == MAX:
        if t <= v:
            return [t if ci > t else None for ci in c]
        sel = _select_extremal(c, smallest=False, tie_break=tie_break)
        return [t if i == sel else None for i in range(len(c))]
    raise FormulaError(f"no refinement rule for node kind {kind!r}")


def _select_extremal(values: Sequence[float], smallest: bool,
                     tie_break: str) -> int:
    best = min(values) if smallest else max(values)
    matches = [i for i, v in enumerate(values) if v == best]
    return matches[0] if tie_break == "leftmost" else matches[-1]


# -- batched backward pass ---------------------------------------------------

def _argext(child_data: list[np.ndarray], smallest: bool, tie_break: str):
    stacked = np.stack(np.broadcast_arrays(*child_data), axis=0)
    pick = np.argmin if smallest else np.argmax
    if tie_break == "leftmost":
        return pick(stacked, axis=0)
    return (len(child_data) - 1) - pick(stacked[::-1], axis=0)


def _shift(cv, t, v):
    """c + (t - v), preserving Tensor-ness."""
    if any(isinstance(x, Tensor) for x in (cv, t, v)):
        return as_tensor(cv) + (as_tensor(t) - as_tensor(v))
    return np.asarray(cv) + (np.asarray(t) - np.asarray(v))


def _backward_pass(graph: CompiledGraph, node_vals: list, mask: np.ndarray,
                   cfg: RefinementConfig) -> dict[int, list]:
    """Collect (proposal, valid-mask) pairs for every leaf node."""
    pending: dict[int, list] = {graph.output: [(cfg.target, mask)]}
    leaf_props: dict[int, list] = {}
    for idx in range(len(graph.nodes) - 1, -1, -1):
        plist = pending.pop(idx, None)
        if not plist:
            continue
        node = graph.nodes[idx]
        if node.kind in (PROP, LABEL):
            leaf_props.setdefault(idx, []).extend(plist)
            continue
        if node.kind == CONST:
            continue

        def push(child: int, tgt, m: np.ndarray) -> None:
            if np.any(m):
                pending.setdefault(child, []).append((tgt, m))

        for t, m in plist:
            if node.kind == NEG:
                push(node.children[0], fneg(t), m)
                continue
            v = node_vals[idx]
            td, vd = fdata(t), fdata(v)
            cvals = [node_vals[c] for c in node.children]
            cdata = [fdata(c) for c in cvals]
            if node.kind == MIN:
                raise_m = m & (td >= vd)
                for c, cd in zip(node.children, cdata):
                    push(c, t, raise_m & (cd < td))
                lower_m = m & (td < vd)
                if np.any(lower_m):
                    sel = _argext(cdata, smallest=True, tie_break=cfg.tie_break)
                    for i, c in enumerate(node.children):
                        push(c, t, lower_m & (sel == i))
            else:  # MAX
                lower_m = m & (td <= vd)
                for c, cd in zip(node.children, cdata):
                    push(c, t, lower_m & (cd > td))
                raise_m = m & (td > vd)
                if np.any(raise_m):
                    sel = _argext(cdata, smallest=False, tie_break=cfg.tie_break)
                    for i, (c, cv) in enumerate(zip(node.children, cvals)):
                        push(c, t, raise_m & (sel == i))
                        if graph.nodes[c].kind == LABEL:
                            push(c, _shift(cv, t, v), raise_m & (sel != i))
    return leaf_props


def _aggregate(old, props: list):
    """Mean of the valid proposals, clamped; elements with none keep `old`."""
    tensor_mode = isinstance(old, Tensor) or any(
        isinstance(p, Tensor) for p, _ in props)
    masks = [np.asarray(m, dtype=bool) for _, m in props]
    count = np.zeros((), dtype=np.int64)
    count = sum((m.astype(np.int64) for m in masks), count)
    any_m = count > 0
    safe = np.maximum(count, 1)
    total = None
    for (p, _), m in zip(props, masks):
        term = fwhere(m, as_tensor(p) if tensor_mode else p, 0.0)
        total = term if total is None else total + term
    mean = total * (1.0 / safe) if isinstance(total, Tensor) else total / safe
    return fwhere(any_m, fclip01(mean), old)


def _forward_from_leaves(graph: CompiledGraph, leaf_vals: dict[int, object]) -> list:
    from .autodiff import fmax, fmin

    values: list = [None] * len(graph.nodes)
    for idx, node in enumerate(graph.nodes):
        if node.kind in (PROP, LABEL):
            values[idx] = leaf_vals[idx]
        elif node.kind == CONST:
            values[idx] = node.value
        elif node.kind == NEG:
            values[idx] = fneg(values[node.children[0]])
        elif node.kind == MIN:
            values[idx] = fmin(values[node.children[0]], values[node.children[1]])
        else:
            values[idx] = fmax(values[node.children[0]], values[node.children[1]])
    return values


def ilr_refine(graph: CompiledGraph, trace_values, label_values=None,
               cfg: Optional[RefinementConfig] = None) -> RefinementResult:
    """Refine leaf values until the output reaches the target (or give up).

    `trace_values` is (n, |P|) or batched (B, n, |P|), arrays or Tensors;
    `label_values` likewise (m,) / (B, m).  Non-convergence is reported
    through the `converged` flag, never raised.
    """
    cfg = cfg or RefinementConfig()
    n, width = graph.trace_len, len(graph.alphabet)
    shape = trace_values.shape
    if shape[-2:] != (n, width):
        raise FormulaError(
            f"trace shape {shape} does not match graph (n={n}, |P|={width})")
    if graph.labels and label_values is None:
        raise FormulaError("graph has label leaves but no label values given")

    batch_shape = shape[:-2]
    leaf_vals: dict[int, object] = {}
    for idx, node in enumerate(graph.nodes):
        if node.kind == PROP:
            leaf_vals[idx] = trace_values[..., node.instant - 1, node.atom_index]
        elif node.kind == LABEL:
            leaf_vals[idx] = label_values[..., node.label_index]

    iterations = 0
    node_vals = _forward_from_leaves(graph, leaf_vals)
    for _ in range(cfg.max_iterations):
        out = node_vals[graph.output]
        active = np.broadcast_to(
            np.abs(fdata(out) - cfg.target) > cfg.tolerance, batch_shape)
        if not np.any(active):
            break
        leaf_props = _backward_pass(graph, node_vals, active, cfg)
        if not leaf_props:
            break
        iterations += 1
        for idx, props in leaf_props.items():
            leaf_vals[idx] = _aggregate(leaf_vals[idx], props)
        node_vals = _forward_from_leaves(graph, leaf_vals)

    out = node_vals[graph.output]
    out_data = np.broadcast_to(fdata(out), batch_shape)
    converged_mask = np.abs(out_data - cfg.target) <= cfg.tolerance

    refined_trace = np.array(fdata(trace_values), dtype=np.float64, copy=True)
    for idx, node in enumerate(graph.nodes):
        if node.kind == PROP:
            refined_trace[..., node.instant - 1, node.atom_index] = \
                fdata(leaf_vals[idx])

    m = len(graph.labels)
    refined_labels = np.array(
        np.broadcast_to(fdata(label_values), batch_shape + (m,)),
        dtype=np.float64, copy=True) if m else np.zeros(batch_shape + (0,))
    label_tensors: Optional[list] = [None] * m if m else None
    for idx, node in enumerate(graph.nodes):
        if node.kind == LABEL:
            val = leaf_vals[idx]
            refined_labels[..., node.label_index] = np.broadcast_to(
                fdata(val), batch_shape)
            if isinstance(val, Tensor) or isinstance(label_values, Tensor):
                label_tensors[node.label_index] = (
                    val if isinstance(val, Tensor) else as_tensor(val))

    return RefinementResult(
        trace=refined_trace,
        labels=refined_labels,
        value=out_data.copy() if out_data.ndim else float(out_data),
        iterations=iterations,
        converged=bool(np.all(converged_mask)),
        converged_mask=converged_mask,
        label_tensors=label_tensors if m and any(
            t is not None for t in (label_tensors or [])) else None,
        value_tensor=out if isinstance(out, Tensor) else None,
    )


def predict(labels, threshold: float = 0.5):
    """Crisp labels from refined values; >= threshold maps to True."""
    if isinstance(labels, RefinementResult):
        labels = labels.labels
    return np.asarray(fdata(labels)) >= threshold
