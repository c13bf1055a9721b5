"""Weakly supervised end-to-end training and evaluation.

Per batch: every referenced image is perceived into a fuzzy atom vector,
the vectors form the fuzzy trace lambda, the sequence label y starts at
0, ILR refines (lambda, y) against the knowledge formula
(phi -> y) & (!phi -> !y) with target 1, and binary cross-entropy
between the refined y-hat and the stored accept/reject label is
backpropagated through the whole computation into the perception
parameters.  Batches are grouped by trace length so each batch reuses
one compiled graph.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor, binary_cross_entropy
from .crisp import SymbolicTrace
from .datasets import (
    DatasetRecord,
    SamplingPlan,
    attach_images,
    compose_observation,
    sample_symbolic_dataset,
    split_image_pools,
)
from .formulas import Alphabet, Formula, FormulaError, format_formula, parse_formula
from .fuzzy import build_knowledge_formula
from .graph import compile_cached
from .mnist import MnistStore, synthetic_digit_store
from .patterns import (
    TEMPLATE_NAMES,
    PatternInstance,
    declare_pattern,
    sample_conjunction_formula,
    template_arity,
)
from .perception import AdamState, PerceptionModel, adam_step
from .refine import RefinementConfig, ilr_refine, predict

LABEL_NAME = "y"


@dataclass
class TrainConfig:
    formula: str
    alphabet: Alphabet
    mode: str = "me"
    epochs: int = 20
    batch_size: int = 64
    lr: float = 0.001
    seed: int = 0
    timeout_minutes: float = 60.0
    # One refinement pass hands the label the full residual satisfaction
    # gap without disturbing the trace; further passes would start
    # lowering the perception side of the biconditional.
    ilr: RefinementConfig = field(
        default_factory=lambda: RefinementConfig(max_iterations=1))

    def __post_init__(self):
        if self.epochs < 1:
            raise FormulaError("epochs must be >= 1")
        if self.timeout_minutes <= 0:
            raise FormulaError("timeout must be positive")
        if self.batch_size < 1:
            raise FormulaError("batch size must be >= 1")
        if self.mode not in ("me", "nme"):
            raise FormulaError(f"unknown mode {self.mode!r}")


@dataclass
class Metrics:
    epoch_losses: list = field(default_factory=list)
    sequence_accuracy: float = 0.0
    grounding_accuracy: float = 0.0
    grounding_exact_match: float = 0.0
    wall_minutes: float = 0.0
    timed_out: bool = False


def _observations(records: Sequence[DatasetRecord],
                  store: MnistStore) -> np.ndarray:
    """(B, n, 784) observation block for same-length records."""
    out = np.empty((len(records), len(records[0].trace), 28 * 28))
    for b, rec in enumerate(records):
        for i, ids in enumerate(rec.image_ids):
            out[b, i] = compose_observation(store, ids).reshape(-1)
    return out


def _length_buckets(records: Sequence[DatasetRecord]) -> dict:
    buckets: dict[int, list] = {}
    for rec in records:
        buckets.setdefault(len(rec.trace), []).append(rec)
    return buckets


def _perceive_batch(model: PerceptionModel, obs: np.ndarray) -> Tensor:
    """(B, n, 784) images -> (B, n, |P|) fuzzy trace Tensor."""
    b, n, d = obs.shape
    flat = model.forward(obs.reshape(b * n, d))
    return flat.reshape(b, n, model.n_atoms)


def refine_batch(model: PerceptionModel, graph, records, store,
                 cfg: RefinementConfig):
    """Refined label Tensor (B,) for one same-length record batch."""
    lam = _perceive_batch(model, _observations(records, store))
    y0 = Tensor(np.zeros((len(records), 1)))
    result = ilr_refine(graph, lam, y0, cfg)
    if result.label_tensors is None or result.label_tensors[0] is None:
        # Refinement never touched the label (e.g. the formula is a
        # constant); fall back to the untouched zeros.
        return y0[:, 0], result
    return result.label_tensors[0], result


def train(config: TrainConfig, records: Sequence[DatasetRecord],
          store: MnistStore,
          model: Optional[PerceptionModel] = None) -> tuple:
    """Train the perception model; returns (model, Metrics)."""
    phi = parse_formula(config.formula, config.alphabet)
    knowledge = build_knowledge_formula(phi, LABEL_NAME)
    model = model or PerceptionModel(len(config.alphabet), config.mode,
                                     seed=config.seed)
    adam = AdamState(lr=config.lr)
    rng = np.random.default_rng((config.seed, 4))
    metrics = Metrics()
    start = time.monotonic()
    deadline = start + config.timeout_minutes * 60.0

    buckets = _length_buckets(records)
    graphs = {
        n: compile_cached(knowledge, n, config.alphabet, (LABEL_NAME,))
        for n in buckets
    }

    for _ in range(config.epochs):
        batch_plan = []
        for n, bucket in sorted(buckets.items()):
            order = rng.permutation(len(bucket))
            for lo in range(0, len(bucket), config.batch_size):
                batch_plan.append(
                    (n, [bucket[i] for i in order[lo:lo + config.batch_size]]))
        plan_order = rng.permutation(len(batch_plan))

        losses = []
        for k in plan_order:
            if time.monotonic() > deadline:
                metrics.timed_out = True
                break
            n, batch = batch_plan[k]
            y_hat, _ = refine_batch(model, graphs[n], batch, store, config.ilr)
            targets = np.array([1.0 if r.label else 0.0 for r in batch])
            loss = binary_cross_entropy(y_hat, targets)
            model.zero_grad()
            loss.backward()
            adam_step(model.params, adam)
            losses.append(float(loss.data))
        if losses:
            metrics.epoch_losses.append(float(np.mean(losses)))
        if metrics.timed_out:
            break

    metrics.wall_minutes = (time.monotonic() - start) / 60.0
    return model, metrics


def evaluate_grounding(model: PerceptionModel,
                       records: Sequence[DatasetRecord],
                       store: MnistStore, mode: str) -> tuple:
    """(accuracy %, exact-match %) of the perceived symbols.

    ME: argmax of the perception output vs. the instant's digit, per
    image.  NME: per-atom 0.5-thresholded prediction vs. the true atom
    set, averaged over atoms and instants; exact match is the fraction
    of instants whose whole atom set is predicted correctly.
    """
    if mode != model.head:
        raise FormulaError(f"mode {mode!r} does not match model head "
                           f"{model.head!r}")
    correct = total = exact = instants = 0
    for rec in records:
        alphabet = Alphabet(rec.alphabet)
        obs = _observations([rec], store)[0]
        pred = model.forward(obs).data
        for i, inst in enumerate(rec.trace.instants):
            truth = np.zeros(len(alphabet))
            for atom in inst:
                truth[alphabet.index(atom)] = 1.0
            if mode == "me":
                correct += int(np.argmax(pred[i]) == np.argmax(truth))
                total += 1
                exact += int(np.argmax(pred[i]) == np.argmax(truth))
            else:
                hits = (pred[i] >= 0.5) == (truth >= 0.5)
                correct += int(hits.sum())
                total += len(alphabet)
                exact += int(hits.all())
            instants += 1
    if total == 0:
        return 0.0, 0.0
    return 100.0 * correct / total, 100.0 * exact / max(instants, 1)


def evaluate_sequence(model: PerceptionModel,
                      records: Sequence[DatasetRecord],
                      store: MnistStore, config: TrainConfig) -> float:
    """Accuracy % of predicted accept/reject labels on the records."""
    phi = parse_formula(config.formula, config.alphabet)
    knowledge = build_knowledge_formula(phi, LABEL_NAME)
    correct = 0
    for n, bucket in _length_buckets(records).items():
        graph = compile_cached(knowledge, n, config.alphabet, (LABEL_NAME,))
        y_hat, _ = refine_batch(model, graph, bucket, store, config.ilr)
        got = predict(y_hat.data)
        want = np.array([r.label for r in bucket])
        correct += int((got == want).sum())
    return 100.0 * correct / len(records) if records else 0.0


# -- benchmark suites --------------------------------------------------------

RQ2_ATOM_COUNTS = (2, 3, 4)
RQ2_MAX_LENGTHS = (5, 10, 20)
RQ2_FORMULAS_PER_ATOM_COUNT = 5

BENCH_COLUMNS = ("suite", "mode", "formula", "n_atoms", "max_len", "seed",
                 "grounding_accuracy", "grounding_exact_match",
                 "sequence_accuracy", "final_loss", "wall_minutes",
                 "timed_out", "error")


def _alphabet_for(n_atoms: int) -> Alphabet:
    return Alphabet([f"p{i}" for i in range(n_atoms)])


def rq1_configurations(modes=("me", "nme")) -> list:
    """20 DECLARE templates x requested modes, |P|=2, lengths 1..4."""
    alphabet = _alphabet_for(2)
    configs = []
    for mode in modes:
        for name in TEMPLATE_NAMES:
            atoms = alphabet.atoms[: template_arity(name)]
            phi = declare_pattern(PatternInstance(name, atoms))
            configs.append({
                "suite": "rq1", "mode": mode,
                "formula": format_formula(phi), "alphabet": alphabet,
                "n_atoms": 2, "min_len": 1, "max_len": 4,
                "protocol": "exhaustive",
            })
    return configs


def rq2_configurations(modes=("me", "nme"), atom_counts=RQ2_ATOM_COUNTS,
                       max_lengths=RQ2_MAX_LENGTHS,
                       formulas_per_atom_count=RQ2_FORMULAS_PER_ATOM_COUNT,
                       seed: int = 0) -> list:
    """|P| x max-length grid, 5 sampled formulas per |P|, per mode."""
    configs = []
    for mode in modes:
        for n_atoms in atom_counts:
            alphabet = _alphabet_for(n_atoms)
            for k in range(formulas_per_atom_count):
                phi = sample_conjunction_formula(
                    alphabet, seed=seed * 10_000 + n_atoms * 100 + k)
                for max_len in max_lengths:
                    configs.append({
                        "suite": "rq2", "mode": mode,
                        "formula": format_formula(phi), "alphabet": alphabet,
                        "n_atoms": n_atoms, "min_len": 2, "max_len": max_len,
                        "protocol": "rq2",
                    })
    return configs


def run_configuration(cfg: dict, store_train: MnistStore,
                      store_test: MnistStore, epochs: int = 20,
                      copies: int = 5, seed: int = 0,
                      timeout_minutes: float = 60.0) -> dict:
    """One benchmark cell: generate data, train, evaluate."""
    alphabet = cfg["alphabet"]
    phi = parse_formula(cfg["formula"], alphabet)
    plan = SamplingPlan(alphabet=alphabet, mode=cfg["mode"],
                        protocol=cfg["protocol"], min_len=cfg["min_len"],
                        max_len=cfg["max_len"], seed=seed)
    split = sample_symbolic_dataset(phi, plan)
    train_pool = split_image_pools(store_train, seed=seed)["train"]
    test_pool = split_image_pools(store_test, seed=seed)["test"]
    train_recs = attach_images(split.train, phi, alphabet, cfg["mode"],
                               train_pool, copies, seed)
    test_recs = attach_images(split.test, phi, alphabet, cfg["mode"],
                              test_pool, copies, seed + 1)

    tc = TrainConfig(formula=cfg["formula"], alphabet=alphabet,
                     mode=cfg["mode"], epochs=epochs, seed=seed,
                     timeout_minutes=timeout_minutes)
    model, metrics = train(tc, train_recs, store_train)
    grounding, exact = evaluate_grounding(model, test_recs, store_test,
                                          cfg["mode"])
    seq_acc = evaluate_sequence(model, test_recs, store_test, tc)
    return {
        "suite": cfg["suite"], "mode": cfg["mode"], "formula": cfg["formula"],
        "n_atoms": cfg["n_atoms"], "max_len": cfg["max_len"], "seed": seed,
        "grounding_accuracy": round(grounding, 2),
        "grounding_exact_match": round(exact, 2),
        "sequence_accuracy": round(seq_acc, 2),
        "final_loss": round(metrics.epoch_losses[-1], 6)
        if metrics.epoch_losses else "",
        "wall_minutes": round(metrics.wall_minutes, 3),
        "timed_out": metrics.timed_out, "error": "",
    }


def run_benchmark(suite: str, out_path, modes=("me", "nme"),
                  subset: Optional[slice] = None, epochs: int = 20,
                  copies: int = 5, seed: int = 0,
                  timeout_minutes: float = 60.0,
                  store_train: Optional[MnistStore] = None,
                  store_test: Optional[MnistStore] = None) -> list:
    """Run a suite (or a subset of its rows) and emit one CSV row each.

    Individual failures are recorded in the `error` column and the suite
    continues.
    """
    if suite == "rq1":
        configs = rq1_configurations(modes)
    elif suite == "rq2":
        configs = rq2_configurations(modes, seed=seed)
    else:
        raise FormulaError(f"unknown suite {suite!r}; use 'rq1' or 'rq2'")
    if subset is not None:
        configs = configs[subset]
    if not configs:
        raise FormulaError("empty suite selection")

    if store_train is None:
        store_train = synthetic_digit_store(60, split="train", seed=seed)
    if store_test is None:
        store_test = synthetic_digit_store(60, split="test", seed=seed)

    rows = []
    for cfg in configs:
        try:
            row = run_configuration(cfg, store_train, store_test, epochs,
                                    copies, seed, timeout_minutes)
        except Exception as e:  # keep the suite alive on per-cell failures
            warnings.warn(f"benchmark cell failed: {e}")
            row = {c: "" for c in BENCH_COLUMNS}
            row.update({"suite": cfg["suite"], "mode": cfg["mode"],
                        "formula": cfg["formula"], "n_atoms": cfg["n_atoms"],
                        "max_len": cfg["max_len"], "seed": seed,
                        "error": str(e)})
        rows.append(row)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows
