"""Benchmark dataset generation: symbolic-trace sampling, image
attachment, and a JSON Lines on-disk format.

Two sampling protocols are provided:

* ``exhaustive`` — every trace of length ``min_len..max_len`` (the
  grounding benchmark trains and tests on the same symbolic space).
* ``rq2`` — ME: 1000 traces stratified over (length, label) cells,
  split 500 train / 500 test with disjoint trace sets.  NME: every
  trace up to length 4 is enumerated, 20% goes to training and the rest
  to test, then each split is topped up (or subsampled) to 500 traces
  with longer sampled traces, keeping the splits disjoint.

Atoms map to digit classes by position (atom j -> digit j), so at most
ten atoms are supported.  Image sequences draw from per-split image-id
pools that never overlap; a two-atom NME instant references two image
ids and is composed at model-input time by pixel-wise maximum.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .crisp import SymbolicTrace, enumerate_traces, instant_choices, satisfies
from .formulas import Alphabet, Formula, FormulaError, format_formula, parse_formula
from .mnist import MnistStore


@dataclass
class SamplingPlan:
    alphabet: Alphabet
    mode: str                    # "me" | "nme"
    protocol: str = "exhaustive"  # "exhaustive" | "rq2"
    min_len: int = 1
    max_len: int = 4
    total: int = 1000            # rq2 ME: traces before the 50/50 split
    per_split: int = 500         # rq2: symbolic traces per split
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("me", "nme"):
            raise FormulaError(f"unknown mode {self.mode!r}")
        if self.protocol not in ("exhaustive", "rq2"):
            raise FormulaError(f"unknown protocol {self.protocol!r}")
        if not 1 <= self.min_len <= self.max_len:
            raise FormulaError(f"bad length range {self.min_len}..{self.max_len}")
        if len(self.alphabet) > 10:
            raise FormulaError("at most 10 atoms (digit classes) supported")


@dataclass
class SymbolicSplit:
    train: list  # (SymbolicTrace, bool) pairs
    test: list


@dataclass
class DatasetRecord:
    formula: str
    alphabet: tuple
    mode: str
    trace: SymbolicTrace
    label: bool
    image_ids: tuple  # one tuple of ids per instant

    def to_json(self) -> str:
        return json.dumps({
            "formula": self.formula,
            "alphabet": list(self.alphabet),
            "mode": self.mode,
            "trace": [sorted(inst) for inst in self.trace.instants],
            "label": self.label,
            "image_ids": [list(ids) for ids in self.image_ids],
        })

    @staticmethod
    def from_json(line: str) -> "DatasetRecord":
        obj = json.loads(line)
        return DatasetRecord(
            formula=obj["formula"],
            alphabet=tuple(obj["alphabet"]),
            mode=obj["mode"],
            trace=SymbolicTrace([frozenset(i) for i in obj["trace"]]),
            label=bool(obj["label"]),
            image_ids=tuple(tuple(int(i) for i in ids)
                            for ids in obj["image_ids"]),
        )


# -- symbolic sampling -------------------------------------------------------

def _random_trace(choices, length: int, rng: np.random.Generator) -> SymbolicTrace:
    picks = rng.integers(0, len(choices), size=length)
    return SymbolicTrace([choices[i] for i in picks])


def _stratum_pools(phi: Formula, plan: SamplingPlan,
                   rng: np.random.Generator) -> dict:
    """Distinct candidate traces per (length, label) stratum.

    Small spaces are enumerated exactly; large ones are filled by
    rejection sampling up to a per-stratum cap.
    """
    choices = instant_choices(plan.alphabet, plan.mode)
    cap = 4 * plan.total
    pools: dict = {}
    for n in range(plan.min_len, plan.max_len + 1):
        space = len(choices) ** n
        by_label = {True: [], False: []}
        if space <= 100_000:
            for combo in itertools.product(choices, repeat=n):
                t = SymbolicTrace(combo)
                by_label[satisfies(t, phi)].append(t)
        else:
            seen: set = set()
            attempts = 0
            while attempts < 50 * cap and (len(by_label[True]) < cap
                                           or len(by_label[False]) < cap):
                attempts += 1
                t = _random_trace(choices, n, rng)
                if t in seen:
                    continue
                seen.add(t)
                lab = satisfies(t, phi)
                if len(by_label[lab]) < cap:
                    by_label[lab].append(t)
        for lab in (True, False):
            pools[(n, lab)] = by_label[lab]
    return pools


def _fill_quota(distinct: list, want: int, lab: bool,
                rng: np.random.Generator) -> list:
    """`want` labelled traces drawn from `distinct` (replacement if short)."""
    if len(distinct) >= want:
        idx = rng.choice(len(distinct), size=want, replace=False)
    else:
        warnings.warn(
            f"stratum side has only {len(distinct)} distinct traces for "
            f"{want} requested; sampling with replacement")
        idx = np.concatenate([np.arange(len(distinct)),
                              rng.integers(0, len(distinct),
                                           size=want - len(distinct))])
    return [(distinct[i], lab) for i in idx]


def _quotas(total: int, alive: int) -> list:
    """Distribute `total` as evenly as possible over `alive` strata."""
    base, extra = divmod(total, alive)
    return [base + (1 if k < extra else 0) for k in range(alive)]


def _stratified_me_split(phi: Formula, plan: SamplingPlan) -> tuple:
    """Disjoint stratified train/test trace sets (plan.per_split each).

    Each stratum's distinct traces are first partitioned between the two
    splits, then each side fills its quota from its own partition, so
    train and test never share a symbolic trace even when a tiny stratum
    forces sampling with replacement.
    """
    rng = np.random.default_rng(plan.seed)
    pools = _stratum_pools(phi, plan, rng)

    sides: dict = {"train": {}, "test": {}}
    for key, distinct in sorted(pools.items(), key=repr):
        if not distinct:
            warnings.warn(f"stratum (length={key[0]}, label={key[1]}) is "
                          "empty; rebalancing counts")
            continue
        order = rng.permutation(len(distinct))
        cut = (len(distinct) + 1) // 2
        sides["train"][key] = [distinct[i] for i in order[:cut]]
        sides["test"][key] = [distinct[i] for i in order[cut:]]
    if not sides["train"]:
        raise FormulaError("no satisfiable stratum for this formula")

    out = {"train": [], "test": []}
    for side in ("train", "test"):
        alive = [k for k, v in sorted(sides[side].items(), key=repr) if v]
        if not alive:
            raise FormulaError(
                f"no stratum has traces left for the {side} split")
        quotas = _quotas(plan.per_split, len(alive))
        for key, want in zip(alive, quotas):
            out[side].extend(_fill_quota(sides[side][key], want, key[1], rng))
    return out["train"], out["test"]


def sample_symbolic_dataset(phi: Formula, plan: SamplingPlan) -> SymbolicSplit:
    """Labelled symbolic train/test trace sets, deterministic per seed."""
    rng = np.random.default_rng((plan.seed, 1))
    if plan.protocol == "exhaustive":
        labelled = [(t, satisfies(t, phi))
                    for t in enumerate_traces(plan.alphabet, plan.min_len,
                                              plan.max_len, plan.mode)]
        if labelled and len({lab for _, lab in labelled}) == 1:
            warnings.warn("all traces share one label; dataset is degenerate")
        return SymbolicSplit(train=list(labelled), test=list(labelled))

    if plan.mode == "me":
        train, test = _stratified_me_split(phi, plan)
        if train and len({lab for _, lab in train}) == 1:
            warnings.warn("all traces share one label; dataset is degenerate")
        return SymbolicSplit(train=train, test=test)

    # NME protocol: enumerate everything up to length 4, 20%/80% split,
    # then top up with longer sampled traces to per_split each.
    enum_max = min(4, plan.max_len)
    short = [t for t in enumerate_traces(plan.alphabet, plan.min_len,
                                         enum_max, "nme")]
    order = rng.permutation(len(short))
    cut = max(1, int(round(0.2 * len(short)))) if short else 0
    train_t = [short[i] for i in order[:cut]]
    test_t = [short[i] for i in order[cut:]]

    choices = instant_choices(plan.alphabet, "nme")
    seen = set(short)

    def top_up(bucket: list) -> list:
        if len(bucket) > plan.per_split:
            keep = rng.permutation(len(bucket))[: plan.per_split]
            return [bucket[i] for i in keep]
        attempts = 0
        while len(bucket) < plan.per_split and attempts < 200 * plan.per_split:
            attempts += 1
            if plan.max_len <= enum_max:
                warnings.warn("trace space exhausted; sampling with replacement")
                n = int(rng.integers(plan.min_len, plan.max_len + 1))
                bucket.append(_random_trace(choices, n, rng))
                continue
            n = int(rng.integers(enum_max + 1, plan.max_len + 1))
            t = _random_trace(choices, n, rng)
            if t in seen:
                continue
            seen.add(t)
            bucket.append(t)
        return bucket

    train_t, test_t = top_up(train_t), top_up(test_t)
    return SymbolicSplit(
        train=[(t, satisfies(t, phi)) for t in train_t],
        test=[(t, satisfies(t, phi)) for t in test_t])


# -- image attachment --------------------------------------------------------

def split_image_pools(store: MnistStore, seed: int = 0,
                      train_fraction: float = 0.5) -> dict:
    """Disjoint per-split image-id pools: {'train'|'test': {digit: ids}}."""
    rng = np.random.default_rng((seed, 2))
    pools = {"train": {}, "test": {}}
    for d in range(10):
        ids = store.pool(d)
        if ids.size == 0:
            continue
        order = rng.permutation(ids.size)
        cut = max(1, int(round(train_fraction * ids.size))) if ids.size > 1 else 1
        pools["train"][d] = ids[order[:cut]]
        pools["test"][d] = ids[order[cut:]]
    return pools


def attach_images(labelled_traces: Sequence, phi: Formula, alphabet: Alphabet,
                  mode: str, pool: dict, copies_per_trace: int = 5,
                  seed: int = 0) -> list:
    """`copies_per_trace` image sequences per symbolic trace.

    `pool` maps digit class -> allowed image ids (one split's share of
    the store).  An ME instant references one id of the atom's digit; a
    two-atom NME instant references one id per atom.
    """
    rng = np.random.default_rng((seed, 3))
    formula_str = format_formula(phi)
    records = []
    for trace, label in labelled_traces:
        for _ in range(copies_per_trace):
            per_instant = []
            for inst in trace.instants:
                ids = []
                for atom in sorted(inst):
                    digit = alphabet.index(atom)
                    digit_pool = pool.get(digit)
                    if digit_pool is None or len(digit_pool) == 0:
                        raise FormulaError(
                            f"image pool has no images for digit {digit}")
                    ids.append(int(digit_pool[rng.integers(len(digit_pool))]))
                per_instant.append(tuple(ids))
            records.append(DatasetRecord(
                formula=formula_str, alphabet=alphabet.atoms, mode=mode,
                trace=trace, label=bool(label),
                image_ids=tuple(per_instant)))
    return records


def compose_observation(store: MnistStore, ids: Sequence[int]) -> np.ndarray:
    """Normalized 28x28 observation; two ids overlay by pixel-wise max."""
    imgs = store.normalized(np.asarray(ids, dtype=np.int64))
    return imgs.max(axis=0)


# -- on-disk format ----------------------------------------------------------

class DatasetFormatError(ValueError):
    pass


def write_dataset(records: Sequence[DatasetRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_dataset(path, n_images: Optional[int] = None,
                 check_labels: bool = True) -> Iterator[DatasetRecord]:
    """Stream records, validating labels and image-id ranges as we go."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = DatasetRecord.from_json(line)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise DatasetFormatError(f"{path}:{lineno}: malformed record "
                                         f"({e})") from e
            if len(rec.image_ids) != len(rec.trace):
                raise DatasetFormatError(
                    f"{path}:{lineno}: {len(rec.image_ids)} image-id groups "
                    f"for {len(rec.trace)} instants")
            if n_images is not None:
                for ids in rec.image_ids:
                    for i in ids:
                        if not 0 <= i < n_images:
                            raise DatasetFormatError(
                                f"{path}:{lineno}: image id {i} out of range")
            if check_labels:
                alphabet = Alphabet(rec.alphabet)
                phi = parse_formula(rec.formula, alphabet)
                if satisfies(rec.trace, phi) != rec.label:
                    raise DatasetFormatError(
                        f"{path}:{lineno}: stored label disagrees with the "
                        "crisp oracle")
            yield rec
