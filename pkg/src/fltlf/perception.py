"""Perception network (784 -> 128 -> |P| MLP), Adam, and checkpoints.

The ME head applies softmax (outputs sum to one per observation); the
NME head applies sigmoid per atom.  Checkpoints are JSON: a version tag,
the head mode, and each parameter as shape + row-major values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .autodiff import Tensor

HIDDEN = 128
INPUT = 28 * 28
CHECKPOINT_VERSION = 1


class PerceptionModel:
    def __init__(self, n_atoms: int, head: str, seed: int = 0):
        if head not in ("me", "nme"):
            raise ValueError("head must be 'me' or 'nme'")
        self.head = head
        self.n_atoms = n_atoms
        rng = np.random.default_rng(seed)
        scale1 = np.sqrt(2.0 / INPUT)
        scale2 = np.sqrt(2.0 / HIDDEN)
        self.params: dict[str, Tensor] = {
            "w1": Tensor(rng.normal(0.0, scale1, (INPUT, HIDDEN)),
                         requires_grad=True),
            "b1": Tensor(np.zeros(HIDDEN), requires_grad=True),
            "w2": Tensor(rng.normal(0.0, scale2, (HIDDEN, n_atoms)),
                         requires_grad=True),
            "b2": Tensor(np.zeros(n_atoms), requires_grad=True),
        }

    def forward(self, images: Union[np.ndarray, Tensor]) -> Tensor:
        """Fuzzy atom values for a (B, 784) batch of flattened images."""
        x = images if isinstance(images, Tensor) else Tensor(images)
        h = (x @ self.params["w1"] + self.params["b1"]).relu()
        logits = h @ self.params["w2"] + self.params["b2"]
        if self.head == "me":
            return logits.softmax(axis=-1)
        return logits.sigmoid()

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def perceive(model: PerceptionModel, image: np.ndarray) -> np.ndarray:
    """Fuzzy vector for a single 28x28 (or flat 784) image in [0,1]."""
    flat = np.asarray(image, dtype=np.float64).reshape(-1)
    if flat.shape[0] != INPUT:
        raise ValueError(f"expected {INPUT} pixels, got {flat.shape[0]}")
    return model.forward(flat.reshape(1, INPUT)).data[0]


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], state: AdamState) -> None:
    """One Adam update from the accumulated gradients (missing grads skip)."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != param {p.data.shape}")
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m[...] = state.beta1 * m + (1.0 - state.beta1) * g
        v[...] = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def save_checkpoint(model: PerceptionModel, path: str) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "head": model.head,
        "n_atoms": model.n_atoms,
        "params": {
            name: {"shape": list(p.data.shape),
                   "values": p.data.reshape(-1).tolist()}
            for name, p in model.params.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str) -> PerceptionModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    model = PerceptionModel(payload["n_atoms"], payload["head"])
    for name, entry in payload["params"].items():
        data = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        if name not in model.params:
            raise ValueError(f"unknown parameter {name!r} in checkpoint")
        model.params[name] = Tensor(data, requires_grad=True)
    return model
