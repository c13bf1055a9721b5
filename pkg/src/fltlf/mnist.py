"""IDX image/label containers and digit image pools.

`read_idx`/`write_idx` implement the IDX binary format bit-exactly:
big-endian 32-bit magic (0x00000803 for uint8 rank-3 image files,
0x00000801 for uint8 rank-1 label files), one big-endian 32-bit size per
dimension, then raw bytes.  `MnistStore` keeps the uint8 pixels and
exposes [0,1]-normalized views plus per-digit index pools.

When no MNIST files are available, `synthetic_digit_store` produces
linearly separable 28x28 glyph images through the same container, so the
whole pipeline (IDX files included) runs self-contained.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


def read_idx(path) -> np.ndarray:
    """Array from an IDX file (uint8 images rank 3 or labels rank 1)."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise IdxError(f"{path}: truncated header")
    (magic,) = struct.unpack(">i", raw[:4])
    if magic == IMAGE_MAGIC:
        rank = 3
    elif magic == LABEL_MAGIC:
        rank = 1
    else:
        raise IdxError(f"{path}: unsupported magic 0x{magic & 0xffffffff:08x}")
    header = 4 + 4 * rank
    if len(raw) < header:
        raise IdxError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{rank}i", raw[4:header])
    if any(d < 0 for d in dims):
        raise IdxError(f"{path}: negative dimension {dims}")
    count = int(np.prod(dims)) if dims else 0
    if len(raw) - header != count:
        raise IdxError(
            f"{path}: expected {count} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    array = np.asarray(array, dtype=np.uint8)
    if array.ndim == 3:
        magic = IMAGE_MAGIC
    elif array.ndim == 1:
        magic = LABEL_MAGIC
    else:
        raise IdxError(f"cannot encode rank-{array.ndim} array as IDX")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">i", magic))
        fh.write(struct.pack(f">{array.ndim}i", *array.shape))
        fh.write(array.tobytes())


@dataclass
class MnistStore:
    """Images + digit labels for one split, with per-digit index pools."""

    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) uint8
    split: str = "train"

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.shape[1:] != (28, 28):
            raise IdxError(f"images must be (N, 28, 28), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise IdxError(
                f"{self.images.shape[0]} images but {self.labels.shape} labels")
        self._pools = {
            d: np.flatnonzero(self.labels == d) for d in range(10)
        }

    def __len__(self) -> int:
        return self.images.shape[0]

    def normalized(self, idx) -> np.ndarray:
        """Images at `idx` as float64 in [0,1]."""
        return self.images[idx].astype(np.float64) / 255.0

    def pool(self, digit: int) -> np.ndarray:
        """Indices of all images of the given digit class."""
        if not 0 <= digit <= 9:
            raise ValueError(f"digit must be 0..9, got {digit}")
        return self._pools[digit]


def load_store(images_path, labels_path, split: str = "train") -> MnistStore:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3:
        raise IdxError(f"{images_path}: not an image file")
    if labels.ndim != 1:
        raise IdxError(f"{labels_path}: not a label file")
    if images.shape[0] != labels.shape[0]:
        raise IdxError(
            f"image/label count mismatch: {images.shape[0]} vs {labels.shape[0]}")
    return MnistStore(images, labels, split)


def load_mnist_dir(mnist_dir, split: str = "train") -> MnistStore:
    """Store from a directory holding the canonical MNIST file names."""
    base = Path(mnist_dir)
    prefix = "train" if split == "train" else "t10k"
    return load_store(base / f"{prefix}-images-idx3-ubyte",
                      base / f"{prefix}-labels-idx1-ubyte", split)


def _glyph(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One noisy 28x28 rendering of a digit-specific block pattern.

    Each digit owns a distinct 2x5 arrangement of bright 8x8 blocks
    (digit d lights blocks d and d+1 mod 10), so classes are separable
    but positively overlapping -- enough structure for a small MLP.
    """
    img = rng.integers(0, 40, size=(28, 28))
    for block in (digit, (digit + 1) % 10):
        r, c = divmod(block, 5)
        r0, c0 = 2 + 13 * r, 1 + 5 * c
        img[r0:r0 + 11, c0:c0 + 5] = rng.integers(180, 256, size=(11, 5))
    return img.astype(np.uint8)


def synthetic_digit_store(n_per_digit: int, digits=range(10), split: str = "train",
                          seed: int = 0) -> MnistStore:
    """Self-contained stand-in for MNIST with the same container shape."""
    rng = np.random.default_rng((seed, 0 if split == "train" else 1))
    images, labels = [], []
    for d in digits:
        for _ in range(n_per_digit):
            images.append(_glyph(d, rng))
            labels.append(d)
    order = rng.permutation(len(images))
    return MnistStore(np.stack(images)[order],
                      np.array(labels, dtype=np.uint8)[order], split)


def write_store(store: MnistStore, images_path, labels_path) -> None:
    write_idx(images_path, store.images)
    write_idx(labels_path, store.labels)
