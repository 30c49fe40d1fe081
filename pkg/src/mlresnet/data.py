"""Datasets: synthetic concentric rings, MNIST IDX ingestion, batching."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import IdxFormatError, ShapeError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


def _check_one_hot(labels):
    if labels.ndim != 2:
        raise ShapeError(f"labels must be (batch, classes), got {labels.shape}")
    if not np.isin(labels, (0.0, 1.0)).all() or not (labels.sum(axis=1) == 1.0).all():
        raise ValueError("every label row must be one-hot")


@dataclass
class BatchRef:
    """One batch of samples: inputs (p, q) and one-hot labels (p, m)."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ShapeError(f"inputs must be (batch, features), got {self.inputs.shape}")
        if len(self.inputs) != len(self.labels):
            raise ShapeError(
                f"{len(self.inputs)} inputs vs {len(self.labels)} labels"
            )
        _check_one_hot(self.labels)

    def __len__(self):
        return len(self.inputs)


@dataclass
class Dataset:
    """A full split with one-hot labels; ``pixel_mean`` records the
    centering offset applied to image data (None for synthetic data)."""

    inputs: np.ndarray
    labels: np.ndarray
    split: str = "train"
    pixel_mean: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if len(self.inputs) != len(self.labels):
            raise ShapeError(
                f"{len(self.inputs)} inputs vs {len(self.labels)} labels"
            )
        _check_one_hot(self.labels)
        if not np.isfinite(self.inputs).all():
            raise ValueError("dataset inputs must be finite")

    def __len__(self):
        return len(self.inputs)

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def as_batch(self) -> BatchRef:
        return BatchRef(self.inputs, self.labels)

    def subset(self, n) -> "Dataset":
        """First ``n`` samples, in stored order."""
        n = min(n, len(self))
        return Dataset(self.inputs[:n].copy(), self.labels[:n].copy(),
                       self.split, self.pixel_mean)


def ring_label(x) -> int:
    """1 when the point lies in the ring 2 <= |x| < 3, else 0."""
    r = float(np.linalg.norm(x))
    return 1 if 2.0 <= r < 3.0 else 0


def gen_circles(n_train=2000, n_test=1000, seed=0):
    """Two-class ring dataset on [-3, 3]^2.

    Points are drawn uniformly over the square; class 1 is the annulus with
    radius in [2, 3).  Returns (train, test) drawn from one seeded stream.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("sample counts must be positive")
    rng = np.random.default_rng(seed)
    points = rng.uniform(-3.0, 3.0, size=(n_train + n_test, 2))
    radii = np.linalg.norm(points, axis=1)
    classes = ((radii >= 2.0) & (radii < 3.0)).astype(np.intp)
    labels = np.eye(2)[classes]
    train = Dataset(points[:n_train], labels[:n_train], "train")
    test = Dataset(points[n_train:], labels[n_train:], "test")
    return train, test


def _read_idx(path, magic, header_fields):
    with open(path, "rb") as f:
        header_size = 4 * (1 + header_fields)
        header = f.read(header_size)
        if len(header) < header_size:
            raise IdxFormatError(f"{path}: truncated header")
        values = struct.unpack(f">{1 + header_fields}I", header)
        if values[0] != magic:
            raise IdxFormatError(
                f"{path}: bad magic 0x{values[0]:08x}, expected 0x{magic:08x}"
            )
        dims = values[1:]
        payload = f.read()
    expected = int(np.prod(dims))
    if len(payload) < expected:
        raise IdxFormatError(
            f"{path}: truncated payload, expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload[:expected], dtype=np.uint8)
    return data.reshape(dims)


def read_idx_images(path) -> np.ndarray:
    """Raw (count, rows, cols) uint8 pixels from an IDX image file."""
    return _read_idx(path, IDX_IMAGE_MAGIC, header_fields=3)


def read_idx_labels(path) -> np.ndarray:
    """Raw (count,) uint8 labels from an IDX label file."""
    return _read_idx(path, IDX_LABEL_MAGIC, header_fields=1)


def load_mnist(images_path, labels_path, pixel_mean=None, split="train") -> Dataset:
    """Load one MNIST split: scale pixels to [0, 1], then center per pixel.

    When ``pixel_mean`` is None the mean is computed from these images (the
    training usage); pass the training set's ``pixel_mean`` when loading the
    test split so both are centered identically.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise IdxFormatError(
            f"{images_path} holds {len(images)} images but {labels_path} "
            f"holds {len(labels)} labels"
        )
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"{labels_path}: label {labels.max()} outside 0..9")
    inputs = images.reshape(len(images), -1).astype(np.float64) / 255.0
    if pixel_mean is None:
        pixel_mean = inputs.mean(axis=0)
    else:
        pixel_mean = np.asarray(pixel_mean, dtype=np.float64)
        if pixel_mean.shape != (inputs.shape[1],):
            raise ShapeError(
                f"pixel_mean must have {inputs.shape[1]} entries, got {pixel_mean.shape}"
            )
    inputs -= pixel_mean
    one_hot = np.eye(10)[labels.astype(np.intp)]
    return Dataset(inputs, one_hot, split, pixel_mean=pixel_mean)


def batches(dataset, batch_size, seed, epoch):
    """Deterministic mini-batches for one epoch.

    The sample order is a shuffle keyed by (seed, epoch); batches are then
    contiguous slices, keeping a final short batch.  ``batch_size >= len``
    yields a single batch of everything.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = np.random.default_rng([seed, epoch]).permutation(len(dataset))
    return [
        BatchRef(dataset.inputs[idx], dataset.labels[idx])
        for idx in (
            order[start:start + batch_size]
            for start in range(0, len(dataset), batch_size)
        )
    ]
