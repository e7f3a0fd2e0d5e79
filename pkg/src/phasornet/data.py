"""Dataset ingestion: IDX-format image/label files plus fast synthetic data.

The IDX loaders accept plain or gzip-compressed files (sniffed by magic
bytes) and normalize pixel intensities to [0, 1].  Datasets are frozen
after construction and freely shareable between threads.
"""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

# filename stems used by the common distribution layout
_SPLIT_PREFIX = {"train": "train", "test": "t10k"}


@dataclass(frozen=True)
class ImageDataset:
    """Flattened images with class labels.

    images: (n, n_pixels) float array with intensities in [0, 1]
    labels: (n,) integer array, each < n_classes
    """

    images: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = ""

    def __post_init__(self):
        if self.images.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("images must be (n, pixels) and labels (n,)")
        if len(self.images) != len(self.labels):
            raise ValueError(
                f"count mismatch: {len(self.images)} images, {len(self.labels)} labels"
            )
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("intensities must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("label out of range")

    def __len__(self):
        return len(self.images)

    @property
    def n_pixels(self):
        return self.images.shape[1]

    def subset(self, limit):
        """First `limit` samples as a new dataset; None means everything."""
        if limit is None or limit >= len(self):
            return self
        if limit <= 0:
            raise ValueError("empty evaluation set")
        return ImageDataset(
            self.images[:limit], self.labels[:limit], self.n_classes, self.name
        )


def _read_file(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_idx_images(path):
    """Parse an IDX image file into a (count, rows*cols) array in [0, 1].

    Layout: big-endian magic 0x00000803, three big-endian uint32 dims
    (count, rows, cols), then unsigned-byte pixels in row-major order.
    """
    raw = _read_file(path)
    if len(raw) < 16:
        raise ValueError(f"not an IDX image file (only {len(raw)} header bytes): {path}")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"not an IDX image file (magic 0x{magic:08x}): {path}")
    expected = count * rows * cols
    payload = raw[16:]
    if len(payload) != expected:
        raise ValueError(
            f"truncated IDX image payload: expected {expected} bytes, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return pixels.reshape(count, rows * cols) / 255.0


def load_idx_labels(path):
    """Parse an IDX label file into an integer vector.

    Layout: big-endian magic 0x00000801, one uint32 count, then
    unsigned-byte labels.
    """
    raw = _read_file(path)
    if len(raw) < 8:
        raise ValueError(f"not an IDX label file (only {len(raw)} header bytes): {path}")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABEL_MAGIC:
        raise ValueError(f"not an IDX label file (magic 0x{magic:08x}): {path}")
    payload = raw[8:]
    if len(payload) != count:
        raise ValueError(
            f"truncated IDX label payload: expected {count} bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)


def _find_split_file(directory, stem):
    for suffix in ("", ".gz"):
        candidate = Path(directory) / (stem + suffix)
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def load_dataset_dir(directory, split="train", n_classes=10, name=None):
    """Load one split from a directory laid out in the usual IDX convention.

    Expects `train-images-idx3-ubyte[.gz]` / `train-labels-idx1-ubyte[.gz]`
    for the train split and the `t10k-` pair for the test split (the
    fashion variant ships under identical names).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    prefix = _SPLIT_PREFIX.get(split)
    if prefix is None:
        raise ValueError(f"unknown split {split!r} (expected 'train' or 'test')")
    images = load_idx_images(_find_split_file(directory, f"{prefix}-images-idx3-ubyte"))
    labels = load_idx_labels(_find_split_file(directory, f"{prefix}-labels-idx1-ubyte"))
    return ImageDataset(images, labels, n_classes, name or directory.name)


def synthetic_blobs(n_classes, n_pixels, samples_per_class, spread, seed=0):
    """Gaussian blobs around fixed random prototypes, clipped to [0, 1].

    Deterministic per seed; spread 0 collapses every class to its
    prototype.  Intended as a CI-speed stand-in for image data.
    """
    if n_classes < 1 or n_pixels < 1 or samples_per_class < 1:
        raise ValueError("n_classes, n_pixels, samples_per_class must be positive")
    rng = np.random.default_rng(seed)
    prototypes = rng.uniform(0.0, 1.0, size=(n_classes, n_pixels))
    images = []
    labels = []
    for c in range(n_classes):
        block = np.tile(prototypes[c], (samples_per_class, 1))
        if spread > 0:
            block = block + rng.normal(0.0, spread, size=block.shape)
        images.append(np.clip(block, 0.0, 1.0))
        labels.append(np.full(samples_per_class, c, dtype=np.int64))
    images = np.vstack(images)
    labels = np.concatenate(labels)
    order = rng.permutation(len(labels))
    return ImageDataset(images[order], labels[order], n_classes, name="blobs")
