"""Big-endian IDX container parsing for digit image/label files.

Supports the two record types used here: unsigned-byte images
(magic 0x00000803, dims count x 28 x 28) and unsigned-byte labels
(magic 0x00000801). Files ending in .gz are decompressed transparently.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import IdxFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class MnistDataset:
    """Flattened images scaled to [0, 1] plus their digit labels."""

    images: np.ndarray  # float64, (n, 784)
    labels: np.ndarray  # int64, (n,)
    split: str = "train"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise IdxFormatError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")

    @property
    def size(self) -> int:
        return self.images.shape[0]

    def subset(self, n: int) -> "MnistDataset":
        return MnistDataset(self.images[:n], self.labels[:n], self.split)


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _parse_header(data: bytes, n_fields: int, path) -> tuple[tuple[int, ...], int]:
    need = 4 * n_fields
    if len(data) < need:
        raise IdxFormatError(
            f"{path}: truncated header, {len(data)} bytes < {need} (offset {len(data)})")
    return struct.unpack(f">{n_fields}I", data[:need]), need


def parse_idx_images(data: bytes, path="<bytes>") -> np.ndarray:
    (magic, count, rows, cols), offset = _parse_header(data, 4, path)
    if magic != IMAGES_MAGIC:
        raise IdxFormatError(
            f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x} (offset 0)")
    expected = count * rows * cols
    if len(data) - offset != expected:
        raise IdxFormatError(
            f"{path}: expected {expected} pixel bytes, found {len(data) - offset} "
            f"(offset {offset})")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=offset)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def parse_idx_labels(data: bytes, path="<bytes>") -> np.ndarray:
    (magic, count), offset = _parse_header(data, 2, path)
    if magic != LABELS_MAGIC:
        raise IdxFormatError(
            f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x} (offset 0)")
    if len(data) - offset != count:
        raise IdxFormatError(
            f"{path}: expected {count} label bytes, found {len(data) - offset} "
            f"(offset {offset})")
    labels = np.frombuffer(data, dtype=np.uint8, offset=offset).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise IdxFormatError(f"{path}: label {labels.max()} out of digit range (offset {offset})")
    return labels


def load_idx(images_path, labels_path, split: str = "train") -> MnistDataset:
    """Parse an images/labels file pair into a dataset."""
    images = parse_idx_images(_read_bytes(images_path), images_path)
    labels = parse_idx_labels(_read_bytes(labels_path), labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} "
            f"holds {labels.shape[0]} labels")
    return MnistDataset(images=images, labels=labels, split=split)


def write_idx(dataset: MnistDataset, images_path, labels_path) -> None:
    """Serialize a dataset back to the two-file IDX layout (28 x 28 images)."""
    n = dataset.size
    side = int(round(np.sqrt(dataset.images.shape[1])))
    pixels = np.clip(np.rint(dataset.images * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGES_MAGIC, n, side, side))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">2I", LABELS_MAGIC, n))
        fh.write(dataset.labels.astype(np.uint8).tobytes())
