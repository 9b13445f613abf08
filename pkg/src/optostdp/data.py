"""Datasets: the XOR set, IDX (MNIST) parsing, pooling and sampling."""

from __future__ import annotations

import gzip
import hashlib
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
GZIP_MAGIC = b"\x1f\x8b"


class IdxFormatError(ValueError):
    pass


class IdxConsistencyError(ValueError):
    pass


class IdxTruncatedError(IOError):
    pass


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labelled feature matrix with a content digest.

    ``class_map`` records original labels in new-label order after
    ``class_filter`` (``None`` when labels are untouched).  ``image_shape``
    is kept for image data so pooling can validate geometry.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    digest: str
    class_map: tuple[int, ...] | None = None
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ValueError("features must be a 2-D array (n_samples, feature_dim)")
        if y.shape != (x.shape[0],):
            raise ValueError("one label per sample required")
        if x.size and (x.min() < 0 or x.max() > 1):
            raise ValueError("features must lie in [0, 1]")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(self.features[k], int(self.labels[k])) for k in range(len(self))]

    def subset(self, indices: Sequence[int], tag: str = "subset") -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        digest = _digest(self.digest.encode(), tag.encode(), idx.tobytes())
        return Dataset(self.features[idx], self.labels[idx], self.n_classes, digest,
                       self.class_map, self.image_shape)


def _digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(len(p).to_bytes(8, "little"))
        h.update(p)
    return h.hexdigest()


def xor_dataset() -> Dataset:
    x = np.array([[0.2, 0.2], [0.2, 1.0], [1.0, 0.2], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    return Dataset(x, y, 2, _digest(b"xor", x.tobytes(), y.tobytes()))


# ---------------------------------------------------------------------------
# IDX
# ---------------------------------------------------------------------------

def _read_maybe_gzip(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == GZIP_MAGIC:
        return gzip.decompress(raw)
    return raw


def _parse_header(buf: bytes, path: Path, magic: int, ndims: int) -> tuple[int, ...]:
    need = 4 * (1 + ndims)
    if len(buf) < need:
        raise IdxTruncatedError(f"{path}: header truncated at byte {len(buf)} (need {need})")
    found = struct.unpack_from(">I", buf, 0)[0]
    if found != magic:
        raise IdxFormatError(f"{path}: magic number {found}, expected {magic}")
    return struct.unpack_from(f">{ndims}I", buf, 4)


def read_idx_images(path: str | Path) -> tuple[np.ndarray, bytes]:
    path = Path(path)
    buf = _read_maybe_gzip(path)
    n, rows, cols = _parse_header(buf, path, IMAGE_MAGIC, 3)
    need = 16 + n * rows * cols
    if len(buf) < need:
        raise IdxTruncatedError(
            f"{path}: truncated image data at byte offset {len(buf)} (expected {need} bytes)")
    pixels = np.frombuffer(buf, dtype=np.uint8, count=n * rows * cols, offset=16)
    return pixels.reshape(n, rows, cols), buf


def read_idx_labels(path: str | Path) -> tuple[np.ndarray, bytes]:
    path = Path(path)
    buf = _read_maybe_gzip(path)
    (n,) = _parse_header(buf, path, LABEL_MAGIC, 1)
    need = 8 + n
    if len(buf) < need:
        raise IdxTruncatedError(
            f"{path}: truncated label data at byte offset {len(buf)} (expected {need} bytes)")
    return np.frombuffer(buf, dtype=np.uint8, count=n, offset=8), buf


def load_idx(images_path: str | Path, labels_path: str | Path) -> Dataset:
    images, ibuf = read_idx_images(images_path)
    labels, lbuf = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} "
            f"holds {labels.shape[0]} labels")
    n_classes = int(labels.max()) + 1 if labels.size else 1
    feats = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(feats, labels.astype(np.int64), n_classes,
                   _digest(ibuf, lbuf), None, (images.shape[1], images.shape[2]))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: str | Path,
              labels_path: str | Path, compress: bool | None = None) -> None:
    """Write uint8 images ``(n, rows, cols)`` and labels ``(n,)`` as IDX files.

    By default files whose name ends in ``.gz`` are gzip-compressed.
    """
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.dtype != np.uint8 or labels.dtype != np.uint8:
        raise ValueError("IDX writer expects uint8 arrays")
    if images.ndim != 3 or labels.shape != (images.shape[0],):
        raise ValueError("images must be (n, rows, cols) and labels (n,)")
    n, rows, cols = images.shape
    ibuf = struct.pack(">4I", IMAGE_MAGIC, n, rows, cols) + images.tobytes()
    lbuf = struct.pack(">2I", LABEL_MAGIC, n) + labels.tobytes()
    for path, buf in ((Path(images_path), ibuf), (Path(labels_path), lbuf)):
        gz = path.suffix == ".gz" if compress is None else compress
        # mtime=0 keeps compressed output byte-stable
        path.write_bytes(gzip.compress(buf, mtime=0) if gz else buf)


def dataset_to_uint8(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if ds.image_shape is None:
        raise ValueError("dataset carries no image geometry")
    pix = np.rint(ds.features * 255.0).astype(np.uint8)
    return pix.reshape(len(ds), *ds.image_shape), ds.labels.astype(np.uint8)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def max_pool_2x2(features: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Max over disjoint 2×2 blocks; accepts one flat image or a batch of them."""
    x = np.asarray(features)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected a flat image or a (n, pixels) batch")
    if shape is None:
        side = int(round(np.sqrt(x.shape[1])))
        if side * side != x.shape[1]:
            raise ValueError(f"feature_dim {x.shape[1]} is not a square image")
        shape = (side, side)
    rows, cols = shape
    if rows * cols != x.shape[1]:
        raise ValueError(f"shape {shape} does not match feature_dim {x.shape[1]}")
    if rows % 2 or cols % 2:
        raise ValueError(f"image shape {shape} has an odd dimension")
    out = x.reshape(-1, rows // 2, 2, cols // 2, 2).max(axis=(2, 4)).reshape(x.shape[0], -1)
    return out[0] if single else out


def pool_dataset(ds: Dataset) -> Dataset:
    shape = ds.image_shape
    pooled = max_pool_2x2(ds.features, shape)
    if shape is None:
        side = int(round(np.sqrt(ds.feature_dim)))
        shape = (side, side)
    return Dataset(pooled, ds.labels, ds.n_classes, _digest(ds.digest.encode(), b"maxpool2x2"),
                   ds.class_map, (shape[0] // 2, shape[1] // 2))


def class_filter(ds: Dataset, classes: Sequence[int]) -> Dataset:
    classes = [int(c) for c in classes]
    if not classes:
        raise ValueError("class_filter needs at least one class")
    if len(set(classes)) != len(classes):
        raise ValueError("duplicate classes requested")
    present = set(np.unique(ds.labels).tolist())
    missing = [c for c in classes if c not in present]
    if missing:
        warnings.warn(f"requested classes absent from dataset: {missing}", stacklevel=2)
    lut = np.full(max(max(classes), int(ds.labels.max(initial=0))) + 1, -1, dtype=np.int64)
    for new, old in enumerate(classes):
        lut[old] = new
    mask = np.isin(ds.labels, classes)
    original = tuple(classes) if ds.class_map is None else tuple(ds.class_map[c] for c in classes)
    digest = _digest(ds.digest.encode(), b"classes", np.asarray(classes).tobytes())
    return Dataset(ds.features[mask], lut[ds.labels[mask]], len(classes), digest,
                   original, ds.image_shape)


def sample_indices(n_total: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if n_total < 1:
        raise ValueError("cannot sample from an empty dataset")
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.choice(n_total, size=n, replace=n > n_total)


def sample_batch(ds: Dataset, n: int, rng: np.random.Generator) -> list[Sample]:
    idx = sample_indices(len(ds), n, rng)
    return [Sample(ds.features[k], int(ds.labels[k])) for k in idx]


def random_subset(ds: Dataset, n: int, seed: int) -> Dataset:
    """First ``n`` samples of a seeded permutation (all samples if fewer)."""
    perm = np.random.default_rng(seed).permutation(len(ds))[:n]
    return ds.subset(np.sort(perm), tag=f"random_subset:{seed}")


def default_mnist_dir() -> Path:
    """Bundled 5,000-image MNIST subset shipped with the repository."""
    return Path(__file__).resolve().parents[2] / "data" / "mnist"


def load_mnist_split(directory: str | Path | None, split: str) -> Dataset:
    d = Path(directory) if directory is not None else default_mnist_dir()
    prefix = {"train": "train", "test": "t10k"}[split]
    candidates = [(d / f"{prefix}-images-idx3-ubyte{ext}", d / f"{prefix}-labels-idx1-ubyte{ext}")
                  for ext in (".gz", "")]
    for img, lab in candidates:
        if img.exists() and lab.exists():
            return load_idx(img, lab)
    raise FileNotFoundError(f"no {split} IDX files under {d}")
