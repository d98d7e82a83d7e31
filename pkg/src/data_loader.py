"""
Dataset loading and preprocessing for the bound-minimisation experiments.

This module reads the two benchmark file formats (IDX images/labels and the
sparse "label idx:val" text format), normalises every row into the unit
Euclidean ball, and produces deterministic train/test and prior/certificate
splits. A Gaussian-blob generator provides synthetic data for tests and
smoke runs. Nothing is downloaded: files are read from DATA_DIR.
"""

import gzip
import io
import math
import os
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np
from sklearn.datasets import load_svmlight_file

from src import config
from src.utils.reporting import content_hash

__all__ = [
    "DataLoadError",
    "Dataset",
    "project_unit_ball",
    "minmax_fit",
    "minmax_scale",
    "load_idx",
    "load_sparse_text",
    "split_half",
    "split_prior",
    "synth_gaussian_blobs",
    "resolve_data_dir",
    "load_dataset",
]

SplitTag = Literal["full", "train", "test", "cert", "prior"]

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


class DataLoadError(Exception):
    """Custom exception for data loading errors."""

    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Dense labelled sample with rows in the unit ball.

    ``indices`` are row positions in the source file, so splits of the same
    source can be checked for disjointness.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    split_tag: SplitTag = "full"
    fingerprint: str = ""
    indices: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValueError(
                f"labels must have shape ({features.shape[0]},), got {labels.shape}"
            )
        if np.any(labels < 0) or np.any(labels >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        norms = np.linalg.norm(features, axis=1)
        if np.any(norms > 1.0 + config.UNIT_BALL_TOL):
            raise ValueError(f"rows must lie in the unit ball, max norm {norms.max():.6f}")
        indices = (
            np.arange(features.shape[0]) if self.indices is None else np.asarray(self.indices)
        )
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "indices", indices)
        if not self.fingerprint:
            object.__setattr__(self, "fingerprint", content_hash(features, labels))

    @property
    def m(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return self.m

    def subset(self, rows: np.ndarray, split_tag: SplitTag) -> "Dataset":
        """Rows ``rows`` (positions in this dataset) as a new tagged dataset."""
        rows = np.asarray(rows, dtype=np.int64)
        assert self.indices is not None
        return replace(
            self,
            features=self.features[rows],
            labels=self.labels[rows],
            split_tag=split_tag,
            indices=self.indices[rows],
            fingerprint=content_hash(self.fingerprint.encode("ascii"), rows),
        )


def project_unit_ball(features: np.ndarray) -> np.ndarray:
    """Divide every row with norm > 1 by its norm."""
    norms = np.linalg.norm(features, axis=1)
    return features / np.maximum(1.0, norms)[:, None]


def minmax_fit(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (low, span) of ``features``; constant columns get span 1."""
    low = features.min(axis=0)
    span = features.max(axis=0) - low
    span[span == 0.0] = 1.0
    return low, span


def minmax_scale(
    features: np.ndarray, fitted: tuple[np.ndarray, np.ndarray] | None = None
) -> np.ndarray:
    """
    Per-feature min-max scaling with ``fitted`` = (low, span), fitted on
    ``features`` itself when omitted; rows outside the fitting set may leave [0, 1].
    """
    low, span = minmax_fit(features) if fitted is None else fitted
    return (features - low) / span


def _open_binary(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path: Path, magic_expected: int, what: str) -> tuple[np.ndarray, tuple[int, ...]]:
    with _open_binary(path) as handle:
        blob = handle.read()
    if len(blob) < 8:
        raise DataLoadError(f"IDX {what} file truncated: {path}")
    magic, count = struct.unpack_from(">II", blob, 0)
    if magic != magic_expected:
        raise DataLoadError(f"Magic number mismatch in {what} file {path} ({magic})")
    dims: tuple[int, ...] = (count,)
    offset = 8
    if magic_expected == IDX_IMAGE_MAGIC:
        if len(blob) < 16:
            raise DataLoadError(f"IDX {what} file truncated: {path}")
        rows, cols = struct.unpack_from(">II", blob, 8)
        dims = (count, rows, cols)
        offset = 16
    expected = math.prod(dims)
    payload = np.frombuffer(blob, dtype=np.uint8, offset=offset)
    if payload.shape[0] < expected:
        raise DataLoadError(
            f"IDX {what} file truncated: {path} has {payload.shape[0]} of {expected} bytes"
        )
    return payload[:expected].reshape(dims), dims


def load_idx(images_path: Path, labels_path: Path, name: str = "idx") -> Dataset:
    """
    Parse an IDX image/label pair (optionally gzipped).

    Pixels are scaled to [0, 1], images flattened, and rows projected to the
    unit ball.

    Raises:
        DataLoadError: If files are missing, magic numbers are wrong, a file is
            truncated, or image and label counts differ
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    try:
        images, image_dims = _read_idx(images_path, IDX_IMAGE_MAGIC, "image")
        labels, label_dims = _read_idx(labels_path, IDX_LABEL_MAGIC, "label")
        if image_dims[0] != label_dims[0]:
            raise DataLoadError(
                f"Image count {image_dims[0]} does not match label count {label_dims[0]}"
            )
        features = images.reshape(image_dims[0], -1).astype(np.float64) / 255.0
        labels = labels.astype(np.int64)
        class_count = max(2, int(labels.max()) + 1)
        fingerprint = content_hash(images_path.read_bytes(), labels_path.read_bytes())
        print(f"✓ Loaded {name}: {features.shape[0]} images of {features.shape[1]} pixels")
        return Dataset(
            project_unit_ball(features), labels, class_count, fingerprint=fingerprint, name=name
        )
    except FileNotFoundError as e:
        raise DataLoadError(f"{name} data file not found: {e.filename}")
    except DataLoadError:
        raise
    except Exception as e:
        raise DataLoadError(f"Error loading {name} data: {str(e)}")


def _read_sparse_text(
    path: Path, n_features: int, name: str
) -> tuple[np.ndarray, np.ndarray, bytes]:
    """Dense features, raw labels and file bytes of a svmlight file; no scaling."""
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise DataLoadError(f"{name} data file not found: {path}")

    try:
        matrix, raw_labels = load_svmlight_file(
            io.BytesIO(raw), zero_based=False, dtype=np.float64
        )
    except (ValueError, UnicodeDecodeError) as e:
        raise DataLoadError(f"{name}: malformed sparse text ({e})")

    if raw_labels.size == 0:
        raise DataLoadError(f"{name} contains no examples: {path}")
    if matrix.shape[1] > n_features:
        raise DataLoadError(
            f"{name}: feature index {matrix.shape[1]} outside [1, {n_features}]"
        )
    matrix.resize((matrix.shape[0], n_features))
    return matrix.toarray(), np.asarray(raw_labels), raw


def _sparse_dataset(
    features: np.ndarray, raw_labels: np.ndarray, raw: bytes, name: str
) -> Dataset:
    classes, labels = np.unique(raw_labels, return_inverse=True)
    print(
        f"✓ Loaded {name}: {features.shape[0]} rows, {features.shape[1]} features, "
        f"{len(classes)} classes"
    )
    return Dataset(
        project_unit_ball(features),
        labels.astype(np.int64),
        max(2, len(classes)),
        fingerprint=content_hash(raw),
        name=name,
    )


def load_sparse_text(
    path: Path, n_features: int, name: str | None = None, scale: bool = False
) -> Dataset:
    """
    Parse a sparse "label idx:val idx:val ..." file with 1-based indices.

    Labels are remapped to 0..|Y|-1 in sorted order of their original values.

    Args:
        path: Text file
        n_features: Number of columns of the dense matrix
        name: Dataset name for messages (defaults to the file name)
        scale: Min-max scale with statistics of the whole file before the
            unit-ball projection

    Raises:
        DataLoadError: On a missing file, a malformed line or an index out of range
    """
    path = Path(path)
    name = name or path.name
    features, raw_labels, raw = _read_sparse_text(path, n_features, name)
    if scale:
        features = minmax_scale(features)
    return _sparse_dataset(features, raw_labels, raw, name)


def _half_rows(m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if m < 2:
        raise ValueError(f"split_half needs at least 2 rows, got {m}")
    order = np.random.default_rng(seed).permutation(m)
    n_train = (m + 1) // 2
    return order[:n_train], order[n_train:]


def split_half(data: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """
    Seeded 50/50 split into (train, test); with odd m the extra row goes to train.

    Raises:
        ValueError: If m < 2
    """
    train_rows, test_rows = _half_rows(data.m, seed)
    return data.subset(train_rows, "train"), data.subset(test_rows, "test")


def split_prior(train: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """
    Seeded split into (prior_set, cert_set) with ⌊fraction·m⌋ prior rows.

    Raises:
        ValueError: If fraction is outside (0, 1) or either side would be empty
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n_prior = int(math.floor(fraction * train.m))
    if n_prior < 1 or n_prior >= train.m:
        raise ValueError(f"fraction {fraction} of {train.m} rows gives a degenerate split")
    order = np.random.default_rng(seed).permutation(train.m)
    return train.subset(order[:n_prior], "prior"), train.subset(order[n_prior:], "cert")


def _blob_centers(n: int, class_count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm class directions; orthonormal when |Y| <= n."""
    gaussian = rng.standard_normal((n, class_count))
    if class_count <= n:
        q, _ = np.linalg.qr(gaussian)
        return q[:, :class_count].T
    return (gaussian / np.linalg.norm(gaussian, axis=0)).T


def synth_gaussian_blobs(
    m: int,
    n: int,
    class_count: int,
    separation: float,
    seed: int,
    center_seed: int | None = None,
    noise: float = 0.1,
) -> Dataset:
    """
    Balanced isotropic Gaussian clusters around unit class directions.

    Row i of class k is separation·u_k + noise·ξ, projected to the unit ball.
    ``center_seed`` fixes the class directions independently of the sample
    seed, so fresh samples of the same distribution can be drawn.
    """
    if m < class_count:
        raise ValueError(f"m ({m}) must be >= class_count ({class_count})")
    center_rng = np.random.default_rng(seed if center_seed is None else center_seed)
    centers = _blob_centers(n, class_count, center_rng)
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(m) % class_count)
    features = separation * centers[labels] + noise * rng.standard_normal((m, n))
    return Dataset(
        project_unit_ball(features),
        labels,
        class_count,
        name=f"blobs-{class_count}x{n}",
    )


def resolve_data_dir(data_dir: Path | str | None = None) -> Path:
    """
    Resolve the benchmark directory from an explicit path or the DATA_DIR env var.

    Raises:
        DataLoadError: If the directory does not exist
    """
    chosen = Path(data_dir) if data_dir else Path(os.environ.get("DATA_DIR", config.DATA_DIR))
    if not chosen.is_dir():
        raise DataLoadError(
            f"Data directory not found: {chosen} "
            "(set --data-dir or the DATA_DIR environment variable)"
        )
    return chosen


def load_dataset(
    name: str, data_dir: Path | str | None = None, seed: int = config.RANDOM_SEED
) -> tuple[Dataset, Dataset]:
    """
    Load a registered benchmark as a (train, test) pair.

    IDX datasets keep their original train/test files; the sparse UCI datasets
    get a seeded 50/50 split, min-max scaled with train-half statistics;
    ``blobs`` is generated in memory.

    Raises:
        DataLoadError: For unknown names, a missing directory or unreadable files
    """
    if name not in config.DATASETS:
        raise DataLoadError(f"Unknown dataset '{name}'. Supported: {sorted(config.DATASETS)}")
    spec = config.DATASETS[name]

    print("\n" + "=" * 60)
    print(f"Loading dataset: {name}")
    print("=" * 60)

    if spec["format"] == "synthetic":
        full = synth_gaussian_blobs(
            spec["m"], spec["n_features"], spec["class_count"], 1.0, seed=seed, center_seed=0
        )
        full = replace(full, name=name)
        train, test = split_half(full, seed)
    elif spec["format"] == "idx":
        root = resolve_data_dir(data_dir) / spec["subdir"]
        train = load_idx(root / spec["train"][0], root / spec["train"][1], name=name)
        test = load_idx(root / spec["test"][0], root / spec["test"][1], name=name)
        train = replace(train, split_tag="train")
        test = replace(test, split_tag="test")
    else:
        root = resolve_data_dir(data_dir)
        features, raw_labels, raw = _read_sparse_text(
            root / spec["file"], spec["n_features"], name
        )
        train_rows, test_rows = _half_rows(features.shape[0], seed)
        if spec["minmax"]:
            # Test rows are scaled with train statistics only
            features = minmax_scale(features, minmax_fit(features[train_rows]))
        full = _sparse_dataset(features, raw_labels, raw, name)
        train, test = full.subset(train_rows, "train"), full.subset(test_rows, "test")

    print(f"✓ Train: {train.m} rows, test: {test.m} rows, {train.class_count} classes")
    return train, test


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("Testing data generation")
    print("=" * 60)

    try:
        blobs = synth_gaussian_blobs(500, 10, 2, 1.0, seed=0)
        train, test = split_half(blobs, seed=0)
        prior_set, cert_set = split_prior(train, config.PRIOR_SPLIT_FRACTION, seed=0)
        print(f"Blobs: {blobs.m} rows, max norm {np.linalg.norm(blobs.features, axis=1).max():.4f}")
        print(f"Splits: train {train.m}, test {test.m}, prior {prior_set.m}, cert {cert_set.m}")
        print("\n✓ Data module verified!")
    except Exception as e:
        print(f"\n✗ Error: {e}")
        import traceback

        traceback.print_exc()
        exit(1)
