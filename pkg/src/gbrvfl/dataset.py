"""Tabular classification datasets: loading, encoding, splitting, label noise,
synthetic Gaussian mixtures and feature normalization."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    MissingFile,
    NonNumericFeature,
    RaggedRows,
    SingleClass,
    TooFewSamples,
)

NOISE_RATES = (0.0, 0.05, 0.10, 0.20, 0.30, 0.40)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``features`` (M x P) with dense labels in ``[0, class_count)``.

    Arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: Optional[tuple] = None
    class_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise InvalidArgument(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise InvalidArgument(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise InvalidArgument("features contain NaN or Inf")
        if self.class_count < 1:
            raise InvalidArgument("class_count must be positive")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise InvalidArgument("label index outside [0, class_count)")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise InvalidArgument("feature_names length does not match column count")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count,
                       self.feature_names, self.class_names)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.class_count, self.feature_names, self.class_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.class_count, self.feature_names, self.class_names)


def load_csv(path, has_header: Optional[bool] = None, label_column: int = -1) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or PathLike
    has_header : bool, optional
        ``None`` auto-detects: the first row is a header when any of its
        feature cells fails to parse as a float.
    label_column : int
        Column holding the class label; negative values count from the end.

    Labels are re-encoded to ``0..C-1`` in order of first appearance.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise TooFewSamples(f"{path} contains no rows")

    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise RaggedRows(f"row {i} has {len(r)} columns, expected {width}")
    if width < 2:
        raise RaggedRows("need at least one feature column and one label column")
    lab = label_column if label_column >= 0 else width + label_column
    if not 0 <= lab < width:
        raise InvalidArgument(f"label column {label_column} out of range for {width} columns")
    feat_cols = [j for j in range(width) if j != lab]

    header = None
    if has_header is None:
        has_header = not all(_is_float(rows[0][j]) for j in feat_cols)
    if has_header:
        header = rows[0]
        rows = rows[1:]
    if not rows:
        raise TooFewSamples(f"{path} contains a header but no data")

    X = np.empty((len(rows), len(feat_cols)))
    label_index: dict[str, int] = {}
    y = np.empty(len(rows), dtype=np.int64)
    row_offset = 1 if has_header else 0
    for i, r in enumerate(rows):
        for jj, j in enumerate(feat_cols):
            cell = r[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericFeature(cell, i + row_offset, j) from None
            if not math.isfinite(v):
                raise NonNumericFeature(cell, i + row_offset, j)
            X[i, jj] = v
        key = _canonical_label(r[lab].strip())
        y[i] = label_index.setdefault(key, len(label_index))

    if len(label_index) < 2:
        raise SingleClass(f"{path} has a single class {list(label_index)}")
    names = tuple(header[j].strip() for j in feat_cols) if header else None
    return Dataset(X, y, len(label_index), names, tuple(label_index))


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _canonical_label(s: str) -> str:
    # "1" and "1.0" name the same class
    try:
        v = float(s)
    except ValueError:
        return s
    return str(int(v)) if v.is_integer() else s


def save_csv(d: Dataset, path) -> None:
    names = d.feature_names or tuple(f"f{j}" for j in range(d.n_features))
    classes = d.class_names or tuple(str(c) for c in range(d.class_count))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "label"])
        for x, c in zip(d.features, d.labels):
            w.writerow([*(repr(float(v)) for v in x), classes[c]])


def one_hot(d: Dataset) -> np.ndarray:
    """M x C indicator matrix of the labels."""
    return one_hot_labels(d.labels, d.class_count)


def one_hot_labels(labels, class_count: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    Z = np.zeros((labels.size, class_count))
    Z[np.arange(labels.size), labels] = 1.0
    return Z


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.70
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidArgument("train_fraction must lie in (0, 1)")


def split_indices(d: Dataset, s: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices for a seeded split."""
    rng = np.random.default_rng(s.seed)
    M = d.n_samples
    if M < 2:
        raise TooFewSamples("need at least 2 samples to split")
    if not s.stratified:
        perm = rng.permutation(M)
        n_train = min(max(_round_half_up(s.train_fraction * M), 1), M - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    train, test = [], []
    for c in range(d.class_count):
        members = np.flatnonzero(d.labels == c)
        if members.size == 0:
            continue
        if members.size < 2:
            raise TooFewSamples(f"class {c} has {members.size} sample; stratified split needs >= 2")
        members = members[rng.permutation(members.size)]
        n = min(max(_round_half_up(s.train_fraction * members.size), 1), members.size - 1)
        train.append(members[:n])
        test.append(members[n:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def train_test_split(d: Dataset, s: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    tr, te = split_indices(d, s)
    return d.subset(tr), d.subset(te)


@dataclass(frozen=True)
class NoiseSpec:
    rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise InvalidArgument("noise rate must lie in [0, 1)")


def noise_positions(d: Dataset, n: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Indices chosen for flipping and their new labels."""
    rng = np.random.default_rng(n.seed)
    count = _round_half_up(n.rate * d.n_samples)
    idx = rng.choice(d.n_samples, size=count, replace=False)
    old = d.labels[idx]
    shift = rng.integers(0, d.class_count - 1, size=count) if d.class_count > 1 else np.zeros(count, np.int64)
    # draw from the C-1 other classes: skip over the original label
    new = np.where(shift >= old, shift + 1, shift)
    return idx, new


def inject_label_noise(d: Dataset, n: NoiseSpec) -> Dataset:
    """Replace exactly ``round(rate * M)`` labels with a different class."""
    if n.rate == 0.0:
        return d
    idx, new = noise_positions(d, n)
    y = d.labels.copy()
    y[idx] = new
    return d.with_labels(y)


@dataclass(frozen=True)
class SynthSpec:
    """Isotropic unit-variance Gaussian clusters.

    ``class_count * n_clusters_per_class`` centers are drawn uniformly in a
    cube and rescaled so the closest pair sits exactly ``class_separation``
    apart. Cluster ``i`` belongs to class ``i % class_count``.
    """

    n_samples: int
    n_features: int = 32
    n_clusters_per_class: int = 1
    class_separation: float = 6.0
    seed: int = 0
    class_count: int = 2

    def __post_init__(self):
        if self.class_count < 2:
            raise InvalidArgument("class_count must be >= 2")
        if self.n_samples < 2 * self.class_count:
            raise InvalidArgument("n_samples must be >= 2 * class_count")
        if self.class_separation <= 0:
            raise InvalidArgument("class_separation must be positive")
        if self.n_features < 1 or self.n_clusters_per_class < 1:
            raise InvalidArgument("n_features and n_clusters_per_class must be >= 1")


def synthesize(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    C, K = spec.class_count, spec.n_clusters_per_class
    centers = rng.uniform(-1.0, 1.0, size=(C * K, spec.n_features))
    closest = pdist(centers).min()
    if closest == 0.0:
        raise InvalidArgument("coincident cluster centers; use more features or fewer clusters")
    centers *= spec.class_separation / closest
    centers -= centers.mean(axis=0)

    labels = np.arange(spec.n_samples) % C
    # within a class, samples are dealt round-robin over its clusters
    within = (np.arange(spec.n_samples) // C) % K
    cluster = within * C + labels
    X = centers[cluster] + rng.standard_normal((spec.n_samples, spec.n_features))
    perm = rng.permutation(spec.n_samples)
    names = tuple(f"f{j}" for j in range(spec.n_features))
    return Dataset(X[perm], labels[perm], C, names, tuple(str(c) for c in range(C)))


@dataclass(frozen=True)
class NormStats:
    method: str
    shift: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.shift.size:
            raise DimensionMismatch(f"expected {self.shift.size} features, got {X.shape[-1]}")
        return (X - self.shift) / self.scale

    def invert(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.scale + self.shift

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "shift": self.shift.tolist(),
            "scale": self.scale.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(d["method"], np.asarray(d["shift"], dtype=np.float64),
                   np.asarray(d["scale"], dtype=np.float64),
                   np.asarray(d["degenerate"], dtype=bool))


def fit_norm_stats(X, method: str = "zscore") -> NormStats:
    X = np.asarray(X, dtype=np.float64)
    P = X.shape[1]
    if method == "none":
        return NormStats(method, np.zeros(P), np.ones(P), np.zeros(P, dtype=bool))
    if method == "zscore":
        shift, scale = X.mean(axis=0), X.std(axis=0)
    elif method == "minmax":
        shift = X.min(axis=0)
        scale = X.max(axis=0) - shift
    else:
        raise InvalidArgument(f"unknown normalization {method!r}")
    degenerate = ~(scale > 0)
    # constant columns pass through unchanged
    shift = np.where(degenerate, 0.0, shift)
    scale = np.where(degenerate, 1.0, scale)
    return NormStats(method, shift, scale, degenerate)


def normalize(d: Dataset, method: str = "zscore", stats: Optional[NormStats] = None) -> tuple[Dataset, NormStats]:
    """Scale features with fresh statistics, or with ``stats`` at test time."""
    if stats is None:
        stats = fit_norm_stats(d.features, method)
    return d.with_features(stats.apply(d.features)), stats


def denormalize(d: Dataset, stats: NormStats) -> Dataset:
    return d.with_features(stats.invert(d.features))


def concat(parts: Sequence[Dataset]) -> Dataset:
    first = parts[0]
    return Dataset(np.vstack([p.features for p in parts]), np.concatenate([p.labels for p in parts]),
                   first.class_count, first.feature_names, first.class_names)
