"""Latent dataset container, binary/CSV I/O, and a synthetic blob generator.

The binary format (extension ``.lccd``) is:

* bytes 0-3: magic ``LCCD``
* bytes 4-7: version, u32 little-endian, currently 1
* bytes 8-15: N, u64 LE
* bytes 16-23: d, u64 LE
* N*d f32 LE, row-major latent coordinates
* N u32 LE labels

Coordinates are held in memory as float32 so that save/load round-trips are
bit-exact; numeric code upcasts to float64 at its entry points.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"LCCD"
VERSION = 1

_HEADER = struct.Struct("<4sIQQ")


@dataclass(frozen=True)
class LatentDataset:
    """N latent vectors of dimension d with integer labels.

    Immutable after construction; safe to share across threads.
    """

    Z: np.ndarray
    y: np.ndarray
    ground_truth_clusters: Optional[np.ndarray] = None

    def __post_init__(self):
        Z = np.ascontiguousarray(self.Z, dtype=np.float32)
        if Z.ndim != 2:
            raise ValidationError("Z must be a 2-D matrix, got ndim=%d" % Z.ndim)
        n, d = Z.shape
        if n < 1 or d < 1:
            raise ValidationError("dataset must have N >= 1 and d >= 1, got N=%d d=%d" % (n, d))
        bad = ~np.isfinite(Z)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise ValidationError("non-finite latent coordinate at row %d" % row)
        y = np.asarray(self.y)
        if y.shape != (n,):
            raise ValidationError("y must have length N=%d, got shape %s" % (n, y.shape))
        if not np.issubdtype(y.dtype, np.integer):
            yf = np.asarray(y, dtype=np.float64)
            if not np.all(yf == np.floor(yf)):
                raise ValidationError("labels must be integers")
        if np.any(np.asarray(y, dtype=np.int64) < 0) or np.any(np.asarray(y, dtype=np.int64) >= 2**32):
            raise ValidationError("labels must be in [0, 2^32)")
        y = np.ascontiguousarray(y, dtype=np.uint32)
        gtc = self.ground_truth_clusters
        if gtc is not None:
            gtc = np.ascontiguousarray(gtc, dtype=np.int64)
            if gtc.shape != (n,):
                raise ValidationError("ground_truth_clusters must have length N")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ground_truth_clusters", gtc)
        self.Z.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.Z.shape[0]

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def z64(self) -> np.ndarray:
        """Latent matrix as float64, the working precision of all numerics."""
        return np.asarray(self.Z, dtype=np.float64)

    @property
    def label_set(self) -> np.ndarray:
        return np.unique(self.y)


@dataclass(frozen=True)
class BlobSpec:
    """Parameters of the synthetic Gaussian-blob generator."""

    n_labels: int
    clusters_per_label: int
    samples_per_cluster: int
    dim: int
    center_box_half_width: float = 20.0
    cluster_sigma: float = 1.0
    mislabel_fraction: float = 0.0
    seed: int = 0
    min_center_separation: float = 0.0

    def __post_init__(self):
        if self.n_labels < 1 or self.clusters_per_label < 1 or self.samples_per_cluster < 1:
            raise ValidationError("n_labels, clusters_per_label and samples_per_cluster must be >= 1")
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.center_box_half_width <= 0:
            raise ValidationError("center_box_half_width must be positive")
        if self.cluster_sigma < 0:
            raise ValidationError("cluster_sigma must be nonnegative")
        if not (0.0 <= self.mislabel_fraction <= 1.0):
            raise ValidationError("mislabel_fraction must be in [0, 1]")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.min_center_separation < 0:
            raise ValidationError("min_center_separation must be nonnegative")

    @property
    def n_samples(self) -> int:
        return self.n_labels * self.clusters_per_label * self.samples_per_cluster


def generate_blobs(spec: BlobSpec) -> LatentDataset:
    """Sample an isotropic Gaussian-blob dataset with ground-truth cluster ids.

    Cluster centers are uniform in the hypercube (redrawn as a whole until
    every pair is at least ``min_center_separation`` apart), clusters are
    enumerated label-major, and a ``mislabel_fraction`` of samples (rounded
    down) get a uniformly random different label. Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    n_clusters = spec.n_labels * spec.clusters_per_label
    hw = spec.center_box_half_width
    for _ in range(1000):
        centers = rng.uniform(-hw, hw, size=(n_clusters, spec.dim))
        if spec.min_center_separation == 0.0 or n_clusters == 1:
            break
        gaps = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() >= spec.min_center_separation:
            break
    else:
        raise ValidationError(
            "could not place %d centers with pairwise separation >= %g"
            % (n_clusters, spec.min_center_separation))
    n = spec.n_samples
    Z = np.empty((n, spec.dim), dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    gtc = np.empty(n, dtype=np.int64)
    row = 0
    for c in range(n_clusters):
        label = c // spec.clusters_per_label
        block = slice(row, row + spec.samples_per_cluster)
        noise = rng.standard_normal((spec.samples_per_cluster, spec.dim))
        Z[block] = centers[c] + spec.cluster_sigma * noise
        y[block] = label
        gtc[block] = c
        row += spec.samples_per_cluster

    n_mis = int(np.floor(spec.mislabel_fraction * n))
    if n_mis > 0 and spec.n_labels > 1:
        picked = rng.choice(n, size=n_mis, replace=False)
        for i in picked:
            # uniform over the other labels
            off = rng.integers(1, spec.n_labels)
            y[i] = (y[i] + off) % spec.n_labels
    return LatentDataset(Z=Z, y=y, ground_truth_clusters=gtc)


def save_dataset(dataset: LatentDataset, path, format: str = "binary") -> None:
    """Write a dataset to ``path`` in the binary or CSV format."""
    if format == "binary":
        _save_binary(dataset, path)
    elif format == "csv":
        _save_csv(dataset, path)
    else:
        raise ValidationError("unknown format %r (expected 'binary' or 'csv')" % format)


def load_dataset(path, format: str = "binary") -> LatentDataset:
    """Read a dataset written by :func:`save_dataset`."""
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValidationError("unknown format %r (expected 'binary' or 'csv')" % format)


def _save_binary(dataset: LatentDataset, path) -> None:
    n, d = dataset.Z.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(dataset.Z.astype("<f4", copy=False).tobytes(order="C"))
        fh.write(dataset.y.astype("<u4", copy=False).tobytes())


def _load_binary(path) -> LatentDataset:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError("file too short for header")
        magic, version, n, d = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError("bad magic %r, expected %r" % (magic, MAGIC))
        if version != VERSION:
            raise FormatError("unsupported version %d" % version)
        if n < 1 or d < 1:
            raise FormatError("invalid shape N=%d d=%d" % (n, d))
        zbytes = fh.read(4 * n * d)
        if len(zbytes) != 4 * n * d:
            raise FormatError("truncated Z block")
        ybytes = fh.read(4 * n)
        if len(ybytes) != 4 * n:
            raise FormatError("truncated label block")
    Z = np.frombuffer(zbytes, dtype="<f4").reshape(n, d)
    y = np.frombuffer(ybytes, dtype="<u4")
    return LatentDataset(Z=Z, y=y)


def _fmt_f32(v: np.float32) -> str:
    # 9 significant digits round-trip any float32
    return "%.9g" % float(v)


def _save_csv(dataset: LatentDataset, path) -> None:
    n, d = dataset.Z.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y"] + ["z%d" % j for j in range(d)])
        for i in range(n):
            w.writerow([int(dataset.y[i])] + [_fmt_f32(v) for v in dataset.Z[i]])


def _load_csv(path) -> LatentDataset:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file")
        if not header or header[0] != "y":
            raise FormatError("CSV header must start with 'y'")
        d = len(header) - 1
        if d < 1 or header[1:] != ["z%d" % j for j in range(d)]:
            raise FormatError("CSV header columns must be y,z0,...,z%d" % max(d - 1, 0))
        ys = []
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != d + 1:
                raise FormatError("line %d has %d fields, expected %d" % (lineno, len(rec), d + 1))
            try:
                ys.append(int(rec[0]))
                rows.append([float(v) for v in rec[1:]])
            except ValueError as exc:
                raise FormatError("line %d: %s" % (lineno, exc))
    if not rows:
        raise FormatError("CSV contains no samples")
    return LatentDataset(Z=np.asarray(rows, dtype=np.float32), y=np.asarray(ys))
