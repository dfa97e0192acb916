"""Datasets, file ingestion, splits, and kNN graph construction.

On-disk layout
--------------
A dataset is described by a JSON manifest::

    {
      "features": "features.csv",      # or .bin, see below
      "labels": "labels.csv",          # one integer per line
      "splits": {"train": "train.csv", "val": "val.csv", "test": "test.csv"},
      "num_classes": 7,
      "feature_kind": "binary"         # or "continuous"
    }

Paths are resolved relative to the manifest. Features are either CSV (one
node per row, comma-separated floats) or raw binary: two little-endian
int64 values (n, d) followed by n*d little-endian float64 values in row
order. Split files list node indices, one per line.

Loaded datasets start with an empty (all-zero) adjacency; learned structure
is the model's job, and bootstrap kNN graphs are built on demand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, IngestionError

FEATURE_KINDS = ("binary", "continuous")


@dataclass
class Graph:
    features: np.ndarray  # (n, d) float64
    adjacency: np.ndarray  # (n, n) float64, nonnegative after processing

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        if self.features.ndim != 2:
            raise IngestionError("features must be a 2-D matrix")
        n = self.features.shape[0]
        if self.adjacency.shape != (n, n):
            raise IngestionError(
                f"adjacency must be {n}x{n}, got {self.adjacency.shape}")
        if np.isnan(self.features).any() or np.isnan(self.adjacency).any():
            raise IngestionError("graph contains NaN entries")


@dataclass
class Dataset:
    graph: Graph
    labels: np.ndarray  # (n,) int64
    num_classes: int
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    feature_kind: str = "continuous"
    name: str = "dataset"

    @property
    def n(self) -> int:
        return self.graph.n

    def validate(self) -> None:
        self.graph.validate()
        n = self.graph.n
        if self.labels.shape != (n,):
            raise IngestionError(
                f"labels must have one entry per node: features have {n} rows, "
                f"labels have {self.labels.shape[0]}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise IngestionError(
                f"labels must lie in [0, {self.num_classes}); "
                f"found {self.labels.min()}..{self.labels.max()}")
        if self.feature_kind not in FEATURE_KINDS:
            raise IngestionError(f"feature_kind must be one of {FEATURE_KINDS}")
        masks = (self.train_mask, self.val_mask, self.test_mask)
        for name, m in zip(("train", "val", "test"), masks):
            if m.shape != (n,) or m.dtype != bool:
                raise IngestionError(f"{name} mask must be a bool vector of length {n}")
            if not m.any():
                raise IngestionError(f"{name} mask is empty")
        if ((self.train_mask & self.val_mask).any()
                or (self.train_mask & self.test_mask).any()
                or (self.val_mask & self.test_mask).any()):
            raise IngestionError("split masks overlap")


@dataclass
class SplitSpec:
    """Either random fractions (seeded) or explicit index lists."""

    seed: int = 0
    fractions: tuple = (0.5, 0.2, 0.3)
    indices: dict | None = None  # {"train": [...], "val": [...], "test": [...]}

    def validate(self) -> None:
        if self.indices is None:
            if len(self.fractions) != 3:
                raise ConfigurationError("fractions must list train/val/test")
            if any(f < 0 for f in self.fractions):
                raise ConfigurationError("fractions must be nonnegative")
            if sum(self.fractions) > 1.0 + 1e-12:
                raise ConfigurationError(
                    f"fractions sum to {sum(self.fractions)} > 1")


def make_splits(n: int, spec: SplitSpec):
    """Deterministic train/val/test masks; explicit index lists pass through."""
    spec.validate()
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    if spec.indices is not None:
        for m, key in zip(masks, ("train", "val", "test")):
            idx = np.asarray(spec.indices[key], dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ConfigurationError(f"split index out of range for n={n}")
            m[idx] = True
        return tuple(masks)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    start = 0
    for m, frac in zip(masks, spec.fractions):
        size = int(np.floor(frac * n))
        m[perm[start:start + size]] = True
        start += size
    return tuple(masks)


# ---------------------------------------------------------------------------
# kNN graph construction

def knn_graph(features: np.ndarray, k: int, metric: str = "cosine",
              binarize: bool = False) -> np.ndarray:
    """Directed kNN adjacency: row i holds the similarity of its k most
    similar distinct nodes (self excluded, ties to the lower index).

    Cosine is the default metric; "euclidean" ranks by distance and stores
    1/(1+dist) so weights remain positive similarities.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ConfigurationError(f"knn_graph: need 1 <= k < n, got k={k}, n={n}")
    if metric == "cosine":
        norms = np.maximum(np.linalg.norm(x, axis=1, keepdims=True), 1e-12)
        y = x / norms
        sims = y @ y.T
    elif metric == "euclidean":
        sq = (x * x).sum(axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
        sims = 1.0 / (1.0 + np.sqrt(d2))
    else:
        raise ConfigurationError(f"knn_graph: unknown metric {metric!r}")
    ranked = sims.copy()
    np.fill_diagonal(ranked, -np.inf)
    # stable argsort of the negated scores puts ties in index order
    order = np.argsort(-ranked, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    cols = order.reshape(-1)
    adj[rows, cols] = 1.0 if binarize else sims[rows, cols]
    return adj


# ---------------------------------------------------------------------------
# manifest ingestion

def _read_features(path: Path) -> np.ndarray:
    if path.suffix == ".bin":
        raw = path.read_bytes()
        header = np.frombuffer(raw[:16], dtype="<i8")
        n, d = int(header[0]), int(header[1])
        body = np.frombuffer(raw[16:], dtype="<f8")
        if body.size != n * d:
            raise IngestionError(
                f"{path}: header promises {n}x{d} values, found {body.size}")
        return body.reshape(n, d).copy()
    try:
        arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as err:
        raise IngestionError(f"{path}: {err}") from err
    return arr


def _read_int_column(path: Path) -> np.ndarray:
    try:
        arr = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except ValueError as err:
        raise IngestionError(f"{path}: {err}") from err
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    return arr.reshape(-1)


def load_dataset(manifest_path) -> Dataset:
    """Read a manifest and return a validated Dataset with empty adjacency."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise IngestionError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as err:
        raise IngestionError(f"{manifest_path}: invalid JSON ({err})") from err
    base = manifest_path.parent
    for key in ("features", "labels", "splits", "num_classes"):
        if key not in manifest:
            raise IngestionError(f"{manifest_path}: missing manifest key {key!r}")

    def resolve(rel) -> Path:
        p = base / rel
        if not p.exists():
            raise IngestionError(f"referenced file not found: {p}")
        return p

    features = _read_features(resolve(manifest["features"]))
    labels = _read_int_column(resolve(manifest["labels"]))
    if labels.shape[0] != features.shape[0]:
        raise IngestionError(
            f"row count mismatch: {features.shape[0]} feature rows vs "
            f"{labels.shape[0]} labels")
    splits = manifest["splits"]
    indices = {key: _read_int_column(resolve(splits[key])).tolist()
               for key in ("train", "val", "test")}
    n = features.shape[0]
    try:
        train, val, test = make_splits(n, SplitSpec(indices=indices))
    except ConfigurationError as err:
        raise IngestionError(str(err)) from err
    dataset = Dataset(
        graph=Graph(features=features, adjacency=np.zeros((n, n))),
        labels=labels,
        num_classes=int(manifest["num_classes"]),
        train_mask=train,
        val_mask=val,
        test_mask=test,
        feature_kind=manifest.get("feature_kind", "continuous"),
        name=manifest.get("name", manifest_path.stem),
    )
    dataset.validate()
    return dataset


def save_dataset(dataset: Dataset, out_dir, feature_format: str = "csv") -> Path:
    """Write a dataset back to manifest form; returns the manifest path.

    CSV floats are written with 17 significant digits so a save/load round
    trip is bit-exact.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    feats = dataset.graph.features
    if feature_format == "csv":
        feat_name = "features.csv"
        np.savetxt(out / feat_name, feats, delimiter=",", fmt="%.17g")
    elif feature_format == "binary":
        feat_name = "features.bin"
        with open(out / feat_name, "wb") as fh:
            fh.write(np.array(feats.shape, dtype="<i8").tobytes())
            fh.write(feats.astype("<f8").tobytes())
    else:
        raise ConfigurationError(f"unknown feature_format {feature_format!r}")
    np.savetxt(out / "labels.csv", dataset.labels, fmt="%d")
    for key, mask in (("train", dataset.train_mask), ("val", dataset.val_mask),
                      ("test", dataset.test_mask)):
        np.savetxt(out / f"{key}.csv", np.flatnonzero(mask), fmt="%d")
    manifest = {
        "name": dataset.name,
        "features": feat_name,
        "labels": "labels.csv",
        "splits": {"train": "train.csv", "val": "val.csv", "test": "test.csv"},
        "num_classes": dataset.num_classes,
        "feature_kind": dataset.feature_kind,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


# ---------------------------------------------------------------------------
# edge-list export/import (the learned-adjacency interchange format)

def write_edge_tsv(adjacency: np.ndarray, path) -> None:
    """Write nonzero entries as "src\\tdst\\tweight" sorted by (src, dst)."""
    adjacency = np.asarray(adjacency)
    rows, cols = np.nonzero(adjacency)
    with open(path, "w") as fh:
        for r, c in zip(rows, cols):  # nonzero already iterates row-major
            fh.write(f"{r}\t{c}\t{adjacency[r, c]:.17g}\n")


def read_edge_tsv(path, n: int) -> np.ndarray:
    adj = np.zeros((n, n))
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            try:
                src, dst, w = int(parts[0]), int(parts[1]), float(parts[2])
            except (ValueError, IndexError) as err:
                raise IngestionError(f"{path}: malformed line {lineno}") from err
            if not (0 <= src < n and 0 <= dst < n):
                raise IngestionError(
                    f"{path}: line {lineno} references node outside 0..{n - 1}")
            adj[src, dst] = w
    return adj


# ---------------------------------------------------------------------------
# synthetic fixtures

def make_blobs(n: int = 300, d: int = 16, num_classes: int = 3, seed: int = 7,
               center_scale: float = 6.0,
               fractions: tuple = (0.2, 0.3, 0.5)) -> Dataset:
    """Gaussian blobs with well-separated class centers; a linear probe on
    the raw features reaches ~1.0 accuracy, which pins down what any decent
    model should achieve."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(num_classes, d))
    centers *= center_scale / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.arange(n) % num_classes
    features = centers[labels] + rng.normal(size=(n, d))
    train, val, test = make_splits(n, SplitSpec(seed=seed, fractions=fractions))
    return Dataset(
        graph=Graph(features=features, adjacency=np.zeros((n, n))),
        labels=labels.astype(np.int64),
        num_classes=num_classes,
        train_mask=train,
        val_mask=val,
        test_mask=test,
        feature_kind="continuous",
        name=f"blobs-n{n}-d{d}-s{seed}",
    )


def make_fixture(seed: int = 0) -> Dataset:
    """Tiny 4-node, 2-class dataset for smoke tests."""
    features = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
    labels = np.array([0, 0, 1, 1], dtype=np.int64)
    train = np.array([True, False, True, False])
    val = np.array([False, True, False, False])
    test = np.array([False, False, False, True])
    return Dataset(
        graph=Graph(features=features, adjacency=np.zeros((4, 4))),
        labels=labels,
        num_classes=2,
        train_mask=train,
        val_mask=val,
        test_mask=test,
        feature_kind="continuous",
        name="fixture4",
    )
