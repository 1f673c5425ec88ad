"""Two-moons data, stratified splits and binary classification metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    points: np.ndarray
    labels: np.ndarray
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.points.shape[0] != self.labels.size:
            raise ValueError("points and labels must have equal length")

    def __len__(self):
        return self.labels.size

    def subset(self, idx):
        return Dataset(self.points[idx], self.labels[idx], self.noise, self.seed)


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self):
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def make_moons(n, noise=0.0, seed=0) -> Dataset:
    """Two interleaved half-circles; class 0 on top, class 1 shifted below."""
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    noise = float(noise)
    if not noise >= 0.0:
        raise ValueError(f"noise must be >= 0, got {noise!r}")
    n = int(n)
    n0 = (n + 1) // 2
    n1 = n - n0
    rng = np.random.default_rng(seed)
    phi0 = rng.uniform(0.0, np.pi, n0)
    phi1 = rng.uniform(0.0, np.pi, n1)
    upper = np.column_stack([np.cos(phi0), np.sin(phi0)])
    lower = np.column_stack([1.0 - np.cos(phi1), 0.5 - np.sin(phi1)])
    points = np.vstack([upper, lower])
    if noise > 0.0:
        points = points + rng.normal(0.0, noise, points.shape)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return Dataset(points, labels, noise, seed)


def split(ds: Dataset, fractions=(0.70, 0.05, 0.25), seed=0):
    """Stratified, deterministic train/val/test partition.

    Each class is shuffled and its members are spread evenly over a merged
    ordering, so every contiguous block matches the global label mix to
    within one sample.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three non-negative values summing to 1: {fractions}")
    n = len(ds)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) <= 0:
        raise ValueError(f"split sizes ({n_train}, {n_val}, {n_test}) leave an empty split")
    rng = np.random.default_rng(seed)
    keys = np.empty(n)
    for c in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == c)
        idx = idx[rng.permutation(idx.size)]
        keys[idx] = (np.arange(idx.size) + 0.5) / idx.size
    order = np.lexsort((ds.labels, keys))
    parts = np.split(order, [n_train, n_train + n_val])
    return tuple(ds.subset(np.sort(p)) for p in parts)


def compute_metrics(predicted, actual) -> Metrics:
    predicted = np.asarray(predicted, dtype=np.int64).reshape(-1)
    actual = np.asarray(actual, dtype=np.int64).reshape(-1)
    if predicted.size != actual.size:
        raise ValueError("predicted and actual must have equal length")
    if predicted.size == 0:
        raise ValueError("need at least one sample")
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))
    accuracy = float(np.mean(predicted == actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(accuracy, precision, recall, f1)


def write_csv(ds: Dataset, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "label"])
        for (x1, x2), y in zip(ds.points, ds.labels):
            writer.writerow([repr(float(x1)), repr(float(x2)), int(y)])


def read_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    points = [(float(r["x1"]), float(r["x2"])) for r in rows]
    labels = [int(r["label"]) for r in rows]
    return Dataset(points, labels)
