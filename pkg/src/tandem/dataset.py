"""Sample corpora: CSV loading, synthetic hierarchical blobs, normalization, splits.

CSV layout: one sample per row, ``width`` real values, optionally followed by
two integer columns ``class, subclass``. Labels are only ever read by the
evaluation code.
"""
import csv
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    GenerationError,
    ParseError,
    SchemaError,
    StratificationError,
)


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray = None
    # per-column (min, max) used to map raw values into [0, 1]
    bounds: tuple = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=np.float64)
        if X.ndim != 2:
            raise SchemaError(f"samples must be a 2-D array, got shape {X.shape}")
        object.__setattr__(self, "samples", X)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (X.shape[0], 2):
                raise SchemaError(f"labels must have shape ({X.shape[0]}, 2), got {y.shape}")
            object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def labeled(self):
        return self.labels is not None

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.samples[idx], labels, self.bounds)


def fit_bounds(X):
    X = np.asarray(X, dtype=np.float64)
    return X.min(axis=0), X.max(axis=0)


def apply_bounds(X, bounds):
    """Min-max scale columns into [0, 1]; constant columns become 0.

    Values outside the fitted range (new data) are clipped.
    """
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != lo.shape[0]:
        raise SchemaError(f"width {X.shape[-1]} does not match bounds width {lo.shape[0]}")
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - lo) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


def normalize(dataset):
    bounds = fit_bounds(dataset.samples)
    return Dataset(apply_bounds(dataset.samples, bounds), dataset.labels, bounds)


def load_vectors(path, expected_width, normalize_columns=True):
    """Read a CSV of sample vectors, capturing trailing labels when present."""
    rows, labels = [], []
    labeled = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) == expected_width:
                has_labels = False
            elif len(row) == expected_width + 2:
                has_labels = True
            else:
                raise SchemaError(
                    f"line {lineno}: expected {expected_width} values "
                    f"(or {expected_width + 2} with labels), found {len(row)}"
                )
            if labeled is None:
                labeled = has_labels
            elif labeled != has_labels:
                raise SchemaError(f"line {lineno}: rows mix labeled and unlabeled layouts")
            try:
                values = [float(c) for c in row[:expected_width]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite value", lineno)
            rows.append(values)
            if has_labels:
                try:
                    labels.append([int(c) for c in row[expected_width:]])
                except ValueError:
                    raise ParseError("label columns must be integers", lineno) from None
    if not rows:
        raise SchemaError(f"{path}: no samples")
    ds = Dataset(np.array(rows), np.array(labels) if labeled else None)
    return normalize(ds) if normalize_columns else ds


def write_csv(dataset, path):
    """Write samples (and labels) using shortest round-trip float text."""
    lines = []
    for i, x in enumerate(dataset.samples):
        cells = [repr(float(v)) for v in x]
        if dataset.labels is not None:
            cells += [str(int(v)) for v in dataset.labels[i]]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a two-level Gaussian blob corpus.

    Class centers live in the box ``[box_lo, box_hi]^width``; each subclass
    center is its class center plus an offset of length
    ``subclass_separation``.
    """

    width: int = 20
    classes: int = 3
    subclasses_per_class: int = 2
    samples_per_subclass: int = 85
    class_separation: float = 1.2
    subclass_separation: float = 0.6
    noise_sigma: float = 0.04
    box_lo: float = 0.15
    box_hi: float = 0.85
    max_tries: int = 10000

    def __post_init__(self):
        from .errors import ConfigError

        for key in ("width", "classes", "subclasses_per_class", "samples_per_subclass"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(key, "must be >= 1")
        if not self.class_separation > self.subclass_separation > self.noise_sigma > 0:
            raise ConfigError(
                "class_separation",
                "need class_separation > subclass_separation > noise_sigma > 0",
            )
        if not 0 <= self.box_lo < self.box_hi <= 1:
            raise ConfigError("box_lo", "need 0 <= box_lo < box_hi <= 1")

    @property
    def n_samples(self):
        return self.classes * self.subclasses_per_class * self.samples_per_subclass


def _separated_points(draw, count, min_dist, tries, what):
    for _ in range(tries):
        pts = draw(count)
        if count < 2:
            return pts
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        if d[np.triu_indices(count, 1)].min() >= min_dist:
            return pts
    raise GenerationError(f"could not place {count} {what} at separation {min_dist}")


def synthetic_centers(spec, rng):
    """Return ``(class_centers, subclass_centers)``; the latter is (classes, t, width)."""
    w = spec.width
    diameter = (spec.box_hi - spec.box_lo) * math.sqrt(w)
    if spec.classes > 1 and spec.class_separation > diameter:
        raise GenerationError(
            f"class_separation {spec.class_separation} exceeds the center box diameter {diameter:.3f}"
        )
    centers = _separated_points(
        lambda n: rng.uniform(spec.box_lo, spec.box_hi, size=(n, w)),
        spec.classes, spec.class_separation, spec.max_tries, "class centers",
    )

    def offsets(n):
        v = rng.standard_normal((n, w))
        return spec.subclass_separation * v / np.linalg.norm(v, axis=1, keepdims=True)

    sub = np.stack([
        c + _separated_points(offsets, spec.subclasses_per_class, spec.subclass_separation,
                              spec.max_tries, "subclass offsets")
        for c in centers
    ])
    return centers, sub


def generate_synthetic(spec, rng, return_centers=False):
    """Draw a labeled corpus of ``classes * subclasses`` Gaussian blobs clipped to [0, 1]."""
    centers, sub = synthetic_centers(spec, rng)
    blocks, labels = [], []
    for c in range(spec.classes):
        for s in range(spec.subclasses_per_class):
            noise = rng.normal(0.0, spec.noise_sigma, size=(spec.samples_per_subclass, spec.width))
            blocks.append(np.clip(sub[c, s] + noise, 0.0, 1.0))
            labels.extend([(c, s)] * spec.samples_per_subclass)
    ds = Dataset(np.vstack(blocks), np.array(labels, dtype=np.int64))
    if return_centers:
        return ds, centers, sub
    return ds


def split(dataset, train_fraction, rng):
    """Stratified (by class, subclass) train/test split; both parts keep input order."""
    if not 0 < train_fraction < 1:
        raise ContractError("train_fraction must lie strictly between 0 and 1")
    n = len(dataset)
    if dataset.labels is None:
        strata = [np.arange(n)]
    else:
        keys = dataset.labels[:, 0] * (dataset.labels[:, 1].max() + 1) + dataset.labels[:, 1]
        strata = [np.flatnonzero(keys == k) for k in np.unique(keys)]
    train = []
    for members in strata:
        if members.size < 2:
            raise StratificationError(f"stratum of size {members.size} cannot be split")
        n_train = int(round(train_fraction * members.size))
        if n_train < 1 or n_train >= members.size:
            raise StratificationError(
                f"fraction {train_fraction} leaves an empty side in a stratum of {members.size}"
            )
        train.extend(rng.choice(members, size=n_train, replace=False).tolist())
    mask = np.zeros(n, dtype=bool)
    mask[train] = True
    return dataset.subset(np.flatnonzero(mask)), dataset.subset(np.flatnonzero(~mask))
