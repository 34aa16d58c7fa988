"""Dataset ingestion, linear scaling, column projection and stratified folds."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

MISSING_TOKENS = {"", "?", "na", "nan", "null", "none"}


class DatasetError(ValueError):
    """Raised when a data file cannot be turned into a valid Dataset."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    name: str
    features: tuple[str, ...]
    samples: np.ndarray
    labels: np.ndarray
    classes: tuple = field(init=False)
    codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        labels = np.asarray(self.labels)
        if samples.ndim != 2:
            raise DatasetError("samples must be a 2-D matrix")
        if samples.shape[0] == 0:
            raise DatasetError(f"{self.name}: empty dataset")
        if samples.shape[1] != len(self.features):
            raise DatasetError(
                f"{self.name}: {samples.shape[1]} columns but {len(self.features)} feature names"
            )
        if labels.shape != (samples.shape[0],):
            raise DatasetError(f"{self.name}: need exactly one label per row")
        classes, codes = np.unique(labels, return_inverse=True)
        if len(classes) < 2:
            raise DatasetError(f"{self.name}: single-class dataset")
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "samples", _freeze(samples))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "classes", tuple(classes.tolist()))
        object.__setattr__(self, "codes", _freeze(codes.astype(np.int64)))

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def replace(self, samples=None, features=None, name=None) -> "Dataset":
        return Dataset(
            name=self.name if name is None else name,
            features=self.features if features is None else features,
            samples=self.samples if samples is None else samples,
            labels=self.labels,
        )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "assignment", _freeze(np.asarray(self.assignment, dtype=np.int64)))

    def folds(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == f) for f in range(self.k)]


def _sniff_delimiter(first_line: str) -> str:
    return "\t" if first_line.count("\t") > first_line.count(",") else ","


def load_dataset(
    path: Union[str, Path],
    label_column: Union[str, int] = -1,
    name: str | None = None,
) -> Dataset:
    """Read a delimited text file with one header row.

    ``label_column`` is a header name or a (possibly negative) column index.
    Every other column must be numeric; missing cells are rejected with their
    1-based line and column coordinates.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    delim = _sniff_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    header = [h.strip() for h in rows[0]]
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if any(c.strip() for c in r)]
    if not body:
        raise DatasetError(f"{path}: empty dataset (header only)")

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
    else:
        li = int(label_column)
        if not -len(header) <= li < len(header):
            raise DatasetError(f"{path}: label column index {li} out of range")
        li %= len(header)

    feat_idx = [j for j in range(len(header)) if j != li]
    samples = np.empty((len(body), len(feat_idx)))
    labels = []
    for r, (lineno, row) in enumerate(body):
        if len(row) != len(header):
            raise DatasetError(
                f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}"
            )
        lab = row[li].strip()
        if lab.lower() in MISSING_TOKENS:
            raise DatasetError(f"{path}: missing label at line {lineno}, column {li + 1}")
        labels.append(lab)
        for c, j in enumerate(feat_idx):
            cell = row[j].strip()
            if cell.lower() in MISSING_TOKENS:
                raise DatasetError(
                    f"{path}: missing value at line {lineno}, column {j + 1} ({header[j]!r})"
                )
            try:
                samples[r, c] = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric value {cell!r} at line {lineno}, column {j + 1} "
                    f"({header[j]!r})"
                ) from None
    return Dataset(
        name=name or path.stem,
        features=[header[j] for j in feat_idx],
        samples=samples,
        labels=np.array(labels),
    )


def scale_columns(
    samples: np.ndarray,
    lower: float,
    upper: float,
    ref: np.ndarray | None = None,
) -> np.ndarray:
    """Min-max map each column of ``samples`` onto [lower, upper].

    Column extremes come from ``ref`` (defaults to ``samples`` itself), which
    lets training-fold statistics be applied to held-out rows. Constant
    reference columns map to ``lower``.
    """
    if not upper > lower:
        raise ValueError(f"upper ({upper}) must exceed lower ({lower})")
    ref = samples if ref is None else ref
    vmin = ref.min(axis=0)
    span = ref.max(axis=0) - vmin
    out = np.full(samples.shape, float(lower))
    live = span > 0
    out[:, live] = lower + (upper - lower) * ((samples[:, live] - vmin[live]) / span[live])
    return out


def normalize(d: Dataset, lower: float = -1.0, upper: float = 1.0) -> Dataset:
    return d.replace(samples=scale_columns(d.samples, lower, upper))


def stratified_kfold(d: Union[Dataset, Sequence], k: int = 10, seed: int = 0) -> FoldPlan:
    """Assign every row to one of ``k`` folds, class by class.

    Rows of each class are shuffled, then dealt round-robin; each class
    starts dealing at the fold after the one where the previous class
    stopped, so overall fold sizes also stay within one of each other.
    """
    codes = d.codes if isinstance(d, Dataset) else np.unique(np.asarray(d), return_inverse=True)[1]
    n = len(codes)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds number of samples ({n})")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    start = 0
    for c in np.unique(codes):
        rows = np.flatnonzero(codes == c)
        rows = rows[rng.permutation(len(rows))]
        assignment[rows] = (start + np.arange(len(rows))) % k
        start = (start + len(rows)) % k
    return FoldPlan(k=k, assignment=assignment)


def mask_indices(mask) -> np.ndarray:
    m = np.asarray(mask)
    return np.flatnonzero(m.astype(bool))


def project(d: Dataset, mask) -> Dataset:
    mask = np.asarray(mask)
    if mask.shape != (d.n_features,):
        raise ValueError(f"mask length {mask.shape} != n_features {d.n_features}")
    idx = mask_indices(mask)
    if len(idx) == 0:
        raise ValueError("cannot project onto an empty feature mask")
    return d.replace(samples=d.samples[:, idx], features=[d.features[j] for j in idx])
