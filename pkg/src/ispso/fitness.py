"""kNN wrapper fitness: cross-validated accuracy with a fewer-features tie-break."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FoldPlan, mask_indices, scale_columns

# Per-feature squared-difference matrices are cached when they fit in this budget.
STACK_BYTES_LIMIT = 512 * 2**20


@dataclass(frozen=True)
class KnnParams:
    k: int = 1
    tie_eps: float = 1e-9

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("knn.k must be >= 1")
        if self.tie_eps < 0:
            raise ValueError("fitness.tie_eps must be >= 0")


@dataclass(frozen=True)
class FitnessValue:
    cv_accuracy: float
    n_selected: int
    eval_cost: int = field(default=0, compare=False)


def accuracy_bucket(acc: float, tie_eps: float) -> float:
    """Accuracy quantized to ``tie_eps``-wide bins (unchanged when ``tie_eps`` is 0)."""
    if tie_eps == 0:
        return acc
    # the nudge keeps values that sit on a bin edge, like 0.97 / 0.01, in the upper bin
    return float(np.floor(acc / tie_eps + 1e-9))


def compare_solutions(a: FitnessValue, b: FitnessValue, tie_eps: float = 1e-9) -> int:
    """Return 1 if ``a`` is better than ``b``, -1 if worse, 0 if equal.

    Accuracies falling in the same ``tie_eps``-wide bin count as equal and the
    smaller subset wins. Binning, unlike a |difference| <= eps band, keeps the
    ordering transitive, so a gbest trace can never cycle back below itself.
    """
    qa, qb = accuracy_bucket(a.cv_accuracy, tie_eps), accuracy_bucket(b.cv_accuracy, tie_eps)
    if qa != qb:
        return 1 if qa > qb else -1
    if a.n_selected != b.n_selected:
        return 1 if a.n_selected < b.n_selected else -1
    return 0


def beats(a: FitnessValue, b: FitnessValue, tie_eps: float = 1e-9) -> bool:
    return compare_solutions(a, b, tie_eps) > 0


def sq_distances(query: np.ndarray, train: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, accumulated one feature at a time.

    The fixed left-to-right accumulation keeps values bit-identical with the
    cached path in :class:`FitnessEvaluator`, so tie-breaks agree.
    """
    query = np.atleast_2d(query)
    out = np.zeros((query.shape[0], train.shape[0]))
    for j in range(train.shape[1]):
        out += (query[:, j, None] - train[None, :, j]) ** 2
    return out


def _vote(dist_rows: np.ndarray, train_codes: np.ndarray, k: int, n_classes: int) -> np.ndarray:
    if k == 1:
        return train_codes[np.argmin(dist_rows, axis=1)]
    order = np.argsort(dist_rows, axis=1, kind="stable")[:, :k]
    preds = np.empty(len(dist_rows), dtype=np.int64)
    for q, nbrs in enumerate(order):
        labs = train_codes[nbrs]
        counts = np.bincount(labs, minlength=n_classes)
        top = counts.max()
        # nearest neighbour whose class is among the tied leaders
        preds[q] = next(c for c in labs if counts[c] == top)
    return preds


def knn_predict(train: Dataset, query_rows: np.ndarray, params: KnnParams = KnnParams()) -> list:
    """Majority label among the ``k`` nearest training rows.

    Distance ties go to the lower training-row index; vote ties go to the
    tied class whose member is nearest.
    """
    query_rows = np.atleast_2d(np.asarray(query_rows, dtype=float))
    if query_rows.shape[1] != train.n_features:
        raise ValueError("query feature count does not match training data")
    if params.k > train.n_samples:
        raise ValueError(f"k={params.k} exceeds training size {train.n_samples}")
    codes = _vote(sq_distances(query_rows, train.samples), train.codes, params.k, train.n_classes)
    return [train.classes[c] for c in codes]


class FitnessEvaluator:
    """Cross-validated kNN accuracy over one dataset and one fold plan.

    Results are memoised by mask. The memo is guarded by a lock so the
    evaluator can be shared across threads.
    """

    def __init__(
        self,
        d: Dataset,
        plan: FoldPlan,
        params: KnnParams = KnnParams(),
        per_fold_scaling: tuple[float, float] | None = None,
    ):
        if len(plan.assignment) != d.n_samples:
            raise ValueError("fold plan does not cover the dataset")
        self.d = d
        self.plan = plan
        self.params = params
        self.per_fold_scaling = per_fold_scaling
        self.n_calls = 0
        self._memo: dict[bytes, FitnessValue] = {}
        self._lock = threading.Lock()
        n, f = d.samples.shape
        self._same_fold = plan.assignment[:, None] == plan.assignment[None, :]
        self._stack = None
        if per_fold_scaling is None and n * n * f * 8 <= STACK_BYTES_LIMIT:
            x = d.samples
            self._stack = np.stack([(x[:, j, None] - x[None, :, j]) ** 2 for j in range(f)])

    def _distances(self, idx: np.ndarray) -> np.ndarray:
        if self._stack is not None:
            out = self._stack[idx[0]].copy()
            for j in idx[1:]:
                out += self._stack[j]
            return out
        x = self.d.samples[:, idx]
        return sq_distances(x, x)

    def predictions(self, mask) -> np.ndarray:
        """Out-of-fold predicted class codes for every row."""
        idx = mask_indices(mask)
        if len(idx) == 0:
            raise ValueError("cannot evaluate an empty feature mask")
        d, k = self.d, self.params.k
        if self.per_fold_scaling is not None:
            return self._predictions_rescaled(idx)
        dist = self._distances(idx)
        dist[self._same_fold] = np.inf
        if k > d.n_samples - np.bincount(self.plan.assignment).max():
            raise ValueError(f"k={k} exceeds the smallest training split")
        return _vote(dist, d.codes, k, d.n_classes)

    def _predictions_rescaled(self, idx: np.ndarray) -> np.ndarray:
        lower, upper = self.per_fold_scaling
        x = self.d.samples[:, idx]
        preds = np.empty(self.d.n_samples, dtype=np.int64)
        for test in self.plan.folds():
            train = np.setdiff1d(np.arange(self.d.n_samples), test)
            xtr = scale_columns(x[train], lower, upper)
            xte = scale_columns(x[test], lower, upper, ref=x[train])
            preds[test] = _vote(sq_distances(xte, xtr), self.d.codes[train], self.params.k, self.d.n_classes)
        return preds

    def accuracy(self, mask) -> float:
        return float(np.mean(self.predictions(mask) == self.d.codes))

    def __call__(self, mask) -> FitnessValue:
        m = np.asarray(mask).astype(bool)
        key = np.packbits(m).tobytes()
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        fv = FitnessValue(self.accuracy(m), int(m.sum()), eval_cost=self.plan.k)
        with self._lock:
            self.n_calls += 1
            self._memo.setdefault(key, fv)
        return fv


def cross_validated_accuracy(d: Dataset, mask, plan: FoldPlan, params: KnnParams = KnnParams()) -> float:
    return FitnessEvaluator(d, plan, params).accuracy(mask)


def evaluate_fitness(d: Dataset, mask, plan: FoldPlan, params: KnnParams = KnnParams()) -> FitnessValue:
    return FitnessEvaluator(d, plan, params)(mask)
