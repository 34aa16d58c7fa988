"""Slow, independent reference implementations used to cross-check the package.

Nothing here imports the package's numeric code: distances, sorting, voting
and fold bookkeeping are plain Python so a shared bug cannot hide.
"""
import math
from collections import Counter


def knn_brute(train_x, train_y, query, k=1):
    """Label by exhaustive sort on (squared distance, row index).

    Majority vote among the k nearest; a vote tie goes to whichever tied
    class owns the nearest neighbour.
    """
    ranked = sorted(
        (sum((float(a) - float(b)) ** 2 for a, b in zip(row, query)), i) for i, row in enumerate(train_x)
    )
    near = [train_y[i] for _, i in ranked[: min(k, len(ranked))]]
    counts = Counter(near)
    top = max(counts.values())
    tied = {c for c, n in counts.items() if n == top}
    for label in near:
        if label in tied:
            return label


def minmax_brute(rows, lower=-1.0, upper=1.0):
    cols = list(zip(*rows))
    out_cols = []
    for col in cols:
        lo, hi = min(col), max(col)
        if hi == lo:
            out_cols.append([lower] * len(col))
        else:
            out_cols.append([lower + (upper - lower) * (v - lo) / (hi - lo) for v in col])
    return [list(r) for r in zip(*out_cols)]


def cv_accuracy_brute(rows, labels, assignment, mask, k=1):
    """Cross-validated kNN accuracy over a given fold assignment."""
    keep = [j for j, b in enumerate(mask) if b]
    x = [[r[j] for j in keep] for r in rows]
    hits = 0
    for i, (q, y) in enumerate(zip(x, labels)):
        tr = [j for j in range(len(x)) if assignment[j] != assignment[i]]
        pred = knn_brute([x[j] for j in tr], [labels[j] for j in tr], q, k)
        hits += pred == y
    return hits / len(x)


def pearson_brute(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0 or vb == 0:
        return 0.0
    return cov / math.sqrt(va * vb)


def macro_prf_brute(truth, pred):
    classes = sorted(set(truth) | set(pred))
    ps, rs = [], []
    for c in classes:
        tp = sum(t == c and p == c for t, p in zip(truth, pred))
        fp = sum(t != c and p == c for t, p in zip(truth, pred))
        fn = sum(t == c and p != c for t, p in zip(truth, pred))
        ps.append(tp / (tp + fp) if tp + fp else 0.0)
        rs.append(tp / (tp + fn) if tp + fn else 0.0)
    p, r = sum(ps) / len(ps), sum(rs) / len(rs)
    return p, r, (2 * p * r / (p + r) if p + r else 0.0)
