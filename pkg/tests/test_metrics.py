import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ispso.metrics import accuracy, confusion, precision_recall_f
from oracles import macro_prf_brute


def test_perfect_predictions():
    y = ["a", "b", "c", "a"]
    c = confusion(y, y)
    assert not c.fp.any() and not c.fn.any()
    assert precision_recall_f(c) == (1.0, 1.0, 1.0)


def test_all_flipped_binary():
    c = confusion([0, 1, 1, 0], [1, 0, 0, 1])
    assert not c.tp.any() and not c.tn.any()
    assert precision_recall_f(c) == (0.0, 0.0, 0.0)


def test_hand_counts():
    c = confusion(["A", "A", "B"], ["A", "B", "B"])
    assert c.per_class("A") == {"TP": 1, "FN": 1, "FP": 0, "TN": 1}
    assert c.total == 3


def test_macro_precision_golden():
    # positive: TP=2 FP=1 FN=2; negative: TP=1 FP=2 FN=1
    truth = ["P", "P", "P", "P", "N", "N"]
    pred = ["P", "P", "N", "N", "P", "N"]
    c = confusion(truth, pred)
    assert c.per_class("P") == {"TP": 2, "FP": 1, "FN": 2, "TN": 1}
    assert c.per_class("N") == {"TP": 1, "FP": 2, "FN": 1, "TN": 2}
    p, r, f = precision_recall_f(c)
    assert p == pytest.approx((2 / 3 + 1 / 3) / 2, abs=1e-12)
    assert p == pytest.approx(0.5, abs=1e-12)
    assert r == pytest.approx((2 / 4 + 1 / 2) / 2, abs=1e-12)
    assert f == pytest.approx(2 * p * r / (p + r), abs=1e-12)


def test_absent_class_counts_zero():
    # class "c" is never predicted nor true: both ratios 0 -> pulls the macro mean down
    c = confusion(["a", "b"], ["a", "b"], classes=["a", "b", "c"])
    p, r, _ = precision_recall_f(c)
    assert p == pytest.approx(2 / 3) and r == pytest.approx(2 / 3)


def test_accuracy_goldens():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2], [2, 1]) == 0.0
    assert accuracy([1, 1, 0, 0], [1, 1, 0, 1]) == 0.75


def test_errors():
    with pytest.raises(ValueError):
        confusion([1, 2], [1])
    with pytest.raises(ValueError):
        confusion([1, 2], [1, 3], classes=[1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])


pairs = st.integers(1, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 4), min_size=n, max_size=n), st.lists(st.integers(0, 4), min_size=n, max_size=n)
    )
)


@settings(max_examples=200, deadline=None)
@given(pairs, st.randoms(use_true_random=False))
def test_metric_properties(tp, rnd):
    truth, pred = tp
    c = confusion(truth, pred)
    p, r, f = precision_recall_f(c)
    assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12
    assert (p, r, f) == pytest.approx(macro_prf_brute(truth, pred), abs=1e-12)
    assert accuracy(truth, pred) == pytest.approx(c.tp.sum() / len(truth), abs=1e-12)
    order = list(range(len(truth)))
    rnd.shuffle(order)
    c2 = confusion([truth[i] for i in order], [pred[i] for i in order])
    assert precision_recall_f(c2) == pytest.approx((p, r, f), abs=1e-12)
    assert np.array_equal(c.tp + c.fp + c.fn + c.tn, np.full(len(c.classes), len(truth)))
