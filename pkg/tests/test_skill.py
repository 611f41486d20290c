import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import auc_pairwise
from quakebase.skill import (
    ConfusionCounts,
    auc_trapezoid,
    confusion,
    confusion_arrays,
    roc_auc,
    roc_curve,
    skill,
)


def test_confusion_examples():
    assert confusion([]) == ConfusionCounts(0, 0, 0, 0)
    pairs = [(1, 1)] * 3 + [(0, 1)] + [(0, 0)] * 4 + [(1, 0)] * 2
    assert confusion(pairs) == ConfusionCounts(tp=3, fn=1, tn=4, fp=2)
    correct = [(1, 1)] * 4 + [(0, 0)] * 6
    c = confusion(correct)
    assert c.fn == 0 and c.fp == 0 and c.total == 10


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), max_size=200))
def test_confusion_partitions(pairs):
    c = confusion(pairs)
    assert c.total == len(pairs)
    p = np.array([x for x, _ in pairs], dtype=int)
    o = np.array([y for _, y in pairs], dtype=int)
    assert confusion_arrays(p, o) == c


def test_confusion_rejects_negative():
    with pytest.raises(ValueError):
        ConfusionCounts(-1, 0, 0, 0)


def test_confusion_merge():
    assert ConfusionCounts(1, 2, 3, 4) + ConfusionCounts(4, 3, 2, 1) == ConfusionCounts(5, 5, 5, 5)


def test_skill_examples():
    r = skill(ConfusionCounts(3, 1, 4, 2))
    assert r.tpr == 0.75
    assert r.tnr == pytest.approx(2 / 3, rel=1e-15)
    assert r.r_score == pytest.approx(0.75 + 2 / 3 - 1, rel=1e-15)
    assert skill(ConfusionCounts(5, 0, 5, 0)).r_score == 1.0
    undefined = skill(ConfusionCounts(0, 0, 5, 5))
    assert undefined.tpr is None and undefined.r_score is None
    assert undefined.tnr == 0.5 and not undefined.defined


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_r_score_swap_symmetry(tp, fn, tn, fp):
    a = skill(ConfusionCounts(tp, fn, tn, fp))
    b = skill(ConfusionCounts(tn, fp, tp, fn))
    if a.r_score is None:
        assert b.r_score is None
    else:
        assert a.r_score == pytest.approx(b.r_score, abs=1e-15)
        assert a.r_score == a.tpr + a.tnr - 1.0


def test_auc_examples():
    assert roc_auc([2, 3, 0, 1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([1, 1, 1, 1], [1, 0, 1, 0]) == 0.5
    assert roc_auc([1, 2, 3], [1, 1, 1]) is None
    assert auc_trapezoid([1, 2], [0, 0]) is None


def test_auc_random_instance_vs_bruteforce():
    rng = np.random.default_rng(50)
    s = rng.normal(size=50)
    y = rng.random(50) < 0.4
    assert abs(roc_auc(s, y) - auc_pairwise(s, y)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_auc_with_ties_vs_bruteforce(seed):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 5, size=80).astype(float)
    y = rng.random(80) < 0.5
    assert abs(roc_auc(s, y) - auc_pairwise(s, y)) <= 1e-12
    assert abs(auc_trapezoid(s, y) - auc_pairwise(s, y)) <= 1e-12


def test_auc_monotone_transform_invariance():
    rng = np.random.default_rng(8)
    s = rng.normal(size=300)
    y = rng.random(300) < 0.3
    base = roc_auc(s, y)
    assert roc_auc(np.exp(s), y) == base
    assert roc_auc(3 * s + 7, y) == base
    assert roc_auc(np.arctan(s), y) == base


def test_auc_complement_without_ties():
    rng = np.random.default_rng(9)
    s = rng.normal(size=200)
    y = rng.random(200) < 0.5
    assert roc_auc(s, y) + roc_auc(-s, y) == pytest.approx(1.0, abs=1e-14)


def test_roc_curve_endpoints():
    fpr, tpr = roc_curve([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert (fpr[0], tpr[0]) == (0.0, 0.0)
    assert (fpr[-1], tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    with pytest.raises(ValueError):
        roc_curve([1, 2], [1, 1])
