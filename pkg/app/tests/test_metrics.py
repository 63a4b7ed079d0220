import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.exceptions import ArgumentError
from domain.metrics import (
    evaluate_top_n,
    kfold_split,
    pattern_distinctiveness,
    pattern_distinctiveness_max,
    pattern_profile,
    precision_recall_f1,
    recommend_top_n,
    relevant_items,
    rmse,
)
from domain.tensor import FactorMatrix, KruskalModel, SparseTensor3
from schema.evaluation import SplitSpec, TopNQuery
from helpers import make_random_model, make_random_tensor


def _zero_model(dims):
    return KruskalModel(*(FactorMatrix.zeros(d, 1) for d in dims))


def test_rmse_examples():
    model = _zero_model((2, 2, 2))
    assert rmse([(0, 0, 0, 3.0), (1, 1, 1, 4.0)], model) == pytest.approx(
        math.sqrt(12.5), abs=1e-9
    )
    assert rmse([(0, 1, 0, 1.0)], model) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ArgumentError):
        rmse([], model)


def test_rmse_of_perfect_predictions(rng):
    model = make_random_model(rng, (3, 3, 3), 2)
    coords = [(0, 1, 2), (2, 2, 0)]
    entries = [
        (q, p, s, float(np.sum(model.u.data[q] * model.v.data[p] * model.w.data[s])))
        for q, p, s in coords
    ]
    assert rmse(entries, model) == pytest.approx(0.0, abs=1e-12)
    assert rmse(entries[::-1], model) == rmse(entries, model)


def test_precision_recall_f1_examples():
    assert precision_recall_f1({0: [1, 2]}, {0: {1, 2}}) == (1.0, 1.0, 1.0)
    assert precision_recall_f1({0: [1, 2]}, {0: {3, 4}}) == (0.0, 0.0, 0.0)
    precision, recall, f1 = precision_recall_f1({0: ["a", "b"]}, {0: {"a", "c"}})
    assert (precision, recall, f1) == pytest.approx((0.5, 0.5, 0.5), abs=1e-9)
    with pytest.raises(ArgumentError):
        precision_recall_f1({0: [1]}, {0: set()})


def test_precision_recall_f1_is_micro_averaged():
    recommended = {0: [1, 2], 1: [5, 6]}
    relevant = {0: {1}, 1: {5, 6, 7}}
    precision, recall, f1 = precision_recall_f1(recommended, relevant)
    assert precision == pytest.approx(3 / 4)
    assert recall == pytest.approx(3 / 4)
    assert f1 == pytest.approx(2 * precision * recall / (precision + recall))


def test_precision_recall_f1_bounds(rng):
    for _ in range(50):
        users = range(5)
        recommended = {u: list(rng.choice(20, size=3, replace=False)) for u in users}
        relevant = {u: set(rng.choice(20, size=4, replace=False).tolist()) for u in users}
        precision, recall, f1 = precision_recall_f1(recommended, relevant)
        assert 0 <= precision <= 1 and 0 <= recall <= 1
        low = min(precision, recall)
        assert f1 <= 2 * low / (1 + low) + 1e-12


def test_pattern_distinctiveness_examples():
    assert pattern_distinctiveness(np.array([[1.0, 1.0], [2.0, 2.0]])) == pytest.approx(1.0)
    assert pattern_distinctiveness(np.array([[1.0, 0.0], [0.0, 1.0]])) == 0.0
    assert pattern_distinctiveness(np.array([[1.0, 1.0], [0.0, 1.0]])) == pytest.approx(
        1 / math.sqrt(2), abs=1e-9
    )
    assert pattern_distinctiveness(np.array([[1.0, 0.0], [1.0, 0.0]])) == 0.0
    with pytest.raises(ArgumentError):
        pattern_distinctiveness(np.ones((3, 1)))


def test_pattern_distinctiveness_mean_and_max():
    w = FactorMatrix(np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]))
    # コサインは (1/√2, 0, 1/√2)
    assert pattern_distinctiveness(w) == pytest.approx(math.sqrt(2) / 3)
    assert pattern_distinctiveness_max(w) == pytest.approx(1 / math.sqrt(2))


def test_pattern_distinctiveness_is_scale_invariant(rng):
    w = rng.random((6, 4))
    scaled = w.copy()
    scaled[:, 2] *= 7.0
    assert pattern_distinctiveness(scaled) == pytest.approx(
        pattern_distinctiveness(w), abs=1e-12
    )


def test_pattern_profile():
    w = np.array([[1.0, 0.0], [4.0, 0.0], [2.0, 0.0]])
    scaled, peaks = pattern_profile(w)
    assert_allclose(scaled[:, 0], [0.25, 1.0, 0.5])
    assert_allclose(scaled[:, 1], 0.0)
    assert peaks == [1, 0]


def test_kfold_split_partitions_entries(rng):
    x = make_random_tensor(rng, (4, 4, 4), 10 / 64)
    assert x.nnz == 10
    folds = kfold_split(x, SplitSpec(folds=5, seed=3))
    assert len(folds) == 5
    tests = [test for _, test in folds]
    assert all(len(test) == 2 for test in tests)
    union = sorted(entry for test in tests for entry in test)
    assert union == x.entries()
    for train, test in folds:
        assert train.nnz == 8
        assert not set(train.entries()) & set(test)
        assert train.dims == x.dims


def test_kfold_split_is_deterministic_and_balanced(rng):
    x = make_random_tensor(rng, (5, 5, 5), 0.3)
    first = kfold_split(x, SplitSpec(folds=4, seed=1))
    second = kfold_split(x, SplitSpec(folds=4, seed=1))
    assert [t for _, t in first] == [t for _, t in second]
    sizes = [len(t) for _, t in first]
    assert max(sizes) - min(sizes) <= 1
    with pytest.raises(ArgumentError):
        kfold_split(SparseTensor3.from_entries((2, 2, 2), [(0, 0, 0, 1.0)]), SplitSpec(folds=2))


def test_relevant_items():
    entries = [(0, 1, 0, 0.5), (0, 2, 1, 2.0), (1, 0, 0, 3.0)]
    assert relevant_items(entries) == {0: {1, 2}, 1: {0}}
    assert relevant_items(entries, threshold=1.0) == {0: {2}, 1: {0}}


def test_recommend_top_n_ranks_by_max_context_score():
    # ユーザー0のアイテムp・文脈sのスコアは v[p] * w[s]
    model = KruskalModel.from_arrays(
        [[1.0]],
        [[3.0], [1.0], [3.0], [2.0]],
        [[0.5], [1.0]],
    )
    train = SparseTensor3.from_entries((1, 4, 2), [(0, 0, 1, 1.0)])
    top = recommend_top_n(model, train, [0], 2)
    # アイテム0は学習で観測済み.アイテム2とアイテム0は同点だが0は除外される
    assert top == {0: [2, 3]}
    assert recommend_top_n(model, SparseTensor3.empty((1, 4, 2)), [0], 3) == {0: [0, 2, 3]}


def test_evaluate_top_n():
    model = KruskalModel.from_arrays([[1.0], [1.0]], [[3.0], [1.0], [2.0]], [[1.0]])
    train = SparseTensor3.from_entries((2, 3, 1), [(0, 0, 0, 1.0)])
    test = [(0, 2, 0, 1.0), (1, 1, 0, 1.0)]
    precision, recall, f1 = evaluate_top_n(model, train, test, TopNQuery(n=1))
    # ユーザー0は[2]で的中、ユーザー1は[0]で外れ
    assert (precision, recall, f1) == pytest.approx((0.5, 0.5, 0.5))
