"""学習済みモデルの評価指標をまとめたドメインモジュール

- rmse: テスト要素(観測値のみ)に対する平方根平均二乗誤差
- precision_recall_f1: 上位N件推薦のマイクロ平均 precision / recall / F1
- pattern_distinctiveness: 因子行列の列ペアの平均コサイン類似度(低いほど良い)
- pattern_profile: 列ごとに最大値1へ正規化したパターンとピーク位置
- kfold_split: 観測要素のk分割
- recommend_top_n / relevant_items / evaluate_top_n: 上位N件推薦の評価
"""

import logging
from typing import Iterable, Mapping, Sequence

import numpy as np

from core.exceptions import ArgumentError
from domain.tensor import Entry, FactorMatrix, KruskalModel, SparseTensor3, predict_entries
from schema.evaluation import SplitSpec, TopNQuery
from utils.enum import SeedPurpose
from utils.seeding import rng_for

logger = logging.getLogger(__name__)

Fold = tuple[SparseTensor3, list[Entry]]


def _entry_arrays(
    test_entries: SparseTensor3 | Sequence[Sequence[float]],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(test_entries, SparseTensor3):
        return test_entries.coords, test_entries.values
    rows = list(test_entries)
    if any(len(row) != 4 for row in rows):
        raise ArgumentError("test entries must be (q, p, s, value) tuples")
    coords = np.array([row[:3] for row in rows], dtype=np.int64).reshape(-1, 3)
    values = np.array([row[3] for row in rows], dtype=np.float64)
    return coords, values


def rmse(
    test_entries: SparseTensor3 | Sequence[Sequence[float]], model: KruskalModel
) -> float:
    """テスト要素に対するRMSE √(Σ(x - x̂)² / n)

    存在しないセルは含めない

    :param test_entries: (q, p, s, value) の並び、または疎テンソル
    :param model: 学習済みモデル
    :raises ArgumentError: テスト要素が空のとき
    """
    coords, values = _entry_arrays(test_entries)
    if values.size == 0:
        raise ArgumentError("rmse needs at least one test entry")
    residual = values - predict_entries(model, coords)
    return float(np.sqrt(np.mean(residual * residual)))


def precision_recall_f1(
    recommended: Mapping[int, Sequence[int]],
    relevant: Mapping[int, Iterable[int]],
) -> tuple[float, float, float]:
    """上位N件推薦のマイクロ平均 precision / recall / F1

    適合アイテムを持つユーザーだけを数える.推薦がなければそのユーザーの推薦数は0

    :param recommended: ユーザーごとの推薦アイテム
    :param relevant: ユーザーごとの適合アイテム(テストで観測されたもの)
    :return (precision, recall, f1)
    :raises ArgumentError: 適合アイテムが1件もないとき
    """
    tp = n_recommended = n_relevant = 0
    for user, items in relevant.items():
        items = set(items)
        if not items:
            continue
        top = list(recommended.get(user, ()))
        tp += len(items.intersection(top))
        n_recommended += len(top)
        n_relevant += len(items)
    if n_relevant == 0:
        raise ArgumentError("no relevant items in any user")
    precision = tp / n_recommended if n_recommended else 0.0
    recall = tp / n_relevant
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def _pairwise_cosines(w: FactorMatrix | np.ndarray) -> np.ndarray:
    data = w.data if isinstance(w, FactorMatrix) else np.asarray(w, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ArgumentError(f"pattern distinctiveness needs R >= 2: {data.shape}")
    norms = np.linalg.norm(data, axis=0)
    # 全要素0の列はどの列とも類似度0
    unit = np.divide(data, norms, out=np.zeros_like(data), where=norms > 0)
    cosines = unit.T @ unit
    upper = np.triu_indices(data.shape[1], k=1)
    return cosines[upper]


def pattern_distinctiveness(w: FactorMatrix | np.ndarray) -> float:
    """列ペア i < r のコサイン類似度の平均.低いほどパターンが区別できている

    :raises ArgumentError: 列数が2未満のとき
    """
    return float(np.mean(_pairwise_cosines(w)))


def pattern_distinctiveness_max(w: FactorMatrix | np.ndarray) -> float:
    """列ペアのコサイン類似度の最大値"""
    return float(np.max(_pairwise_cosines(w)))


def pattern_profile(w: FactorMatrix | np.ndarray) -> tuple[np.ndarray, list[int]]:
    """列ごとに最大値が1になるよう正規化したパターンとピーク行

    :return (正規化した行列, 列ごとの最大値の行番号)
    """
    data = w.data if isinstance(w, FactorMatrix) else np.asarray(w, dtype=np.float64)
    peaks = np.max(data, axis=0)
    scaled = np.divide(data, peaks, out=np.zeros_like(data), where=peaks > 0)
    return scaled, [int(i) for i in np.argmax(data, axis=0)]


def kfold_split(x: SparseTensor3, spec: SplitSpec) -> list[Fold]:
    """観測要素をk分割し、フォールドごとに (学習テンソル, テスト要素) を作る

    学習テンソルはテスト以外のすべての要素を持つ.フォールドの大きさの差は1以下

    :raises ArgumentError: 要素数がフォールド数より少ないとき
    """
    if x.nnz < spec.folds:
        raise ArgumentError(f"{x.nnz} entries cannot fill {spec.folds} folds")
    permutation = rng_for(spec.seed, SeedPurpose.FOLDS).permutation(x.nnz)
    folds: list[Fold] = []
    for test_positions in np.array_split(permutation, spec.folds):
        mask = np.ones(x.nnz, dtype=bool)
        mask[test_positions] = False
        test_positions = np.sort(test_positions)
        test = [
            (int(q), int(p), int(s), float(v))
            for (q, p, s), v in zip(
                x.coords[test_positions].tolist(), x.values[test_positions].tolist()
            )
        ]
        folds.append((x.subset(np.flatnonzero(mask)), test))
    return folds


def relevant_items(
    test_entries: Iterable[Sequence[float]], threshold: float | None = None
) -> dict[int, set[int]]:
    """テスト要素からユーザーごとの適合アイテムを作る

    :param threshold: 値がこれを超える要素だけを適合とする.Noneなら全件
    """
    relevant: dict[int, set[int]] = {}
    for q, p, _, value in test_entries:
        if threshold is None or value > threshold:
            relevant.setdefault(int(q), set()).add(int(p))
    return relevant


def recommend_top_n(
    model: KruskalModel, train: SparseTensor3, users: Iterable[int], n: int
) -> dict[int, list[int]]:
    """ユーザーごとに学習データで未観測のアイテムを上位n件推薦する

    アイテムpのスコアは max_s x̂(q, p, s).同点は番号の小さいアイテムを優先する

    :param model: 学習済みモデル
    :param train: 学習テンソル.観測済みアイテムを候補から除く
    :param users: 推薦するユーザー
    :param n: 推薦件数
    """
    if n < 1:
        raise ArgumentError(f"n must be >= 1: {n}")
    model.check_fits(train)
    v, w = model.v.data, model.w.data
    recommendations: dict[int, list[int]] = {}
    for q in users:
        scores = np.max((v * model.u.data[q]) @ w.T, axis=1)
        seen = set(train.coords[train.slice_positions(0, q), 1].tolist())
        ranked = np.argsort(-scores, kind="stable")
        recommendations[int(q)] = [int(p) for p in ranked if int(p) not in seen][:n]
    return recommendations


def evaluate_top_n(
    model: KruskalModel,
    train: SparseTensor3,
    test_entries: Sequence[Entry],
    query: TopNQuery,
) -> tuple[float, float, float]:
    """テスト要素に対する上位N件推薦の precision / recall / F1

    :raises ArgumentError: 適合アイテムが1件もないとき
    """
    relevant = relevant_items(test_entries, query.threshold)
    recommended = recommend_top_n(model, train, sorted(relevant), query.n)
    return precision_recall_f1(recommended, relevant)
