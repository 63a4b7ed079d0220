"""合成テンソルの生成

すべての乱数は1つのシードから用途別のストリームで作るので、同じシードなら同じテンソルになる
"""

import logging
from typing import Sequence

import numpy as np

from core.exceptions import ArgumentError
from domain.tensor import FactorMatrix, KruskalModel, SparseTensor3, predict_entries
from utils.enum import SeedPurpose
from utils.seeding import rng_for

logger = logging.getLogger(__name__)

# 密度がこれを超えるときは全セルのシャッフルから先頭を取る
_SHUFFLE_DENSITY = 0.25


def synthetic_nnz(dims: Sequence[int], density: float) -> int:
    """密度から要素数 round(density * Q * P * S) を求める(0.5は切り上げ)

    :raises ArgumentError: 密度が (0, 1] の範囲外のとき
    """
    if not 0 < density <= 1:
        raise ArgumentError(f"density must lie in (0, 1]: {density}")
    cells = int(np.prod([int(d) for d in dims], dtype=np.int64))
    return min(cells, int(np.floor(density * cells + 0.5)))


def _sample_linear_indices(
    rng: np.random.Generator, cells: int, nnz: int
) -> np.ndarray:
    """重複しない線形インデックスをnnz個選ぶ"""
    if nnz == 0:
        return np.empty(0, dtype=np.int64)
    if nnz > _SHUFFLE_DENSITY * cells:
        return rng.permutation(cells)[:nnz].astype(np.int64)

    chosen = np.empty(0, dtype=np.int64)
    while chosen.size < nnz:
        draws = rng.integers(0, cells, size=2 * (nnz - chosen.size), dtype=np.int64)
        merged = np.concatenate((chosen, draws))
        # 初出の順序を保ったまま重複を除く
        _, first = np.unique(merged, return_index=True)
        chosen = merged[np.sort(first)]
    return chosen[:nnz]


def planted_model(dims: Sequence[int], rank: int, seed: int) -> KruskalModel:
    """一様分布 [0, 1) の非負な正解モデルを作る

    :raises ArgumentError: 次元かランクが1未満のとき
    """
    if len(dims) != 3 or any(int(d) < 1 for d in dims) or rank < 1:
        raise ArgumentError(f"dims and rank must be positive: {dims}, {rank}")
    rng = rng_for(seed, SeedPurpose.PLANTED)
    return KruskalModel(*(FactorMatrix(rng.random((int(d), rank))) for d in dims))


def generate_synthetic(
    dims: Sequence[int],
    density: float,
    seed: int,
    planted_rank: int | None = None,
) -> SparseTensor3:
    """ランダムな疎テンソルを生成する

    座標は重複なしで一様に選ぶ.値は (0, 1] の一様分布、planted_rankを指定したときは
    正解モデルの予測値になる

    :param dims: 各モードの長さ
    :param density: 密度 (0, 1]
    :param seed: 乱数シード
    :param planted_rank: 正解モデルのランク
    :return 生成したテンソル
    :raises ArgumentError: 密度が範囲外、次元が不正なとき
    """
    if len(dims) != 3 or any(int(d) < 1 for d in dims):
        raise ArgumentError(f"dims must be three positive integers: {dims}")
    dims = tuple(int(d) for d in dims)
    nnz = synthetic_nnz(dims, density)
    cells = dims[0] * dims[1] * dims[2]
    linear = _sample_linear_indices(rng_for(seed, SeedPurpose.SAMPLING), cells, nnz)
    coords = np.stack(np.unravel_index(linear, dims), axis=1).astype(np.int64)

    if planted_rank is None:
        values = 1.0 - rng_for(seed, SeedPurpose.VALUES).random(nnz)
    else:
        values = predict_entries(planted_model(dims, planted_rank, seed), coords)
    logger.info(
        "generated tensor dims=%s density=%g nnz=%d planted_rank=%s",
        dims,
        density,
        nnz,
        planted_rank,
    )
    return SparseTensor3(dims, coords.reshape(-1, 3), values)
