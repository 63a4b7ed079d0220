"""因子分解の計算カーネルをまとめたドメインモジュール

- GramCache: モードごとのGram行列 UᵀU, VᵀV, WᵀW と鮮度の管理
- ModeDerivatives: モードの勾配G、二階微分H、リプシッツ定数L
- mttkrp / mttkrp_column: 疎なMTTKRPと列ごとの版(sttvp)
- mode_hessian / lipschitz_constant: H = 2つのGram行列のアダマール積と ‖H‖_F
- mode_gradient / column_gradient: G = -mttkrp + 因子行列 @ H
- sparse_objective: Khatri-Rao積を作らずに ‖X - X̂‖² を評価する
- memory_inventory: 因子分解で保持するデータ量の見積もり

勾配は目的関数の半分 ½‖X - X̂‖² について定義する.
こうすると1変数の2次部分問題の最小化ステップがちょうど -g/h になる
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ArgumentError, StaleCacheError
from domain.tensor import FactorMatrix, KruskalModel, SparseTensor3, gram, hadamard
from schema.report import MemoryInventory

logger = logging.getLogger(__name__)

# mttkrpに渡す2つの因子のモード (a, b).モード0は (W, V)、1は (W, U)、2は (V, U)
OTHER_MODES = {0: (2, 1), 1: (2, 0), 2: (1, 0)}

_FLOAT_BYTES = 8
_INDEX_BYTES = 8


def _check_mode(mode: int) -> int:
    if mode not in OTHER_MODES:
        raise ArgumentError(f"mode must be 0, 1 or 2: {mode}")
    return int(mode)


class GramCache:
    """モードごとのGram行列を保持するキャッシュ

    因子行列を書き換えたら、そのモードをすぐにrefreshかinvalidateする

    - refresh: 現在の因子行列から再計算して鮮度を戻す
    - invalidate: 古いものとして印を付ける
    - get: Gram行列を返す.古ければStaleCacheError
    """

    def __init__(self) -> None:
        self._grams: list[np.ndarray | None] = [None, None, None]

    @classmethod
    def from_model(cls, model: KruskalModel) -> "GramCache":
        """すべてのモードを計算済みのキャッシュを作る"""
        cache = cls()
        for mode in range(3):
            cache.refresh(model, mode)
        return cache

    def refresh(self, model: KruskalModel, mode: int) -> None:
        """モードのGram行列を再計算する(差分更新はしない)"""
        self._grams[_check_mode(mode)] = gram(model.factor(mode))

    def invalidate(self, mode: int) -> None:
        self._grams[_check_mode(mode)] = None

    def is_fresh(self, mode: int) -> bool:
        return self._grams[_check_mode(mode)] is not None

    def get(self, mode: int) -> np.ndarray:
        """Gram行列を返す

        :raises StaleCacheError: 無効化されているとき
        """
        value = self._grams[_check_mode(mode)]
        if value is None:
            raise StaleCacheError(f"gram of mode {mode} is stale")
        return value


@dataclass
class ModeDerivatives:
    """モードの勾配G (rows x R)、二階微分H (R x R)、リプシッツ定数L = ‖H‖_F"""

    g: np.ndarray
    h: np.ndarray
    lipschitz: float


def _check_pair(
    x: SparseTensor3, mode: int, a_rows: int, b_rows: int, rank_a: int, rank_b: int
) -> tuple[int, int]:
    mode = _check_mode(mode)
    a_mode, b_mode = OTHER_MODES[mode]
    if rank_a != rank_b:
        raise ArgumentError(f"rank mismatch: {rank_a} != {rank_b}")
    if a_rows != x.dims[a_mode] or b_rows != x.dims[b_mode]:
        raise ArgumentError(
            f"factor lengths ({a_rows}, {b_rows}) do not match modes "
            f"({a_mode}, {b_mode}) of dims {x.dims}"
        )
    return a_mode, b_mode


def mttkrp(
    x: SparseTensor3, mode: int, a: FactorMatrix, b: FactorMatrix
) -> np.ndarray:
    """疎なMTTKRP(展開行列 x Khatri-Rao積)

    Khatri-Rao積は作らず、要素ごとの積 a[ia] * b[ib] をスライス選択行列で集約する

    :param mode: 対象モード
    :param a: 対象外モードの因子(モード0ならW)
    :param b: 対象外モードの因子(モード0ならV)
    :return (モード長, R) の行列
    :raises ArgumentError: ランクか行数が一致しないとき
    """
    a_mode, b_mode = _check_pair(x, mode, a.rows, b.rows, a.rank, b.rank)
    products = a.data[x.coords[:, a_mode]] * b.data[x.coords[:, b_mode]]
    return np.asarray(x.selector(mode) @ products)


def mttkrp_column(
    x: SparseTensor3, mode: int, a_col: np.ndarray, b_col: np.ndarray, r: int = 0
) -> np.ndarray:
    """列ごとのMTTKRP(疎テンソル x ベクトル, sttvp)

    要素qは Σ_{Ωのモード座標がq} x * a_col[.] * b_col[.].mttkrpのr列目と一致する

    :param a_col: 対象外モードの因子のr列目(モード0ならw_r)
    :param b_col: 対象外モードの因子のr列目(モード0ならv_r)
    :param r: 列番号(エラー時の文脈用)
    :return (モード長,) のベクトル
    :raises ArgumentError: ベクトルの長さが一致しないとき
    """
    a_col = np.asarray(a_col, dtype=np.float64)
    b_col = np.asarray(b_col, dtype=np.float64)
    if a_col.ndim != 1 or b_col.ndim != 1:
        raise ArgumentError(f"column {r}: a_col and b_col must be vectors")
    a_mode, b_mode = _check_pair(x, mode, a_col.shape[0], b_col.shape[0], 1, 1)
    products = a_col[x.coords[:, a_mode]] * b_col[x.coords[:, b_mode]]
    return np.asarray(x.selector(mode) @ products)


def mode_hessian(cache: GramCache, mode: int) -> np.ndarray:
    """モードの二階微分 H(対象外の2つのGram行列のアダマール積)

    :raises StaleCacheError: 対象外モードのGram行列が古いとき
    """
    a_mode, b_mode = OTHER_MODES[_check_mode(mode)]
    return hadamard(cache.get(a_mode), cache.get(b_mode))


def lipschitz_constant(h: np.ndarray) -> float:
    """リプシッツ定数 L = ‖H‖_F

    :raises ArgumentError: 非有限値を含むとき
    """
    h = np.asarray(h, dtype=np.float64)
    if not np.all(np.isfinite(h)):
        raise ArgumentError("hessian contains non-finite values")
    return float(np.linalg.norm(h, "fro"))


def _mode_pair(model: KruskalModel, mode: int) -> tuple[FactorMatrix, FactorMatrix]:
    a_mode, b_mode = OTHER_MODES[_check_mode(mode)]
    return model.factor(a_mode), model.factor(b_mode)


def mode_gradient(
    x: SparseTensor3, model: KruskalModel, mode: int, cache: GramCache
) -> ModeDerivatives:
    """モードの勾配 G = -mttkrp + 因子行列 @ H と H, L をまとめて計算する"""
    a, b = _mode_pair(model, mode)
    h = mode_hessian(cache, mode)
    g = -mttkrp(x, mode, a, b) + model.factor(mode).data @ h
    return ModeDerivatives(g=g, h=h, lipschitz=lipschitz_constant(h))


def column_gradient(
    x: SparseTensor3, model: KruskalModel, mode: int, r: int, cache: GramCache
) -> np.ndarray:
    """勾配のr列目だけを mttkrp_column と行列ベクトル積で計算する"""
    a, b = _mode_pair(model, mode)
    if not 0 <= r < model.rank:
        raise ArgumentError(f"column {r} out of range for rank {model.rank}")
    h = mode_hessian(cache, mode)
    m_r = mttkrp_column(x, mode, a.column(r), b.column(r), r)
    return -m_r + model.factor(mode).data @ h[:, r]


def sparse_objective(
    x: SparseTensor3, model: KruskalModel, cache: GramCache
) -> float:
    """目的関数 ‖X - X̂‖² を疎に評価する

    ‖X‖² - 2 Σ_Ω x x̂ + 1ᵀ(UᵀU * VᵀV * WᵀW)1 を使い、計算量は O(|Ω|R + R²)

    :raises StaleCacheError: いずれかのモードのGram行列が古いとき
    """
    model.check_fits(x)
    coords = x.coords
    fitted = (
        model.u.data[coords[:, 0]]
        * model.v.data[coords[:, 1]]
        * model.w.data[coords[:, 2]]
    ).sum(axis=1)
    cross = float(x.values @ fitted)
    model_norm_sq = float(np.sum(cache.get(0) * cache.get(1) * cache.get(2)))
    return max(0.0, x.norm_sq - 2.0 * cross + model_norm_sq)


def memory_inventory(x: SparseTensor3, rank: int) -> MemoryInventory:
    """因子分解で保持するデータ量を見積もる

    テンソル(座標・値・3モード分の索引)、因子行列・重要度行列・勾配行列が
    各 Σ rows*R、二階微分行列がモードごとに R*R
    """
    if rank < 1:
        raise ArgumentError(f"rank must be >= 1: {rank}")
    nnz = x.nnz
    tensor_bytes = (
        nnz * (3 * _INDEX_BYTES + _FLOAT_BYTES)
        + 3 * nnz * (_INDEX_BYTES + _FLOAT_BYTES)
        + sum(d + 1 for d in x.dims) * _INDEX_BYTES
    )
    factor_bytes = sum(x.dims) * rank * _FLOAT_BYTES
    return MemoryInventory(
        tensor_bytes=tensor_bytes,
        factor_bytes=factor_bytes,
        importance_bytes=factor_bytes,
        gradient_bytes=factor_bytes,
        hessian_bytes=3 * rank * rank * _FLOAT_BYTES,
    )
