"""3階の疎テンソル、因子行列、CPモデルと小さな行列演算をまとめたドメインモジュール

- SparseTensor3: 座標形式(COO)の3階疎テンソル.モードごとのスライス索引を持つ
- FactorMatrix: 非負の密な因子行列(行数 x ランク)
- KruskalModel: 3つの因子行列の組 [[U, V, W]]
- khatri_rao / hadamard / gram: 小さな行列積
- predict / predict_entries: CPモデルによる値の再構成
- dense_oracle_objective: テスト用の密な総当たり目的関数
- mode_slice_entries: あるモードの1スライスに含まれる要素
"""

import logging
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from core.exceptions import ArgumentError, CapacityError

logger = logging.getLogger(__name__)

Entry = tuple[int, int, int, float]

# モードごとに、スライス内の並び順を決める「残りの座標」の列番号
_REMAINING_AXES = {0: (1, 2), 1: (0, 2), 2: (0, 1)}

DEFAULT_DENSE_CAP = 1_000_000


def _check_mode(mode: int) -> int:
    if mode not in (0, 1, 2):
        raise ArgumentError(f"mode must be 0, 1 or 2: {mode}")
    return int(mode)


class SparseTensor3:
    """3階の疎テンソル

    要素は (q, p, s) の辞書順に並べて保持するので、カーネルの走査順と
    浮動小数点の和の順序が決定的になる.構築後は読み取り専用

    - dims: 各モードの長さ (Q, P, S)
    - coords: (nnz, 3) の0始まり座標
    - values: (nnz,) の値
    - norm_sq: 値の二乗和 ‖X‖²
    - slice_positions: あるモードのスライスに含まれる要素位置
    - selector: モードごとのスライス選択行列(CSR, 行数 x nnz, 値付き)
    """

    def __init__(
        self,
        dims: Sequence[int],
        coords: np.ndarray,
        values: np.ndarray,
    ) -> None:
        """疎テンソルの初期化

        :param dims: 各モードの長さ (Q, P, S)
        :param coords: (nnz, 3) の0始まり整数座標
        :param values: (nnz,) の有限な実数値
        :raises ArgumentError: 次元・座標・値が不正、または座標が重複しているとき
        """
        if len(dims) != 3 or any(int(d) < 1 for d in dims):
            raise ArgumentError(f"dims must be three positive integers: {dims}")
        self.dims: tuple[int, int, int] = tuple(int(d) for d in dims)

        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if coords.shape[0] != values.shape[0]:
            raise ArgumentError(
                f"coords and values disagree: {coords.shape[0]} != {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise ArgumentError("values must be finite")
        if coords.size and (
            np.any(coords < 0) or np.any(coords >= np.asarray(self.dims))
        ):
            raise ArgumentError(f"coordinates out of range for dims {self.dims}")

        order = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))
        coords = coords[order]
        values = values[order]
        if coords.shape[0] > 1:
            same = np.all(coords[1:] == coords[:-1], axis=1)
            if np.any(same):
                q, p, s = coords[int(np.argmax(same))]
                raise ArgumentError(f"duplicate coordinate ({q}, {p}, {s})")

        coords.setflags(write=False)
        values.setflags(write=False)
        self.coords = coords
        self.values = values
        self.norm_sq = float(values @ values)

        self._slice_order: list[np.ndarray] = []
        self._slice_ptr: list[np.ndarray] = []
        self._selectors: list[sp.csr_matrix] = []
        for mode in range(3):
            self._build_mode_index(mode)

    def _build_mode_index(self, mode: int) -> None:
        """モードの索引(Ω^U_q, Ω^V_p, Ω^W_s)を作る"""
        first, second = _REMAINING_AXES[mode]
        order = np.lexsort(
            (self.coords[:, second], self.coords[:, first], self.coords[:, mode])
        )
        counts = np.bincount(self.coords[order, mode], minlength=self.dims[mode])
        ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        order.setflags(write=False)
        ptr.setflags(write=False)
        self._slice_order.append(order)
        self._slice_ptr.append(ptr)
        self._selectors.append(
            sp.csr_matrix(
                (self.values[order], order, ptr),
                shape=(self.dims[mode], self.nnz),
            )
        )

    @classmethod
    def from_entries(
        cls, dims: Sequence[int], entries: Iterable[Sequence[float]]
    ) -> "SparseTensor3":
        """(q, p, s, value) のリストから疎テンソルを作る

        :param dims: 各モードの長さ
        :param entries: 0始まりの (q, p, s, value) の並び
        :return 疎テンソル
        """
        rows = [tuple(entry) for entry in entries]
        if any(len(row) != 4 for row in rows):
            raise ArgumentError("entries must be (q, p, s, value) tuples")
        coords = np.array([row[:3] for row in rows], dtype=np.int64).reshape(-1, 3)
        values = np.array([row[3] for row in rows], dtype=np.float64)
        return cls(dims, coords, values)

    @classmethod
    def empty(cls, dims: Sequence[int]) -> "SparseTensor3":
        """要素を持たない疎テンソルを作る"""
        return cls(dims, np.empty((0, 3), dtype=np.int64), np.empty(0))

    @property
    def nnz(self) -> int:
        """観測要素数 |Ω|"""
        return int(self.values.shape[0])

    def entries(self) -> list[Entry]:
        """要素を (q, p, s, value) のリストとして返す(辞書順)"""
        return [
            (int(q), int(p), int(s), float(v))
            for (q, p, s), v in zip(self.coords.tolist(), self.values.tolist())
        ]

    def subset(self, positions: np.ndarray) -> "SparseTensor3":
        """指定した要素位置だけを持つ同じ次元の疎テンソルを返す

        :param positions: 要素位置の配列
        """
        positions = np.sort(np.asarray(positions, dtype=np.int64))
        return SparseTensor3(self.dims, self.coords[positions], self.values[positions])

    def slice_positions(self, mode: int, index: int) -> np.ndarray:
        """モードmodeのindex番目のスライスに含まれる要素位置

        並びは残りの座標の辞書順

        :param mode: 0, 1, 2 のいずれか
        :param index: スライス番号
        :raises ArgumentError: modeかindexが範囲外のとき
        """
        mode = _check_mode(mode)
        if not 0 <= index < self.dims[mode]:
            raise ArgumentError(
                f"index {index} out of range for mode {mode} of length {self.dims[mode]}"
            )
        ptr = self._slice_ptr[mode]
        return self._slice_order[mode][ptr[index] : ptr[index + 1]]

    def selector(self, mode: int) -> sp.csr_matrix:
        """スライス選択行列.行iはスライスiの要素位置に値を持つ"""
        return self._selectors[_check_mode(mode)]

    def to_dense(self, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        """密な配列に展開する.存在しないセルは0

        :param cap: 展開を許すセル数の上限
        :raises CapacityError: Q*P*Sがcapを超えるとき
        """
        cells = self.dims[0] * self.dims[1] * self.dims[2]
        if cells > cap:
            raise CapacityError(f"tensor with {cells} cells exceeds dense cap {cap}")
        dense = np.zeros(self.dims)
        if self.nnz:
            dense[self.coords[:, 0], self.coords[:, 1], self.coords[:, 2]] = self.values
        return dense

    def __repr__(self) -> str:
        return f"SparseTensor3(dims={self.dims}, nnz={self.nnz})"


class FactorMatrix:
    """非負の密な因子行列(行数 x ランク)

    dataは可変.並列時は各ワーカーが別々の列だけを書き込む

    - rows: モードの長さ
    - rank: 列数R
    - data: (rows, rank) の float64 配列
    - column: r列目のビュー
    - validate: 非負・有限であることを確認する
    """

    def __init__(self, data: np.ndarray) -> None:
        """因子行列の初期化

        :param data: (rows, rank) の配列.コピーして保持する
        :raises ArgumentError: 2次元でない、空、負値や非有限値を含むとき
        """
        data = np.array(data, dtype=np.float64, ndmin=2)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ArgumentError(f"factor matrix must be a non-empty 2-D array: {data.shape}")
        self.data = data
        self.validate()

    @classmethod
    def zeros(cls, rows: int, rank: int) -> "FactorMatrix":
        """0で埋めた因子行列"""
        return cls(np.zeros((rows, rank)))

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def rank(self) -> int:
        return int(self.data.shape[1])

    def column(self, r: int) -> np.ndarray:
        """r列目のビュー"""
        return self.data[:, r]

    def validate(self) -> None:
        """非負制約と有限性を確認する

        :raises ArgumentError: 負値か非有限値があるとき
        """
        if not np.all(np.isfinite(self.data)):
            raise ArgumentError("factor matrix contains non-finite values")
        if np.any(self.data < 0):
            raise ArgumentError("factor matrix violates nonnegativity")

    def copy(self) -> "FactorMatrix":
        return FactorMatrix(self.data)

    def __repr__(self) -> str:
        return f"FactorMatrix(rows={self.rows}, rank={self.rank})"


class KruskalModel:
    """CPモデル [[U, V, W]]

    - u, v, w: 各モードの因子行列
    - rank: 共通のランクR
    - factor: モード番号で因子行列を取り出す
    """

    def __init__(self, u: FactorMatrix, v: FactorMatrix, w: FactorMatrix) -> None:
        """CPモデルの初期化

        :raises ArgumentError: 3つの因子行列のランクが一致しないとき
        """
        if not u.rank == v.rank == w.rank:
            raise ArgumentError(
                f"factor ranks disagree: {u.rank}, {v.rank}, {w.rank}"
            )
        self.u = u
        self.v = v
        self.w = w

    @classmethod
    def from_arrays(
        cls, u: np.ndarray, v: np.ndarray, w: np.ndarray
    ) -> "KruskalModel":
        return cls(FactorMatrix(u), FactorMatrix(v), FactorMatrix(w))

    @property
    def rank(self) -> int:
        return self.u.rank

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.u.rows, self.v.rows, self.w.rows)

    @property
    def factors(self) -> tuple[FactorMatrix, FactorMatrix, FactorMatrix]:
        return (self.u, self.v, self.w)

    def factor(self, mode: int) -> FactorMatrix:
        return self.factors[_check_mode(mode)]

    def check_fits(self, x: SparseTensor3) -> None:
        """モデルのモード長がテンソルと一致するか確認する

        :raises ArgumentError: 一致しないとき
        """
        if self.dims != x.dims:
            raise ArgumentError(f"model dims {self.dims} do not match tensor {x.dims}")

    def copy(self) -> "KruskalModel":
        return KruskalModel(self.u.copy(), self.v.copy(), self.w.copy())

    def __repr__(self) -> str:
        return f"KruskalModel(dims={self.dims}, rank={self.rank})"


def _as_array(a: FactorMatrix | np.ndarray) -> np.ndarray:
    return a.data if isinstance(a, FactorMatrix) else np.asarray(a, dtype=np.float64)


def khatri_rao(a: FactorMatrix | np.ndarray, b: FactorMatrix | np.ndarray) -> np.ndarray:
    """Khatri-Rao積(列ごとのクロネッカー積)

    結果の行 i*b.rows + j は a[i] * b[j]

    :param a: (I, R) の行列
    :param b: (J, R) の行列
    :return (I*J, R) の行列
    :raises ArgumentError: 列数が一致しないとき
    """
    a, b = _as_array(a), _as_array(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ArgumentError(f"khatri_rao rank mismatch: {a.shape} vs {b.shape}")
    return (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """アダマール積(要素ごとの積)

    :raises ArgumentError: 形状が一致しないとき
    """
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ArgumentError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def gram(a: FactorMatrix | np.ndarray) -> np.ndarray:
    """Gram行列 aᵀa (R x R)"""
    a = _as_array(a)
    return a.T @ a


def predict(model: KruskalModel, q: int, p: int, s: int) -> float:
    """1セルの予測値 Σ_r u[q,r] v[p,r] w[s,r]

    :raises ArgumentError: インデックスが範囲外のとき
    """
    for index, length in zip((q, p, s), model.dims):
        if not 0 <= index < length:
            raise ArgumentError(f"index ({q}, {p}, {s}) out of bounds for {model.dims}")
    return float(
        np.sum(model.u.data[q] * model.v.data[p] * model.w.data[s])
    )


def predict_entries(model: KruskalModel, coords: np.ndarray) -> np.ndarray:
    """複数セルの予測値をまとめて計算する

    :param coords: (n, 3) の0始まり座標
    :return (n,) の予測値
    """
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    if coords.size and (
        np.any(coords < 0) or np.any(coords >= np.asarray(model.dims))
    ):
        raise ArgumentError(f"coordinates out of bounds for {model.dims}")
    products = (
        model.u.data[coords[:, 0]]
        * model.v.data[coords[:, 1]]
        * model.w.data[coords[:, 2]]
    )
    return products.sum(axis=1)


def reconstruct(model: KruskalModel, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """CPモデルを密なテンソルに再構成する

    :raises CapacityError: セル数がcapを超えるとき
    """
    q, p, s = model.dims
    if q * p * s > cap:
        raise CapacityError(f"model with {q * p * s} cells exceeds dense cap {cap}")
    return np.einsum("ir,jr,kr->ijk", model.u.data, model.v.data, model.w.data)


def unfold(dense: np.ndarray, mode: int) -> np.ndarray:
    """密なテンソルの展開行列

    列の並びはmttkrpの因子順(モード0: (W,V)、モード1: (W,U)、モード2: (V,U))の
    Khatri-Rao積の行に対応する
    """
    mode = _check_mode(mode)
    axes = {0: (0, 2, 1), 1: (1, 2, 0), 2: (2, 1, 0)}[mode]
    return dense.transpose(axes).reshape(dense.shape[mode], -1)


def dense_oracle_objective(
    x: SparseTensor3, model: KruskalModel, cap: int = DEFAULT_DENSE_CAP
) -> float:
    """全セルを展開した総当たりの目的関数 Σ (x - x̂)²

    存在しないセルは0として扱う.テストの正解値として使う

    :param cap: 展開を許すセル数の上限
    :raises CapacityError: セル数がcapを超えるとき
    """
    model.check_fits(x)
    residual = x.to_dense(cap) - reconstruct(model, cap)
    return float(np.sum(residual * residual))


def mode_slice_entries(x: SparseTensor3, mode: int, index: int) -> list[Entry]:
    """モードmodeの座標がindexに等しい要素の一覧(残りの座標順)

    :raises ArgumentError: modeかindexが範囲外のとき
    """
    positions = x.slice_positions(mode, index)
    return [
        (int(q), int(p), int(s), float(v))
        for (q, p, s), v in zip(
            x.coords[positions].tolist(), x.values[positions].tolist()
        )
    ]
