"""SaCD(飽和座標降下法)と要素選択なしの座標降下法を管理している

要素ごとにリプシッツ重要度 z を計算し、反復間の z の変化(飽和点)が正の
要素だけを閉形式のニュートンステップで更新する.
1反復目は z > 0 の要素だけを更新し、その z を次の比較の基準として保存する
"""

import logging
from dataclasses import dataclass

import numpy as np

from domain.kernels import GramCache, mode_gradient
from domain.solver import ModePassResult, Solver
from domain.tensor import KruskalModel, SparseTensor3
from schema.report import FitReport
from schema.solver import SolverConfig
from utils.enum import Mode, SolverType

logger = logging.getLogger(__name__)


def element_importance(g_qr, u_hat_qr, lipschitz):
    """リプシッツ要素重要度 z = -(g û) - (L/2) û²

    lipschitzの代わりにh_rrを渡すと、½‖X - X̂‖² の正確な減少量になる.
    スカラーでも配列でも計算できる

    :param g_qr: 勾配
    :param u_hat_qr: 実際に適用する変化量 û
    :param lipschitz: リプシッツ定数L(0以上)
    """
    return -(g_qr * u_hat_qr) - 0.5 * lipschitz * (u_hat_qr * u_hat_qr)


def newton_step(
    u_qr: float, g_qr: float, h_rr: float, epsilon: float = 1e-12
) -> float | None:
    """非負制約付きの閉形式ステップ û = max(0, u - g/h) - u

    u + û は常に0以上になる

    :param epsilon: h_rrがこれ未満なら更新を見送る
    :return 変化量.更新を見送る場合はNone
    """
    if not h_rr >= epsilon:
        return None
    return max(0.0, u_qr - g_qr / h_rr) - u_qr


def saturation_point(z_curr, z_prev, ti_curr: float, ti_prev: float):
    """飽和点 sp

    総重要度が前回より増えていれば z_prev - z_curr、そうでなければ z_curr - z_prev.
    sp > 0 の要素だけを更新する
    """
    if ti_curr > ti_prev:
        return z_prev - z_curr
    return z_curr - z_prev


@dataclass
class ImportanceState:
    """1モード分の重要度の状態

    - z: 今回のパスの重要度行列
    - z_prev: 次のパスで比較に使う重要度行列
    - ti / ti_prev: 直近2回のパスの総重要度
    """

    z: np.ndarray
    z_prev: np.ndarray
    ti: float = 0.0
    ti_prev: float = 0.0

    @classmethod
    def zeros(cls, rows: int, rank: int) -> "ImportanceState":
        return cls(z=np.zeros((rows, rank)), z_prev=np.zeros((rows, rank)))

    def begin_pass(self, k: int) -> bool:
        """パス開始時に飽和点の式を決める.パス中は変えない

        :return 符号反転した式を使うならTrue
        """
        return k > 1 and self.ti > self.ti_prev

    def end_pass(self, k: int) -> None:
        """パス終了時に総重要度を更新する.1回目は基準として両方に入れる"""
        total = float(self.z.sum())
        self.ti_prev = total if k == 1 else self.ti
        self.ti = total


@dataclass
class ColumnUpdate:
    """1列分の更新結果.u_hatは受け入れなかった要素で0"""

    u_hat: np.ndarray
    z: np.ndarray
    accepted: int


def update_column(
    u_col: np.ndarray,
    g_col: np.ndarray,
    z_prev_col: np.ndarray,
    h_rr: float,
    lipschitz: float,
    *,
    first_pass: bool,
    flip: bool,
    select: bool = True,
    epsilon: float = 1e-12,
) -> ColumnUpdate:
    """因子行列の1列を要素ごとに更新する

    同じ列の中では g_qr は u_qr にしか依存しないので、列の要素はまとめて処理できる.
    u_colとz_prev_colはその場で書き換える

    :param u_col: 因子行列のr列目のビュー
    :param g_col: 勾配のr列目
    :param z_prev_col: 前回の重要度のr列目のビュー
    :param h_rr: 二階微分の対角要素
    :param lipschitz: リプシッツ定数L
    :param first_pass: 1反復目ならTrue(z > 0 で判定)
    :param flip: 飽和点を符号反転した式で判定するならTrue
    :param select: Falseなら全要素を更新する(要素選択なし)
    :param epsilon: h_rrがこれ未満なら列全体を見送る
    """
    rows = u_col.shape[0]
    if not h_rr >= epsilon:
        return ColumnUpdate(u_hat=np.zeros(rows), z=z_prev_col.copy(), accepted=0)

    u_hat = np.maximum(0.0, u_col - g_col / h_rr) - u_col
    z = element_importance(g_col, u_hat, lipschitz)
    if not select:
        accept = np.ones(rows, dtype=bool)
    elif first_pass:
        accept = z > 0
    else:
        # ti_curr > ti_prev の比較はパス開始時に済ませてflipで渡す
        accept = saturation_point(z, z_prev_col, 1.0 if flip else 0.0, 0.0) > 0
    u_hat = np.where(accept, u_hat, 0.0)
    u_col += u_hat
    z_prev_col[:] = z
    return ColumnUpdate(u_hat=u_hat, z=z, accepted=int(np.count_nonzero(accept)))


def sacd_mode_pass(
    x: SparseTensor3,
    model: KruskalModel,
    mode: int,
    state: ImportanceState,
    k: int,
    cache: GramCache,
    *,
    select: bool = True,
    epsilon: float = 1e-12,
) -> ModePassResult:
    """SaCDの1モード分のパス

    G, H, L をモードごとに1回計算し、列r、行qの順に要素を判定して更新する.
    列rの更新後は G ← G + û_r H[r,:] で勾配を正確に保つ
    (列内では g_qr だけが変わり、残りの列へはHの非対角要素を通じて伝わる).
    因子行列とstateはその場で書き換え、最後にそのモードのGram行列を再計算する

    :param mode: 更新するモード
    :param state: そのモードの重要度の状態
    :param k: 反復番号(1始まり)
    :param cache: Gram行列のキャッシュ.対象外モードが計算済みであること
    :param select: Falseなら要素選択なしの座標降下法になる
    :return 更新要素数E、L、使用した飽和点の式、パス後の勾配
    """
    derivatives = mode_gradient(x, model, mode, cache)
    g, h, lipschitz = derivatives.g, derivatives.h, derivatives.lipschitz
    factor = model.factor(mode)
    flip = state.begin_pass(k)
    accepted = 0
    for r in range(factor.rank):
        column = update_column(
            factor.data[:, r],
            g[:, r],
            state.z_prev[:, r],
            h[r, r],
            lipschitz,
            first_pass=k == 1,
            flip=flip,
            select=select,
            epsilon=epsilon,
        )
        state.z[:, r] = column.z
        if column.accepted:
            accepted += column.accepted
            g += np.outer(column.u_hat, h[r])
    state.end_pass(k)
    cache.refresh(model, mode)
    return ModePassResult(
        updates=accepted, lipschitz=lipschitz, flipped=flip, gradient=g
    )


class SaCDSolver(Solver):
    """SaCD(直列).要素の更新順はガウス・ザイデル"""

    solver_type = SolverType.SACD
    select = True

    def __init__(self, config: SolverConfig) -> None:
        super().__init__(config)
        self.states: list[ImportanceState] = []

    def _prepare(self, x: SparseTensor3, model: KruskalModel) -> None:
        self.states = [ImportanceState.zeros(d, self.config.rank) for d in x.dims]

    def _mode_pass(
        self,
        x: SparseTensor3,
        model: KruskalModel,
        mode: Mode,
        k: int,
        cache: GramCache,
    ) -> ModePassResult:
        return sacd_mode_pass(
            x,
            model,
            mode,
            self.states[mode],
            k,
            cache,
            select=self.select,
            epsilon=self.config.epsilon_h,
        )


class PlainCDSolver(SaCDSolver):
    """要素選択なしの座標降下法.毎反復すべての要素を更新する"""

    solver_type = SolverType.PLAIN_CD
    select = False


def fit_sacd(x: SparseTensor3, config: SolverConfig) -> FitReport:
    """SaCDで因子分解する"""
    return SaCDSolver(config).fit(x)


def fit_plain_cd(x: SparseTensor3, config: SolverConfig) -> FitReport:
    """要素選択なしの座標降下法で因子分解する"""
    return PlainCDSolver(config).fit(x)
