"""FSaCD(列単位で並列化した飽和座標降下法)を管理している

列rの勾配は g_r = -sttvp(X, w_r, v_r) + U h_r で計算でき、列ごとのMTTKRPと融合できる.
モードのパス内で列をワーカーに静的に分割し、各ワーカーは自分の列だけを書き込む.

列間の結合(U h_r)の扱いはColumnCouplingで選ぶ
- SNAPSHOT: パス開始時の因子行列から全列の勾配を作る.ワーカー数によらず結果が同じ
- SEQUENTIAL: sttvpだけを並列に計算し、Gram項と更新は列順に適用する.SaCDと一致する
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from core.exceptions import ArgumentError
from core.workers import ColumnWorkerPool, partition_columns
from domain.kernels import (
    OTHER_MODES,
    GramCache,
    lipschitz_constant,
    mode_hessian,
    mttkrp_column,
)
from domain.sacd import ImportanceState, update_column
from domain.solver import ModePassResult, Solver
from domain.tensor import KruskalModel, SparseTensor3
from schema.report import FitReport
from schema.solver import SolverConfig
from utils.enum import ColumnCoupling, Mode, SolverType

logger = logging.getLogger(__name__)


@dataclass
class ColumnTask:
    """1列分のタスクの結果

    - mode: 対象モード
    - r: 列番号
    - g: 更新前の勾配列
    - z: 重要度列
    - accepted: 更新を受け入れた要素数
    """

    mode: int
    r: int
    g: np.ndarray
    z: np.ndarray
    accepted: int


def fsacd_mode_pass(
    x: SparseTensor3,
    model: KruskalModel,
    mode: int,
    state: ImportanceState,
    k: int,
    cache: GramCache,
    pool: ColumnWorkerPool,
    *,
    coupling: ColumnCoupling = ColumnCoupling.SNAPSHOT,
    epsilon: float = 1e-12,
) -> ModePassResult:
    """FSaCDの1モード分のパス

    H と L はモードごとに1回計算し、列タスクをワーカーに分配する.
    すべてのタスクが終わってからGram行列を再計算する

    :param pool: 列タスクを実行するワーカープール
    :param coupling: 列間のGram項の扱い
    :return 更新要素数E、L、使用した飽和点の式、パス後の勾配(更新前の値)
    :raises SolverError: 列タスクが失敗したとき
    """
    a_mode, b_mode = OTHER_MODES[mode]
    a, b = model.factor(a_mode), model.factor(b_mode)
    h = mode_hessian(cache, mode)
    lipschitz = lipschitz_constant(h)
    factor = model.factor(mode).data
    rank = factor.shape[1]
    flip = state.begin_pass(k)
    first_pass = k == 1
    blocks = partition_columns(rank, pool.workers)

    def apply(r: int, g_r: np.ndarray) -> ColumnTask:
        column = update_column(
            factor[:, r],
            g_r,
            state.z_prev[:, r],
            h[r, r],
            lipschitz,
            first_pass=first_pass,
            flip=flip,
            epsilon=epsilon,
        )
        state.z[:, r] = column.z
        return ColumnTask(mode, r, g_r, column.z, column.accepted)

    if coupling == ColumnCoupling.SNAPSHOT:
        snapshot = factor.copy()
        snapshot.setflags(write=False)

        def run_block(block: np.ndarray) -> list[ColumnTask]:
            tasks = []
            for r in block.tolist():
                m_r = mttkrp_column(x, mode, a.column(r), b.column(r), r)
                tasks.append(apply(r, -m_r + snapshot @ h[:, r]))
            return tasks

        tasks = [task for block in pool.run_blocks(run_block, blocks) for task in block]
    else:

        def run_block(block: np.ndarray) -> list[tuple[int, np.ndarray]]:
            return [
                (r, mttkrp_column(x, mode, a.column(r), b.column(r), r))
                for r in block.tolist()
            ]

        sttvp = dict(
            item for block in pool.run_blocks(run_block, blocks) for item in block
        )
        tasks = [apply(r, -sttvp[r] + factor @ h[:, r]) for r in range(rank)]

    state.end_pass(k)
    cache.refresh(model, mode)
    gradient = np.empty_like(factor)
    for task in tasks:
        gradient[:, task.r] = task.g
    return ModePassResult(
        updates=sum(task.accepted for task in tasks),
        lipschitz=lipschitz,
        flipped=flip,
        gradient=gradient,
    )


class FSaCDSolver(Solver):
    """FSaCD(列並列).fitの間だけワーカープールを保持する"""

    solver_type = SolverType.FSACD

    def __init__(self, config: SolverConfig, workers: int = 1) -> None:
        """FSaCDソルバーの初期化

        :param config: ソルバー共通の設定
        :param workers: ワーカー数
        :raises ArgumentError: workersが1未満のとき
        """
        super().__init__(config)
        if workers < 1:
            raise ArgumentError(f"workers must be >= 1: {workers}")
        self._workers = workers
        self._pool: ColumnWorkerPool | None = None
        self.states: list[ImportanceState] = []

    @property
    def workers(self) -> int:
        return self._workers

    def fit(self, x: SparseTensor3, model: KruskalModel | None = None) -> FitReport:
        with ColumnWorkerPool(self._workers) as pool:
            self._pool = pool
            try:
                return super().fit(x, model)
            finally:
                self._pool = None

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
        return fsacd_mode_pass(
            x,
            model,
            mode,
            self.states[mode],
            k,
            cache,
            self._pool,
            coupling=self.config.coupling,
            epsilon=self.config.epsilon_h,
        )


def fit_fsacd(
    x: SparseTensor3,
    config: SolverConfig,
    workers: int = 1,
    measure_speedup: bool = False,
) -> FitReport:
    """FSaCDで因子分解する

    :param workers: ワーカー数
    :param measure_speedup: Trueなら1ワーカーで再実行し、反復ごとと全体の速度比を記録する
    :return 因子分解の結果
    """
    report = FSaCDSolver(config, workers).fit(x)
    if not measure_speedup:
        return report

    tick = time.perf_counter()
    baseline = FSaCDSolver(config, 1).fit(x)
    logger.info(
        "speedup baseline rerun finished in %.2f ms",
        (time.perf_counter() - tick) * 1000.0,
    )
    iterations = [
        record.model_copy(
            update={"speedup": _ratio(single.wall_ms, record.wall_ms)}
        )
        for record, single in zip(report.iterations, baseline.iterations)
    ]
    overall = _ratio(baseline.wall_ms, report.wall_ms)
    logger.info("fsacd workers=%d speedup=%.3f", workers, overall)
    return report.model_copy(update={"iterations": iterations, "speedup": overall})


def _ratio(single_ms: float, parallel_ms: float) -> float:
    return single_ms / max(parallel_ms, np.finfo(float).tiny)
