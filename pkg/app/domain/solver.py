"""因子分解ソルバーの基底クラスと生成用のファクトリーを管理している
"""

import logging
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from core.config import Settings
from core.exceptions import ArgumentError, SolverError
from domain.kernels import GramCache, memory_inventory, sparse_objective
from domain.tensor import FactorMatrix, KruskalModel, SparseTensor3
from schema.report import FitReport, IterationRecord
from schema.solver import SolverConfig
from utils.enum import Mode, SeedPurpose, SolverType
from utils.seeding import rng_for

logger = logging.getLogger(__name__)


def init_factors(dims: tuple[int, int, int], rank: int, seed: int) -> KruskalModel:
    """因子行列を一様分布 [0, 1) で初期化する

    同じシードなら常に同じ因子行列になる

    :param dims: 各モードの長さ
    :param rank: ランクR
    :param seed: 乱数シード
    :return 初期化したCPモデル
    :raises ArgumentError: 次元かランクが1未満のとき
    """
    if len(dims) != 3 or any(d < 1 for d in dims) or rank < 1:
        raise ArgumentError(f"dims and rank must be positive: {dims}, {rank}")
    rng = rng_for(seed, SeedPurpose.INIT)
    return KruskalModel(*(FactorMatrix(rng.random((d, rank))) for d in dims))


@dataclass
class ModePassResult:
    """1モード分のパスの結果

    - updates: 更新を受け入れた要素数E
    - lipschitz: そのモードのリプシッツ定数L
    - flipped: 飽和点を符号反転した式で判定したか
    - gradient: パス後の勾配G(保持している場合のみ)
    """

    updates: int
    lipschitz: float
    flipped: bool = False
    gradient: np.ndarray | None = None


class Solver(ABC):
    """因子分解ソルバーの仮想クラス

    反復ループ、Gram行列の管理、停止判定、レポート作成は共通.
    サブクラスは1モード分の更新(_mode_pass)だけを実装する

    - fit: 疎テンソルを因子分解してFitReportを返す
    """

    solver_type: SolverType

    def __init__(self, config: SolverConfig) -> None:
        """ソルバーの初期化

        :param config: ソルバー共通の設定
        """
        self.config = config

    def _prepare(self, x: SparseTensor3, model: KruskalModel) -> None:
        """fitの開始時にモードごとの状態を作る"""

    @abstractmethod
    def _mode_pass(
        self,
        x: SparseTensor3,
        model: KruskalModel,
        mode: Mode,
        k: int,
        cache: GramCache,
    ) -> ModePassResult:
        """1モード分の因子行列を更新する

        :param k: 反復番号(1始まり)
        :return 更新要素数などの結果
        """

    @property
    def workers(self) -> int:
        return 1

    def fit(
        self, x: SparseTensor3, model: KruskalModel | None = None
    ) -> FitReport:
        """疎テンソルを因子分解する

        モードU, V, Wの順に更新し、反復ごとに目的関数などを記録する

        :param x: 入力の疎テンソル
        :param model: 初期モデル.省略時はシードから初期化する.与えた場合は直接更新する
        :return 学習済みモデルと反復ごとの記録
        :raises ArgumentError: モデルとテンソルの次元やランクが一致しないとき
        :raises SolverError: パスが中断したとき
        """
        config = self.config
        if model is None:
            model = init_factors(x.dims, config.rank, config.seed)
        model.check_fits(x)
        if model.rank != config.rank:
            raise ArgumentError(f"model rank {model.rank} != config rank {config.rank}")

        cache = GramCache.from_model(model)
        self._prepare(x, model)
        previous = initial = sparse_objective(x, model, cache)
        logger.info(
            "%s start dims=%s nnz=%d rank=%d iters=%d objective=%.6g",
            self.solver_type.value,
            x.dims,
            x.nnz,
            config.rank,
            config.max_iters,
            initial,
        )

        records: list[IterationRecord] = []
        converged = False
        stop_reason = "max_iters"
        started = time.perf_counter()
        for k in range(1, config.max_iters + 1):
            tick = time.perf_counter()
            updates, lipschitz = [], []
            for mode in Mode:
                result = self._mode_pass(x, model, mode, k, cache)
                bound = model.factor(mode).rows * config.rank
                if not 0 <= result.updates <= bound:
                    raise SolverError(
                        f"mode {mode.name} accepted {result.updates} updates, bound {bound}"
                    )
                if not cache.is_fresh(mode):
                    cache.refresh(model, mode)
                updates.append(result.updates)
                lipschitz.append(result.lipschitz)
                logger.debug(
                    "iter %d mode %s E=%d L=%.6g flipped=%s",
                    k,
                    mode.name,
                    result.updates,
                    result.lipschitz,
                    result.flipped,
                )
            objective = sparse_objective(x, model, cache)
            wall_ms = (time.perf_counter() - tick) * 1000.0
            records.append(
                IterationRecord(
                    iteration=k,
                    objective=objective,
                    updates=tuple(updates),
                    lipschitz=tuple(lipschitz),
                    wall_ms=wall_ms,
                )
            )
            logger.info(
                "iter %d objective=%.6g E=%s wall_ms=%.2f", k, objective, updates, wall_ms
            )
            if config.tolerance is not None:
                change = abs(previous - objective) / max(previous, np.finfo(float).eps)
                if change < config.tolerance:
                    converged = True
                    stop_reason = "tolerance"
                    break
            previous = objective

        for factor in model.factors:
            factor.validate()
        return FitReport(
            solver=self.solver_type,
            dims=x.dims,
            rank=config.rank,
            seed=config.seed,
            workers=self.workers,
            initial_objective=initial,
            iterations=records,
            converged=converged,
            stop_reason=stop_reason,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            memory=memory_inventory(x, config.rank),
            model=model,
        )


def default_workers(settings: Settings) -> int:
    """設定のワーカー数.未設定ならCPU数"""
    return settings.workers or os.cpu_count() or 1


# Factory クラス
class SolverFactory:
    """
    ソルバーを生成するFactoryクラス
    """

    def __init__(self, settings: Settings) -> None:
        """ソルバーを生成するファクトリークラスの初期化

        :param settings: 設定ファイルの記載内容
        """
        self.settings = settings

    def create_solver(
        self,
        solver_type: SolverType,
        config: SolverConfig,
        workers: int | None = None,
    ) -> Solver:
        """ソルバーを生成する

        :param solver_type: 利用するソルバーのEnum
        :param config: ソルバー共通の設定
        :param workers: FSaCDのワーカー数.省略時は設定から決める
        :return Solverの仮想クラスを継承したインスタンス
        :raises NotImplementedError: solver_typeが存在しないエラー
        """
        # 循環importを避けるためにここで読み込む
        from domain.fsacd import FSaCDSolver
        from domain.hals import HALSSolver
        from domain.sacd import PlainCDSolver, SaCDSolver

        match solver_type:
            case SolverType.SACD:
                return SaCDSolver(config)
            case SolverType.PLAIN_CD:
                return PlainCDSolver(config)
            case SolverType.HALS:
                return HALSSolver(config)
            case SolverType.FSACD:
                if workers is None:
                    workers = default_workers(self.settings)
                return FSaCDSolver(config, workers)
            case _:
                raise NotImplementedError(f"Solver type {solver_type} is not implemented")
