"""因子分解のユースケースを記載したサービスクラスを含むモジュール"""

import logging

from domain.solver import SolverFactory
from domain.tensor import SparseTensor3
from schema.report import FactorMeta, FitReport
from schema.request import FactorizeRequest, FitOptions
from schema.solver import SolverConfig
from services.dataset_service import DatasetService
from utils.factor_store import write_factors, write_trace

logger = logging.getLogger(__name__)


def solver_config(options: FitOptions) -> SolverConfig:
    """リクエストのオプションからソルバーの設定を作る"""
    return SolverConfig(
        rank=options.rank,
        max_iters=options.iters,
        seed=options.seed,
        tolerance=options.tolerance,
        coupling=options.coupling,
    )


class FactorizeService:
    """テンソルを因子分解して結果を保存するサービスクラス"""

    def __init__(self, solver_factory: SolverFactory, datasets: DatasetService) -> None:
        """因子分解のサービスクラスの初期化

        :param solver_factory: ソルバーを生成するファクトリー
        :param datasets: 入力テンソルを扱うサービス
        """
        self.solver_factory = solver_factory
        self.datasets = datasets

    def fit(self, x: SparseTensor3, options: FitOptions) -> FitReport:
        """設定されたソルバーで因子分解する"""
        config = solver_config(options).model_copy(
            update={"epsilon_h": self.solver_factory.settings.epsilon_h}
        )
        solver = self.solver_factory.create_solver(
            options.solver, config, options.workers
        )
        return solver.fit(x)

    def run(self, request: FactorizeRequest) -> FitReport:
        """入力を読み込み、因子分解し、因子行列・メタ情報・記録を書き出す

        :param request: factorizeコマンドのリクエスト
        :return 因子分解の結果
        :raises TensorToolkitError: 読み込み・因子分解・書き出しに失敗したとき
        """
        logger.info("factorize start request:%s", request.model_dump_json())
        x = self.datasets.load(request.input)
        report = self.fit(x, request)
        meta = FactorMeta(
            dims=report.dims,
            rank=report.rank,
            solver=report.solver,
            seed=report.seed,
            iters=len(report.iterations),
            wall_ms=report.wall_ms,
            final_objective=report.final_objective,
        )
        write_factors(report.model, request.out, meta)
        if request.trace is not None:
            write_trace(report, request.trace)
        logger.info(
            "factorize end objective=%.6g updates=%d skipped=%d",
            report.final_objective,
            report.total_updates,
            report.skipped_updates,
        )
        return report
