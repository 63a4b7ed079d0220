"""アプリケーションで共通の依存関係のあるモジュールをまとめる
"""

from core.config import Settings
from domain.solver import SolverFactory
from services.bench_service import BenchService
from services.dataset_service import DatasetService
from services.eval_service import EvalService
from services.factorize_service import FactorizeService


def get_settings() -> Settings:
    """.envと環境変数に記載されている設定を取得

    :return 設定クラス
    """
    return Settings()


def get_solver_factory(settings: Settings | None = None) -> SolverFactory:
    """ソルバーのFactoryを取得

    :param settings: 設定.省略時はget_settings
    :return ソルバーのFactoryクラス
    """
    return SolverFactory(settings or get_settings())


def get_dataset_service() -> DatasetService:
    """入力テンソルを扱うサービスクラスを取得"""
    return DatasetService()


def get_factorize_service(
    solver_factory: SolverFactory | None = None,
) -> FactorizeService:
    """因子分解のサービスクラスを取得

    :param solver_factory: ソルバーのFactoryクラス
    """
    return FactorizeService(
        solver_factory or get_solver_factory(), get_dataset_service()
    )


def get_eval_service(
    factorize_service: FactorizeService | None = None,
) -> EvalService:
    """評価のサービスクラスを取得"""
    return EvalService(factorize_service or get_factorize_service())


def get_bench_service(solver_factory: SolverFactory | None = None) -> BenchService:
    """計測のサービスクラスを取得"""
    return BenchService(solver_factory or get_solver_factory())
