"""k分割交差検証による評価のユースケースを記載したサービスクラスを含むモジュール"""

import logging

import numpy as np

from core.exceptions import ArgumentError
from domain.metrics import (
    evaluate_top_n,
    kfold_split,
    pattern_distinctiveness,
    pattern_distinctiveness_max,
    pattern_profile,
    rmse,
)
from domain.tensor import SparseTensor3
from schema.evaluation import SplitSpec, TopNQuery
from schema.report import EvalReport, FoldMetrics
from schema.request import EvalRequest
from services.factorize_service import FactorizeService

logger = logging.getLogger(__name__)


class EvalService:
    """フォールドごとに因子分解し、RMSE・推薦精度・PDを求めるサービスクラス"""

    def __init__(self, factorize_service: FactorizeService) -> None:
        """評価のサービスクラスの初期化

        :param factorize_service: 因子分解のサービス
        """
        self.factorize_service = factorize_service

    def evaluate(self, x: SparseTensor3, request: EvalRequest) -> EvalReport:
        """k分割交差検証を実行する

        PDは第3モードの因子行列で計算する(R < 2 なら省略)

        :param x: 観測テンソル
        :param request: evalコマンドのリクエスト
        :return フォールドごとと平均の評価結果
        :raises ArgumentError: 要素数がフォールド数より少ないとき
        """
        split = SplitSpec(folds=request.folds, seed=request.seed)
        query = TopNQuery(n=request.topn, threshold=request.threshold)
        folds: list[FoldMetrics] = []
        for fold, (train, test) in enumerate(kfold_split(x, split)):
            report = self.factorize_service.fit(train, request)
            model = report.model
            try:
                precision, recall, f1 = evaluate_top_n(model, train, test, query)
            except ArgumentError as e:
                logger.warning("fold %d has no relevant items: %s", fold, e)
                precision = recall = f1 = 0.0
            pd = pd_max = peaks = None
            if model.rank >= 2:
                pd = pattern_distinctiveness(model.w)
                pd_max = pattern_distinctiveness_max(model.w)
                _, peaks = pattern_profile(model.w)
            metrics = FoldMetrics(
                fold=fold,
                train_entries=train.nnz,
                test_entries=len(test),
                rmse=rmse(test, model),
                precision=precision,
                recall=recall,
                f1=f1,
                pattern_distinctiveness=pd,
                pattern_distinctiveness_max=pd_max,
                pattern_peaks=peaks,
                final_objective=report.final_objective,
            )
            logger.info("fold %d metrics:%s", fold, metrics.model_dump_json())
            folds.append(metrics)

        pds = [f.pattern_distinctiveness for f in folds if f.pattern_distinctiveness is not None]
        return EvalReport(
            solver=request.solver,
            rank=request.rank,
            folds=folds,
            top_n=request.topn,
            mean_rmse=float(np.mean([f.rmse for f in folds])),
            mean_precision=float(np.mean([f.precision for f in folds])),
            mean_recall=float(np.mean([f.recall for f in folds])),
            mean_f1=float(np.mean([f.f1 for f in folds])),
            mean_pattern_distinctiveness=float(np.mean(pds)) if pds else None,
        )
