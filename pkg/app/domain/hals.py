"""列単位の非負最小二乗(HALS)による比較用ソルバー
"""

import logging

import numpy as np

from domain.kernels import OTHER_MODES, GramCache, lipschitz_constant, mode_hessian, mttkrp_column
from domain.solver import ModePassResult, Solver
from domain.tensor import KruskalModel, SparseTensor3
from schema.report import FitReport
from schema.solver import SolverConfig
from utils.enum import Mode, SolverType

logger = logging.getLogger(__name__)


def hals_mode_pass(
    x: SparseTensor3,
    model: KruskalModel,
    mode: int,
    cache: GramCache,
    epsilon: float = 1e-12,
) -> ModePassResult:
    """HALSの1モード分のパス

    列rごとに u_r ← max(0, u_r + (m_r - (U H)_r) / h_rr) を現在のUで計算する.
    列の更新は前の列の結果を使うので、目的関数は増えない

    :param epsilon: h_rrがこれ未満の列は更新しない
    :return 更新した要素数(列ごとに全行)とL
    """
    a_mode, b_mode = OTHER_MODES[mode]
    a, b = model.factor(a_mode), model.factor(b_mode)
    h = mode_hessian(cache, mode)
    factor = model.factor(mode).data
    updates = 0
    for r in range(factor.shape[1]):
        if not h[r, r] >= epsilon:
            logger.debug("mode %d column %d skipped h_rr=%.3g", mode, r, h[r, r])
            continue
        m_r = mttkrp_column(x, mode, a.column(r), b.column(r), r)
        g_r = -m_r + factor @ h[:, r]
        factor[:, r] = np.maximum(0.0, factor[:, r] - g_r / h[r, r])
        updates += factor.shape[0]
    cache.refresh(model, mode)
    return ModePassResult(updates=updates, lipschitz=lipschitz_constant(h))


class HALSSolver(Solver):
    """HALS(列単位の非負最小二乗)"""

    solver_type = SolverType.HALS

    def _mode_pass(
        self,
        x: SparseTensor3,
        model: KruskalModel,
        mode: Mode,
        k: int,
        cache: GramCache,
    ) -> ModePassResult:
        return hals_mode_pass(x, model, mode, cache, self.config.epsilon_h)


def fit_hals(x: SparseTensor3, config: SolverConfig) -> FitReport:
    """HALSで因子分解する"""
    return HALSSolver(config).fit(x)
