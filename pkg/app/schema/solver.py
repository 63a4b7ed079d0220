"""ソルバーに渡す設定のDTO"""

from pydantic import BaseModel, Field

from utils.enum import ColumnCoupling


class SolverConfig(BaseModel):
    """ソルバー共通の設定

    toleranceを指定しない場合は反復回数だけで停止する
    """

    rank: int = Field(..., ge=1, description="因子行列の列数R")
    max_iters: int = Field(30, ge=1, description="最大反復回数K")
    seed: int = Field(0, ge=0, description="初期化に使う乱数シード")
    tolerance: float | None = Field(
        None, gt=0, description="目的関数の相対変化による停止閾値"
    )
    epsilon_h: float = Field(1e-12, gt=0, description="h_rrがこれ未満の列は更新しない")
    coupling: ColumnCoupling = Field(
        ColumnCoupling.SNAPSHOT, description="FSaCDでの列間のGram項の扱い"
    )
