"""因子分解や評価の結果を表すDTO"""

from pydantic import BaseModel, ConfigDict, Field, computed_field

from domain.tensor import KruskalModel
from utils.enum import SolverType


class MemoryInventory(BaseModel):
    """1回の因子分解で保持するデータ量の内訳(バイト)"""

    tensor_bytes: int = Field(..., ge=0, description="座標・値・モード索引")
    factor_bytes: int = Field(..., ge=0, description="因子行列 U, V, W")
    importance_bytes: int = Field(..., ge=0, description="重要度行列 Z")
    gradient_bytes: int = Field(..., ge=0, description="勾配行列 G")
    hessian_bytes: int = Field(..., ge=0, description="R x R の二階微分行列")

    @computed_field
    @property
    def total_bytes(self) -> int:
        return (
            self.tensor_bytes
            + self.factor_bytes
            + self.importance_bytes
            + self.gradient_bytes
            + self.hessian_bytes
        )


class IterationRecord(BaseModel):
    """1反復分の診断情報"""

    iteration: int = Field(..., ge=1, description="反復番号k(1始まり)")
    objective: float = Field(..., description="反復後の目的関数 ‖X - X̂‖²")
    updates: tuple[int, int, int] = Field(..., description="モードごとの更新要素数E")
    lipschitz: tuple[float, float, float] = Field(
        ..., description="モードごとのリプシッツ定数L"
    )
    wall_ms: float = Field(..., ge=0, description="反復の経過時間(ミリ秒)")
    speedup: float | None = Field(None, description="1ワーカー実行に対する速度比")


class FitReport(BaseModel):
    """因子分解の結果.学習済みモデルと反復ごとの記録を持つ"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    solver: SolverType = Field(..., description="使用したソルバー")
    dims: tuple[int, int, int] = Field(..., description="テンソルの次元")
    rank: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)
    workers: int = Field(1, ge=1, description="使用したワーカー数")
    initial_objective: float = Field(..., description="初期モデルの目的関数")
    iterations: list[IterationRecord] = Field(default_factory=list)
    converged: bool = Field(False, description="相対変化の閾値で停止したか")
    stop_reason: str = Field("max_iters", description="停止理由")
    wall_ms: float = Field(0.0, ge=0, description="全体の経過時間(ミリ秒)")
    memory: MemoryInventory
    speedup: float | None = Field(None, description="全体の速度比(計測時のみ)")
    model: KruskalModel = Field(..., exclude=True)

    @property
    def final_objective(self) -> float:
        if not self.iterations:
            return self.initial_objective
        return self.iterations[-1].objective

    @property
    def total_updates(self) -> int:
        return sum(sum(record.updates) for record in self.iterations)

    @property
    def skipped_updates(self) -> int:
        per_iteration = sum(self.dims) * self.rank
        return per_iteration * len(self.iterations) - self.total_updates


class FactorMeta(BaseModel):
    """因子行列のCSVと一緒に保存するメタ情報"""

    dims: tuple[int, int, int]
    rank: int = Field(..., ge=1)
    solver: SolverType
    seed: int = Field(..., ge=0)
    iters: int = Field(..., ge=0, description="実行した反復回数")
    wall_ms: float = Field(..., ge=0)
    final_objective: float | None = None


class FoldMetrics(BaseModel):
    """1フォールド分の評価結果"""

    fold: int = Field(..., ge=0)
    train_entries: int = Field(..., ge=0)
    test_entries: int = Field(..., ge=0)
    rmse: float
    precision: float
    recall: float
    f1: float
    pattern_distinctiveness: float | None = Field(
        None, description="第3モード因子のPD(列ペアの平均コサイン)"
    )
    pattern_distinctiveness_max: float | None = None
    pattern_peaks: list[int] | None = Field(
        None, description="第3モード因子の列ごとのピーク位置"
    )
    final_objective: float


class EvalReport(BaseModel):
    """k分割交差検証の結果"""

    solver: SolverType
    rank: int
    folds: list[FoldMetrics]
    top_n: int
    mean_rmse: float
    mean_precision: float
    mean_recall: float
    mean_f1: float
    mean_pattern_distinctiveness: float | None = None
