"""CLIの各コマンドに渡すリクエストのDTO"""

from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from utils.enum import ColumnCoupling, SolverType


class FitOptions(BaseModel):
    """因子分解を伴うコマンドで共通のオプション"""

    input: Path = Field(..., description="入力の.tnsファイル")
    rank: int = Field(..., ge=1, description="ランクR")
    iters: int = Field(30, ge=1, description="反復回数K")
    solver: SolverType = Field(SolverType.SACD, description="利用するソルバー")
    seed: int = Field(0, ge=0, description="乱数シード")
    workers: int | None = Field(None, ge=1, description="FSaCDのワーカー数")
    tolerance: float | None = Field(None, gt=0)
    coupling: ColumnCoupling = Field(ColumnCoupling.SNAPSHOT)


class FactorizeRequest(FitOptions):
    """factorizeコマンドのリクエスト"""

    out: Path = Field(..., description="因子行列の出力ディレクトリ")
    trace: Path | None = Field(None, description="反復ごとの記録のCSV")


class EvalRequest(FitOptions):
    """evalコマンドのリクエスト"""

    folds: int = Field(5, ge=2, description="フォールド数")
    topn: int = Field(10, ge=1, description="推薦件数N")
    threshold: float | None = Field(None, description="適合とみなすテスト値の下限")


class GenRequest(BaseModel):
    """genコマンドのリクエスト"""

    dims: tuple[int, int, int] = Field(..., description="各モードの長さ")
    density: float = Field(..., gt=0, le=1)
    seed: int = Field(0, ge=0)
    planted_rank: int | None = Field(None, ge=1, description="正解モデルのランク")
    out: Path = Field(..., description="出力する.tnsファイル")

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, dims: tuple[int, int, int]) -> tuple[int, int, int]:
        if any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive: {dims}")
        return dims
