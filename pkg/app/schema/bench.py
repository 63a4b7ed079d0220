"""スケーラビリティ計測の計画と結果のDTO"""

from pydantic import BaseModel, Field, field_validator, model_validator

from utils.enum import BenchAxis, SolverType


class BenchPlan(BaseModel):
    """1つの軸を掃引し、残り2軸を固定する計測計画"""

    axis: BenchAxis = Field(..., description="掃引する軸")
    grid: list[float] = Field(..., min_length=1, description="軸の値の一覧")
    mode_length: int = Field(64, ge=1, description="固定するモード長")
    density: float = Field(1e-3, gt=0, le=1, description="固定する密度")
    rank: int = Field(16, ge=1, description="固定するランク")
    repetitions: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    max_iters: int = Field(30, ge=1)
    solvers: list[SolverType] = Field(
        default_factory=lambda: [SolverType.SACD, SolverType.FSACD], min_length=1
    )
    workers: int | None = Field(
        None, ge=1, description="FSaCDのワーカー数.未設定なら設定から決める"
    )
    measure_speedup: bool = Field(
        False, description="FSaCDを1ワーカーでも実行して速度比を記録する"
    )

    @field_validator("grid")
    @classmethod
    def _positive_grid(cls, grid: list[float]) -> list[float]:
        if any(value <= 0 for value in grid):
            raise ValueError(f"grid values must be positive: {grid}")
        return grid

    @model_validator(mode="after")
    def _grid_fits_axis(self) -> "BenchPlan":
        if self.axis == BenchAxis.DENSITY:
            if any(value > 1 for value in self.grid):
                raise ValueError("density grid values must lie in (0, 1]")
        elif any(float(value) != int(value) for value in self.grid):
            raise ValueError(f"{self.axis.value} grid values must be integers")
        return self

    def point(self, value: float) -> tuple[int, float, int]:
        """軸の値から (モード長, 密度, ランク) を作る"""
        mode_length, density, rank = self.mode_length, self.density, self.rank
        match self.axis:
            case BenchAxis.MODE_LENGTH:
                mode_length = int(value)
            case BenchAxis.DENSITY:
                density = float(value)
            case BenchAxis.RANK:
                rank = int(value)
        return mode_length, density, rank


class BenchRow(BaseModel):
    """計測結果の1行"""

    axis_value: float
    solver: SolverType
    rep: int
    total_wall_ms: float
    per_iter_ms: float
    final_objective: float
    total_E: int
    speedup: float | None = Field(None, description="FSaCDの1ワーカーに対する速度比")
