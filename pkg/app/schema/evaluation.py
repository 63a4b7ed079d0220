"""評価プロトコルの設定のDTO"""

from pydantic import BaseModel, Field, computed_field


class SplitSpec(BaseModel):
    """k分割交差検証の設定.5分割なら学習データは80%"""

    folds: int = Field(5, ge=2, description="フォールド数")
    seed: int = Field(0, ge=0, description="分割に使う乱数シード")

    @computed_field
    @property
    def train_fraction(self) -> float:
        return 1.0 - 1.0 / self.folds


class TopNQuery(BaseModel):
    """上位N件推薦の設定

    ユーザー(モード0)ごとにアイテム(モード1)を順位付けし、
    文脈(モード2)は最大スコアで周辺化する
    """

    n: int = Field(10, ge=1, description="推薦件数N")
    threshold: float | None = Field(
        None, description="テスト値がこれを超えると適合.未指定なら全件適合"
    )
