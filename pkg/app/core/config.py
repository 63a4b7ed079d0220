""" 設定ファイルを読み込むためのモジュール.ここで設定周りは共通化しておく """

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """設定ファイルをまとめるためのクラス

    環境変数は SACD_ プレフィックス付きで読み込む(例: SACD_WORKERS=4)
    """

    app_name: str = "SaCD Tensor Toolkit"
    workers: int | None = Field(
        None, ge=1, description="FSaCDの既定ワーカー数.未設定ならCPU数"
    )
    log_level: str = "INFO"
    epsilon_h: float = Field(1e-12, gt=0, description="h_rrの除算ガード")
    max_iters: int = Field(30, ge=1, description="CLIで使う既定の反復回数")

    class Config:
        """pydanticでの予約クラス.特定のファイルから環境変数を読み込める"""

        env_file = ".env"
        env_prefix = "SACD_"
