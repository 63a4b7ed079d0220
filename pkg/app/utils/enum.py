"""Enumを管理するモジュール"""

from enum import Enum, IntEnum


class Mode(IntEnum):
    """テンソルのモード(U, V, W)を指定"""

    U = 0
    V = 1
    W = 2


class SolverType(str, Enum):
    """因子分解に利用するソルバーのタイプを指定"""

    SACD = "sacd"
    FSACD = "fsacd"
    PLAIN_CD = "plain-cd"
    HALS = "hals"


class ColumnCoupling(str, Enum):
    """FSaCDで列間のGram項をどう扱うかを指定"""

    # パス開始時のスナップショットから全列の勾配を作る(ヤコビ型)
    SNAPSHOT = "snapshot"
    # 列ごとのsttvpだけを並列に計算し、Gram項と更新は列順に適用する
    SEQUENTIAL = "sequential"


class BenchAxis(str, Enum):
    """スケーラビリティ計測で掃引する軸を指定"""

    MODE_LENGTH = "mode-length"
    DENSITY = "density"
    RANK = "rank"


class SeedPurpose(IntEnum):
    """1つのシードから派生させる乱数ストリームの用途"""

    INIT = 0
    SAMPLING = 1
    FOLDS = 2
    PLANTED = 3
    VALUES = 4
