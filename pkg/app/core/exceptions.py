"""ツールキット全体で使う例外クラスをまとめたモジュール

- TensorToolkitError: すべての例外の基底クラス
- ArgumentError: 引数・形状・ランク・インデックスの誤り
- CapacityError: 密オラクルの上限を超えたときのエラー
- StaleCacheError: 古いGram行列を参照したときの状態エラー
- TnsParseError: .tnsファイルの解析エラー(行番号付き)
- SolverError: ソルバーのパスが中断したときのエラー
- StorageError: ファイル入出力のエラー(パス付き)
"""


class TensorToolkitError(Exception):
    """ツールキットの例外の基底クラス"""


class ArgumentError(TensorToolkitError, ValueError):
    """引数の誤り.CLIでは終了コード2に対応する"""


class CapacityError(TensorToolkitError):
    """密なテンソルとして展開できる上限を超えた"""


class StaleCacheError(TensorToolkitError):
    """無効化されたGram行列を参照しようとした"""


class TnsParseError(ArgumentError):
    """.tnsファイルの解析エラー

    :param line_no: エラーが発生した行番号(1始まり)
    :param reason: エラー内容
    """

    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class SolverError(TensorToolkitError):
    """ソルバーのパスが中断した"""


class StorageError(TensorToolkitError):
    """ファイルの読み書きに失敗した

    :param path: 対象のパス
    :param reason: エラー内容
    """

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
