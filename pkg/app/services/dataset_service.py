"""テンソルの読み込みと合成テンソルの生成を行うサービスクラスを含むモジュール"""

import logging
from pathlib import Path

from domain.synthetic import generate_synthetic
from domain.tensor import SparseTensor3
from schema.request import GenRequest
from utils.tns import parse_tns, write_tns

logger = logging.getLogger(__name__)


class DatasetService:
    """入力テンソルを扱うサービスクラス"""

    def load(self, path: Path) -> SparseTensor3:
        """.tnsファイルを読み込む

        :raises TnsParseError: 形式が不正なとき
        :raises StorageError: 読めないとき
        """
        return parse_tns(path)

    def generate(self, request: GenRequest) -> SparseTensor3:
        """合成テンソルを生成してファイルに書き出す

        :param request: genコマンドのリクエスト
        :return 生成したテンソル
        """
        logger.info("generate start request:%s", request.model_dump_json())
        x = generate_synthetic(
            request.dims, request.density, request.seed, request.planted_rank
        )
        write_tns(x, request.out)
        return x
