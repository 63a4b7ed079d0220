""" ロギングのセットアップを行うためのモジュール"""

import logging
import sys


def setup_logging(level: str = "INFO") -> None:
    """ロギングのセットアップ

    標準出力はCSVやJSONの出力に使うため、ログは標準エラーへ流す

    :param level: ログレベルの名前(INFO, DEBUGなど)
    """
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    logger = logging.getLogger(__name__)
    logger.debug("Logging set up is done :)")
