"""列タスクを並列実行するワーカープールを管理・操作するためのコアモジュール
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from core.exceptions import ArgumentError, SolverError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def partition_columns(rank: int, workers: int) -> list[np.ndarray]:
    """列番号 0..rank-1 をワーカー数で静的に連続ブロックへ分割する

    各列はすべての非ゼロ要素を1回ずつ走査するためコストはほぼ均一

    :param rank: 列数R
    :param workers: ワーカー数
    :return 空でない列番号配列のリスト
    :raises ArgumentError: rankかworkersが1未満のとき
    """
    if rank < 1 or workers < 1:
        raise ArgumentError(f"rank and workers must be >= 1: {rank}, {workers}")
    blocks = np.array_split(np.arange(rank), min(workers, rank))
    return [block for block in blocks if block.size > 0]


class ColumnWorkerPool:
    """列タスクを並列実行するためのクラス

    パスごとに列の所有者を記録し、2つのタスクが同じ列を書き込まないことを保証する
    workers == 1 のときはスレッドを使わずに呼び出し元で実行する

    - run_blocks: 列ブロックごとに関数を実行し、ブロック順に結果を返す
    - close: スレッドプールを破棄する
    """

    def __init__(self, workers: int) -> None:
        """ワーカープールの初期化

        :param workers: ワーカー数
        :raises ArgumentError: workersが1未満のとき
        """
        if workers < 1:
            raise ArgumentError(f"workers must be >= 1: {workers}")
        self.workers = workers
        self._executor: ThreadPoolExecutor | None = (
            ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        )
        self._owners: dict[int, int] = {}

    def __enter__(self) -> "ColumnWorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        """スレッドプールを破棄する"""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _claim(self, blocks: list[np.ndarray]) -> None:
        """列の所有権を登録する.重複していればエラー

        :param blocks: タスクごとの列番号配列
        :raises SolverError: 同じ列が2つのタスクに割り当てられたとき
        """
        self._owners.clear()
        for task_id, block in enumerate(blocks):
            for r in block.tolist():
                if r in self._owners:
                    raise SolverError(
                        f"column {r} claimed by tasks {self._owners[r]} and {task_id}"
                    )
                self._owners[r] = task_id

    def run_blocks(
        self, fn: Callable[[np.ndarray], T], blocks: list[np.ndarray]
    ) -> list[T]:
        """列ブロックごとにfnを実行する.すべて終わるまで待つ(パス終端のバリア)

        :param fn: 列番号配列を受け取るタスク関数
        :param blocks: partition_columnsで作った列ブロック
        :return ブロック順の結果
        :raises SolverError: タスクが失敗したとき.失敗した列を文脈に含める
        """
        if __debug__:
            self._claim(blocks)
        if self._executor is None:
            return [self._run_one(fn, block) for block in blocks]
        futures = [self._executor.submit(self._run_one, fn, block) for block in blocks]
        return [future.result() for future in futures]

    @staticmethod
    def _run_one(fn: Callable[[np.ndarray], T], block: np.ndarray) -> T:
        try:
            return fn(block)
        except SolverError:
            raise
        except Exception as e:
            logger.error("Column task failed columns=%s error:%s", block.tolist(), e)
            raise SolverError(
                f"column task for columns {block.tolist()} failed: {e}"
            ) from e
