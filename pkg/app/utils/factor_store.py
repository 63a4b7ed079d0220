"""因子行列・メタ情報・反復ごとの記録をファイルに保存する

- 因子行列: U.csv, V.csv, W.csv(カンマ区切り、ヘッダーなし、17桁)
- メタ情報: meta.json(FactorMeta)
- 反復ごとの記録: iter, objective, E_u, E_v, E_w, L_u, L_v, L_w, wall_ms のCSV
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
from pydantic import BaseModel, ValidationError

from core.exceptions import ArgumentError, StorageError
from domain.tensor import FactorMatrix, KruskalModel
from schema.report import FactorMeta, FitReport

logger = logging.getLogger(__name__)

FACTOR_FILES = ("U.csv", "V.csv", "W.csv")
META_FILE = "meta.json"
TRACE_COLUMNS = ("iter", "objective", "E_u", "E_v", "E_w", "L_u", "L_v", "L_w", "wall_ms")


def write_factors(model: KruskalModel, directory: str | Path, meta: FactorMeta) -> None:
    """因子行列とメタ情報をディレクトリに書き出す

    :param model: 保存するモデル
    :param directory: 出力ディレクトリ.なければ作る
    :param meta: 一緒に保存するメタ情報
    :raises StorageError: 書き込めないとき.ディレクトリのパスを含める
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name, factor in zip(FACTOR_FILES, model.factors):
            np.savetxt(directory / name, factor.data, fmt="%.17g", delimiter=",")
        (directory / META_FILE).write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise StorageError(str(directory), f"cannot write factors: {e}") from e
    logger.info("wrote factors dims=%s rank=%d to %s", model.dims, model.rank, directory)


def read_factors(directory: str | Path) -> tuple[KruskalModel, FactorMeta]:
    """write_factorsで保存したモデルとメタ情報を読み込む

    :raises StorageError: 読めない、または内容が壊れているとき
    """
    directory = Path(directory)
    try:
        factors = [
            FactorMatrix(np.loadtxt(directory / name, delimiter=",", ndmin=2))
            for name in FACTOR_FILES
        ]
        meta = FactorMeta.model_validate_json(
            (directory / META_FILE).read_text(encoding="utf-8")
        )
        return KruskalModel(*factors), meta
    except OSError as e:
        raise StorageError(str(directory), f"cannot read factors: {e}") from e
    except (ValueError, ArgumentError, ValidationError) as e:
        raise StorageError(str(directory), f"corrupt factor files: {e}") from e


def trace_rows(report: FitReport) -> list[list[float | int]]:
    """反復ごとの記録をCSVの行にする"""
    return [
        [
            record.iteration,
            record.objective,
            *record.updates,
            *record.lipschitz,
            record.wall_ms,
        ]
        for record in report.iterations
    ]


def write_csv(
    stream: TextIO, columns: Iterable[str], rows: Iterable[Iterable[object]]
) -> None:
    """ヘッダー付きCSVをストリームに書き出す"""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)


def write_models_csv(stream: TextIO, models: Iterable[BaseModel]) -> None:
    """DTOの一覧をフィールド名をヘッダーにしてCSVで書き出す"""
    models = list(models)
    if not models:
        return
    rows = [model.model_dump(mode="json") for model in models]
    write_csv(stream, rows[0].keys(), (row.values() for row in rows))


def write_trace(report: FitReport, path: str | Path) -> None:
    """反復ごとの記録をCSVファイルに書き出す

    :raises StorageError: 書き込めないとき
    """
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as stream:
            write_csv(stream, TRACE_COLUMNS, trace_rows(report))
    except OSError as e:
        raise StorageError(str(path), f"cannot write trace: {e}") from e
    logger.info("wrote trace with %d rows to %s", len(report.iterations), path)
