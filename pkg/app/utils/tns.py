"""1始まりのテキスト形式(.tns)で疎テンソルを読み書きする

1行に "i j k v" を空白区切りで書く.'#' で始まる行はコメント、
"% Q P S" の行は次元のヘッダー(任意)
"""

import logging
import math
from pathlib import Path

import numpy as np

from core.exceptions import StorageError, TnsParseError
from domain.tensor import SparseTensor3

logger = logging.getLogger(__name__)


def _parse_header(tokens: list[str], line_no: int) -> tuple[int, int, int]:
    if len(tokens) != 3:
        raise TnsParseError(line_no, f"header needs 3 dims, got {len(tokens)}")
    try:
        dims = tuple(int(token) for token in tokens)
    except ValueError:
        raise TnsParseError(line_no, f"non-integer dims in header: {tokens}")
    if any(d < 1 for d in dims):
        raise TnsParseError(line_no, f"dims must be positive: {dims}")
    return dims


def parse_tns(path: str | Path) -> SparseTensor3:
    """.tnsファイルを読み込み、0始まりの疎テンソルにする

    ヘッダーがなければ各モードの最大インデックスを次元とする

    :param path: ファイルのパス
    :return 疎テンソル
    :raises TnsParseError: 行の形式が不正、インデックスが1未満か範囲外、座標が重複しているとき
    :raises StorageError: ファイルを読めないとき
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise StorageError(str(path), f"cannot read tensor file: {e}") from e

    dims: tuple[int, int, int] | None = None
    seen: dict[tuple[int, int, int], int] = {}
    coords: list[tuple[int, int, int]] = []
    values: list[float] = []
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text.startswith("%"):
            if dims is not None or coords:
                raise TnsParseError(line_no, "header must come before entries")
            dims = _parse_header(text[1:].split(), line_no)
            continue

        tokens = text.split()
        if len(tokens) != 4:
            raise TnsParseError(line_no, f"expected 4 columns, got {len(tokens)}")
        try:
            index = tuple(int(token) for token in tokens[:3])
            value = float(tokens[3])
        except ValueError:
            raise TnsParseError(line_no, f"non-numeric field in {text!r}")
        if any(i < 1 for i in index):
            raise TnsParseError(line_no, f"indices are 1-based: {index}")
        if dims is not None and any(i > d for i, d in zip(index, dims)):
            raise TnsParseError(line_no, f"index {index} exceeds dims {dims}")
        if not math.isfinite(value):
            raise TnsParseError(line_no, f"value must be finite: {tokens[3]}")
        if index in seen:
            raise TnsParseError(
                line_no, f"duplicate coordinate {index} (first on line {seen[index]})"
            )
        seen[index] = line_no
        coords.append(index)
        values.append(value)

    if dims is None:
        if not coords:
            raise TnsParseError(len(lines), "empty file without a dims header")
        dims = tuple(int(d) for d in np.max(np.array(coords), axis=0))
    x = SparseTensor3(
        dims,
        np.array(coords, dtype=np.int64).reshape(-1, 3) - 1,
        np.array(values, dtype=np.float64),
    )
    logger.info("parsed %s dims=%s nnz=%d", path, x.dims, x.nnz)
    return x


def write_tns(x: SparseTensor3, path: str | Path) -> None:
    """疎テンソルを1始まりの.tns形式で書き出す.値は17桁で丸めずに書く

    :raises StorageError: 書き込めないとき
    """
    path = Path(path)
    lines = ["% {} {} {}".format(*x.dims)]
    lines.extend(
        f"{q + 1} {p + 1} {s + 1} {v:.17g}" for q, p, s, v in x.entries()
    )
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(str(path), f"cannot write tensor file: {e}") from e
    logger.info("wrote %s nnz=%d", path, x.nnz)
