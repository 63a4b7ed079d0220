"""テスト用のテンソルとモデルを作るヘルパー"""

import numpy as np

from domain.tensor import FactorMatrix, KruskalModel, SparseTensor3, predict_entries


def make_random_tensor(
    rng: np.random.Generator, dims: tuple[int, int, int], density: float
) -> SparseTensor3:
    """密度densityで値が (0, 1] のランダムな疎テンソル(最低1要素)"""
    cells = dims[0] * dims[1] * dims[2]
    nnz = max(1, int(round(density * cells)))
    linear = rng.choice(cells, size=nnz, replace=False)
    coords = np.stack(np.unravel_index(linear, dims), axis=1)
    return SparseTensor3(dims, coords, 1.0 - rng.random(nnz))


def make_random_model(
    rng: np.random.Generator, dims: tuple[int, int, int], rank: int
) -> KruskalModel:
    return KruskalModel(*(FactorMatrix(rng.random((d, rank))) for d in dims))


def make_exact_fit(
    rng: np.random.Generator, dims: tuple[int, int, int], rank: int
) -> tuple[SparseTensor3, KruskalModel]:
    """整数の因子から作った全セル観測のテンソルと、それを正確に再現するモデル

    値がすべて小さな整数なので、勾配は浮動小数点でもちょうど0になる
    """
    model = KruskalModel(
        *(FactorMatrix(rng.integers(1, 4, size=(d, rank)).astype(float)) for d in dims)
    )
    coords = np.stack(
        np.unravel_index(np.arange(dims[0] * dims[1] * dims[2]), dims), axis=1
    )
    return SparseTensor3(dims, coords, predict_entries(model, coords)), model


