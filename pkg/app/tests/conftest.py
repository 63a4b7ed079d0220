"""テストで共通のフィクスチャ"""

import numpy as np
import pytest

from domain.tensor import KruskalModel, SparseTensor3
from helpers import make_random_tensor


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240501)


@pytest.fixture
def small_tensor(rng: np.random.Generator) -> SparseTensor3:
    return make_random_tensor(rng, (6, 5, 4), 0.3)


@pytest.fixture
def toy_tensor() -> SparseTensor3:
    """1x1x1 で値6だけを持つテンソル"""
    return SparseTensor3.from_entries((1, 1, 1), [(0, 0, 0, 6.0)])


@pytest.fixture
def toy_model() -> KruskalModel:
    return KruskalModel.from_arrays([[0.0]], [[1.0]], [[1.0]])
