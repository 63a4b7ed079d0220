import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.exceptions import ArgumentError
from domain.synthetic import generate_synthetic, planted_model, synthetic_nnz
from domain.tensor import predict_entries


def test_nnz_on_a_benchmark_grid_point():
    assert synthetic_nnz((64, 64, 64), 1e-3) == 262
    x = generate_synthetic((64, 64, 64), 1e-3, seed=0)
    assert x.nnz == 262


def test_entries_are_distinct_with_values_in_unit_interval():
    x = generate_synthetic((20, 15, 10), 0.05, seed=4)
    assert x.nnz == 150
    assert len({tuple(c) for c in x.coords.tolist()}) == x.nnz
    assert np.all((x.values > 0) & (x.values <= 1))


def test_dense_sampling_fills_every_cell():
    x = generate_synthetic((3, 4, 5), 1.0, seed=2)
    assert x.nnz == 60
    assert np.all(x.to_dense() > 0)


def test_zero_entries():
    x = generate_synthetic((4, 4, 4), 1e-3, seed=0)
    assert x.nnz == 0
    assert x.dims == (4, 4, 4)


def test_same_seed_same_tensor():
    first = generate_synthetic((10, 10, 10), 0.02, seed=9)
    second = generate_synthetic((10, 10, 10), 0.02, seed=9)
    other = generate_synthetic((10, 10, 10), 0.02, seed=10)
    assert_array_equal(first.coords, second.coords)
    assert_array_equal(first.values, second.values)
    assert not np.array_equal(first.coords, other.coords)


@pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
def test_density_out_of_range(density):
    with pytest.raises(ArgumentError):
        generate_synthetic((4, 4, 4), density, seed=0)


def test_planted_values_come_from_the_planted_model():
    x = generate_synthetic((6, 5, 4), 0.5, seed=3, planted_rank=2)
    model = planted_model((6, 5, 4), 2, seed=3)
    assert_allclose(x.values, predict_entries(model, x.coords), rtol=1e-12)
    assert model.rank == 2
    with pytest.raises(ArgumentError):
        planted_model((6, 5, 4), 0, seed=3)
