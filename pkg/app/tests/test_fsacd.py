import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.exceptions import SolverError
from core.workers import ColumnWorkerPool
from domain.fsacd import FSaCDSolver, fit_fsacd, fsacd_mode_pass
from domain.kernels import GramCache
from domain.sacd import ImportanceState, fit_sacd, sacd_mode_pass
from schema.solver import SolverConfig
from utils.enum import ColumnCoupling
from helpers import make_random_model, make_random_tensor


def test_rank_one_pass_equals_sacd_pass(rng):
    x = make_random_tensor(rng, (7, 6, 5), 0.3)
    model = make_random_model(rng, x.dims, 1)
    serial, parallel = model.copy(), model.copy()
    serial_cache = GramCache.from_model(serial)
    parallel_cache = GramCache.from_model(parallel)
    serial_states = [ImportanceState.zeros(d, 1) for d in x.dims]
    parallel_states = [ImportanceState.zeros(d, 1) for d in x.dims]
    with ColumnWorkerPool(1) as pool:
        for k in (1, 2, 3):
            for mode in range(3):
                a = sacd_mode_pass(x, serial, mode, serial_states[mode], k, serial_cache)
                b = fsacd_mode_pass(
                    x, parallel, mode, parallel_states[mode], k, parallel_cache, pool
                )
                assert a.updates == b.updates
                assert_array_equal(serial.factor(mode).data, parallel.factor(mode).data)
                assert_array_equal(serial_states[mode].z, parallel_states[mode].z)


def test_rank_one_fit_equals_sacd(rng):
    x = make_random_tensor(rng, (6, 6, 6), 0.2)
    config = SolverConfig(rank=1, max_iters=5, seed=3)
    serial = fit_sacd(x, config)
    parallel = fit_fsacd(x, config, workers=2)
    for a, b in zip(serial.model.factors, parallel.model.factors):
        assert_array_equal(a.data, b.data)


def test_single_entry_instance(toy_tensor, toy_model):
    cache = GramCache.from_model(toy_model)
    with ColumnWorkerPool(2) as pool:
        result = fsacd_mode_pass(
            toy_tensor, toy_model, 0, ImportanceState.zeros(1, 1), 1, cache, pool
        )
    assert toy_model.u.data[0, 0] == pytest.approx(6.0)
    assert result.updates == 1


@pytest.mark.parametrize("coupling", list(ColumnCoupling))
def test_worker_count_invariance(rng, coupling):
    x = make_random_tensor(rng, (9, 8, 7), 0.15)
    config = SolverConfig(rank=6, max_iters=6, seed=5, coupling=coupling)
    reference = fit_fsacd(x, config, workers=1)
    for workers in (2, 4):
        report = fit_fsacd(x, config, workers=workers)
        assert report.workers == workers
        for a, b in zip(reference.model.factors, report.model.factors):
            assert_allclose(a.data, b.data, rtol=0, atol=1e-12)


def test_sequential_coupling_tracks_sacd(rng):
    x = make_random_tensor(rng, (8, 7, 6), 0.2)
    config = SolverConfig(rank=4, max_iters=3, seed=9, coupling=ColumnCoupling.SEQUENTIAL)
    serial = fit_sacd(x, config)
    parallel = fit_fsacd(x, config, workers=3)
    for a, b in zip(serial.model.factors, parallel.model.factors):
        assert_allclose(a.data, b.data, rtol=0, atol=1e-8)


def test_fsacd_keeps_invariants(rng):
    x = make_random_tensor(rng, (8, 7, 6), 0.15)
    rank = 5
    report = fit_fsacd(x, SolverConfig(rank=rank, max_iters=8), workers=3)
    bounds = tuple(d * rank for d in x.dims)
    for record in report.iterations:
        assert all(0 <= e <= b for e, b in zip(record.updates, bounds))
    for factor in report.model.factors:
        assert np.all(factor.data >= 0)


def test_fit_is_deterministic_for_fixed_workers(rng):
    x = make_random_tensor(rng, (6, 6, 6), 0.2)
    config = SolverConfig(rank=4, max_iters=4, seed=1)
    first = FSaCDSolver(config, 3).fit(x)
    second = FSaCDSolver(config, 3).fit(x)
    for a, b in zip(first.model.factors, second.model.factors):
        assert_array_equal(a.data, b.data)


def test_measure_speedup_records_ratios(rng):
    x = make_random_tensor(rng, (6, 6, 6), 0.2)
    report = fit_fsacd(x, SolverConfig(rank=4, max_iters=3), workers=2, measure_speedup=True)
    assert report.speedup is not None and report.speedup > 0
    assert all(r.speedup is not None and r.speedup > 0 for r in report.iterations)
    plain = fit_fsacd(x, SolverConfig(rank=4, max_iters=3), workers=2)
    assert plain.speedup is None


def test_failed_column_task_aborts_pass(rng):
    x = make_random_tensor(rng, (5, 5, 5), 0.3)
    model = make_random_model(rng, x.dims, 3)
    cache = GramCache.from_model(model)
    # 行数が合わない重要度の状態では列タスクが失敗する
    state = ImportanceState.zeros(4, 3)
    with ColumnWorkerPool(2) as pool:
        with pytest.raises(SolverError, match="column"):
            fsacd_mode_pass(x, model, 0, state, 1, cache, pool)
