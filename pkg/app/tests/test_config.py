import os

import pytest
from pydantic import ValidationError

from core.config import Settings
from domain.solver import default_workers
from schema.bench import BenchPlan
from schema.evaluation import SplitSpec, TopNQuery
from schema.request import GenRequest
from schema.solver import SolverConfig
from utils.enum import BenchAxis, ColumnCoupling, SeedPurpose
from utils.seeding import rng_for


def test_settings_read_prefixed_environment(monkeypatch):
    monkeypatch.setenv("SACD_WORKERS", "3")
    monkeypatch.setenv("SACD_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.workers == 3
    assert settings.log_level == "DEBUG"
    assert default_workers(settings) == 3


def test_default_workers_falls_back_to_cpu_count(monkeypatch):
    monkeypatch.delenv("SACD_WORKERS", raising=False)
    assert default_workers(Settings(workers=None)) == (os.cpu_count() or 1)


def test_invalid_settings(monkeypatch):
    monkeypatch.setenv("SACD_WORKERS", "0")
    with pytest.raises(ValidationError):
        Settings()


def test_solver_config_defaults_and_validation():
    config = SolverConfig(rank=4)
    assert (config.max_iters, config.seed, config.tolerance) == (30, 0, None)
    assert config.epsilon_h == 1e-12
    assert config.coupling == ColumnCoupling.SNAPSHOT
    for bad in ({"rank": 0}, {"rank": 2, "max_iters": 0}, {"rank": 2, "tolerance": 0}):
        with pytest.raises(ValidationError):
            SolverConfig(**bad)


def test_split_and_query_validation():
    assert SplitSpec().train_fraction == pytest.approx(0.8)
    with pytest.raises(ValidationError):
        SplitSpec(folds=1)
    with pytest.raises(ValidationError):
        TopNQuery(n=0)


def test_bench_plan_validation():
    plan = BenchPlan(axis=BenchAxis.RANK, grid=[8, 16], mode_length=32, density=0.01)
    assert plan.point(16) == (32, 0.01, 16)
    assert BenchPlan(axis="density", grid=[0.5]).point(0.5) == (64, 0.5, 16)
    for bad in (
        {"axis": "density", "grid": [1.5]},
        {"axis": "rank", "grid": [2.5]},
        {"axis": "mode-length", "grid": []},
        {"axis": "rank", "grid": [0]},
        {"axis": "rank", "grid": [4], "density": 0},
        {"axis": "rank", "grid": [4], "workers": 0},
    ):
        with pytest.raises(ValidationError):
            BenchPlan(**bad)


def test_gen_request_validation(tmp_path):
    with pytest.raises(ValidationError):
        GenRequest(dims=(2, 0, 2), density=0.5, out=tmp_path / "x.tns")
    with pytest.raises(ValidationError):
        GenRequest(dims=(2, 2, 2), density=2.0, out=tmp_path / "x.tns")


def test_seed_streams_are_independent_and_reproducible():
    a = rng_for(5, SeedPurpose.INIT).random(4)
    b = rng_for(5, SeedPurpose.INIT).random(4)
    c = rng_for(5, SeedPurpose.FOLDS).random(4)
    assert (a == b).all()
    assert not (a == c).all()
