"""スケーラビリティ計測のユースケースを記載したサービスクラスを含むモジュール"""

import logging

from domain.fsacd import FSaCDSolver, fit_fsacd
from domain.solver import SolverFactory
from domain.synthetic import generate_synthetic
from schema.bench import BenchPlan, BenchRow
from schema.solver import SolverConfig

logger = logging.getLogger(__name__)


class BenchService:
    """1つの軸を掃引して、各ソルバーの実行時間を計測するサービスクラス"""

    def __init__(self, solver_factory: SolverFactory) -> None:
        """計測のサービスクラスの初期化

        :param solver_factory: ソルバーを生成するファクトリー
        """
        self.solver_factory = solver_factory

    def run(self, plan: BenchPlan) -> list[BenchRow]:
        """計測計画を実行する

        格子点と繰り返しごとに同じシードのテンソルを作り、すべてのソルバーに同じ入力を渡す.
        繰り返しは順番に実行する.plan.measure_speedupならFSaCDの行に速度比を付ける

        :param plan: 計測計画
        :return 格子点 x 繰り返し x ソルバーの行
        """
        logger.info("bench start plan:%s", plan.model_dump_json())
        rows: list[BenchRow] = []
        for value in plan.grid:
            mode_length, density, rank = plan.point(value)
            for rep in range(plan.repetitions):
                seed = plan.seed + rep
                x = generate_synthetic((mode_length,) * 3, density, seed)
                config = SolverConfig(rank=rank, max_iters=plan.max_iters, seed=seed)
                for solver_type in plan.solvers:
                    solver = self.solver_factory.create_solver(
                        solver_type, config, plan.workers
                    )
                    if plan.measure_speedup and isinstance(solver, FSaCDSolver):
                        report = fit_fsacd(x, config, solver.workers, measure_speedup=True)
                    else:
                        report = solver.fit(x)
                    iterations = max(len(report.iterations), 1)
                    row = BenchRow(
                        axis_value=value,
                        solver=solver_type,
                        rep=rep,
                        total_wall_ms=report.wall_ms,
                        per_iter_ms=report.wall_ms / iterations,
                        final_objective=report.final_objective,
                        total_E=report.total_updates,
                        speedup=report.speedup,
                    )
                    logger.info("bench row:%s", row.model_dump_json())
                    rows.append(row)
        return rows
