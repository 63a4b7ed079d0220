"""コマンドラインのエントリーポイント

- factorize: .tnsを因子分解して、因子行列・メタ情報・反復ごとの記録を書き出す
- gen: 合成テンソルを.tnsに書き出す
- eval: k分割交差検証の結果をJSONで標準出力に書く
- bench: スケーラビリティ計測の結果をCSVで標準出力に書く

終了コードは成功で0、引数の誤りで2、実行時のエラーで1.エラーは標準エラーに出す
"""

import argparse
import logging
import sys
from typing import Sequence, TextIO

from pydantic import ValidationError

from api.dependencies import (
    get_bench_service,
    get_dataset_service,
    get_eval_service,
    get_factorize_service,
    get_settings,
)
from core.config import Settings
from core.exceptions import ArgumentError, TensorToolkitError
from core.logging import setup_logging
from schema.bench import BenchPlan
from schema.request import EvalRequest, FactorizeRequest, GenRequest
from utils.enum import BenchAxis, ColumnCoupling, SolverType
from utils.factor_store import write_models_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_SOLVERS = [solver.value for solver in SolverType]


def _add_fit_options(parser: argparse.ArgumentParser, settings: Settings) -> None:
    parser.add_argument("--input", required=True, help="入力の.tnsファイル")
    parser.add_argument("--rank", type=int, required=True)
    parser.add_argument("--iters", type=int, default=settings.max_iters)
    parser.add_argument("--solver", choices=_SOLVERS, default=SolverType.SACD.value)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--tolerance", type=float, default=None)
    parser.add_argument(
        "--coupling",
        choices=[c.value for c in ColumnCoupling],
        default=ColumnCoupling.SNAPSHOT.value,
    )


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    """サブコマンド付きのパーサーを作る"""
    parser = argparse.ArgumentParser(prog="sacd", description=settings.app_name)
    commands = parser.add_subparsers(dest="command", required=True)

    factorize = commands.add_parser("factorize", help="テンソルを因子分解する")
    _add_fit_options(factorize, settings)
    factorize.add_argument("--out", required=True, help="因子行列の出力ディレクトリ")
    factorize.add_argument("--trace", default=None, help="反復ごとの記録のCSV")

    gen = commands.add_parser("gen", help="合成テンソルを生成する")
    gen.add_argument("--dims", type=int, nargs=3, required=True, metavar=("Q", "P", "S"))
    gen.add_argument("--density", type=float, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--planted-rank", type=int, default=None)
    gen.add_argument("--out", required=True)

    evaluate = commands.add_parser("eval", help="k分割交差検証で評価する")
    _add_fit_options(evaluate, settings)
    evaluate.add_argument("--folds", type=int, default=5)
    evaluate.add_argument("--topn", type=int, default=10)
    evaluate.add_argument("--threshold", type=float, default=None)

    bench = commands.add_parser("bench", help="スケーラビリティを計測する")
    bench.add_argument("--axis", choices=[a.value for a in BenchAxis], required=True)
    bench.add_argument("--grid", type=float, nargs="+", required=True)
    bench.add_argument("--mode-length", type=int, default=64)
    bench.add_argument("--density", type=float, default=1e-3)
    bench.add_argument("--rank", type=int, default=16)
    bench.add_argument("--reps", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--iters", type=int, default=settings.max_iters)
    bench.add_argument(
        "--solvers",
        nargs="+",
        choices=_SOLVERS,
        default=[SolverType.SACD.value, SolverType.FSACD.value],
    )
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument(
        "--speedup",
        action="store_true",
        help="FSaCDを1ワーカーでも実行して速度比を出力する",
    )
    return parser


def _fit_fields(args: argparse.Namespace) -> dict:
    return {
        "input": args.input,
        "rank": args.rank,
        "iters": args.iters,
        "solver": args.solver,
        "seed": args.seed,
        "workers": args.workers,
        "tolerance": args.tolerance,
        "coupling": args.coupling,
    }


def _run(args: argparse.Namespace, stdout: TextIO) -> None:
    """サブコマンドを実行する.リクエストの検証エラーはそのまま送出する"""
    match args.command:
        case "factorize":
            request = FactorizeRequest(
                **_fit_fields(args), out=args.out, trace=args.trace
            )
            report = get_factorize_service().run(request)
            stdout.write(report.model_dump_json(indent=2) + "\n")
        case "gen":
            request = GenRequest(
                dims=tuple(args.dims),
                density=args.density,
                seed=args.seed,
                planted_rank=args.planted_rank,
                out=args.out,
            )
            get_dataset_service().generate(request)
        case "eval":
            request = EvalRequest(
                **_fit_fields(args),
                folds=args.folds,
                topn=args.topn,
                threshold=args.threshold,
            )
            x = get_dataset_service().load(request.input)
            report = get_eval_service().evaluate(x, request)
            stdout.write(report.model_dump_json(indent=2) + "\n")
        case "bench":
            plan = BenchPlan(
                axis=args.axis,
                grid=args.grid,
                mode_length=args.mode_length,
                density=args.density,
                rank=args.rank,
                repetitions=args.reps,
                seed=args.seed,
                max_iters=args.iters,
                solvers=args.solvers,
                workers=args.workers,
                measure_speedup=args.speedup,
            )
            rows = get_bench_service().run(plan)
            write_models_csv(stdout, rows)
        case _:
            raise NotImplementedError(f"command {args.command} is not implemented")


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    """CLIを実行して終了コードを返す

    :param argv: 引数.省略時はsys.argv[1:]
    :param stdout: 結果の出力先.省略時はsys.stdout
    :return 終了コード
    """
    stdout = stdout or sys.stdout
    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"error: invalid settings: {e}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(settings.log_level)

    try:
        args = build_parser(settings).parse_args(argv)
    except SystemExit as e:
        # --helpは0、引数の誤りは2
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        _run(args, stdout)
    except (ValidationError, ArgumentError) as e:
        logger.error("Error invalid arguments:%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TensorToolkitError, OSError) as e:
        logger.error("Error running %s:%s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
