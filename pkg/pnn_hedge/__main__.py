import argparse
import logging
import sys
from typing import List, Optional

from .config.structures import EvaluateFlags, StatusType
from .pnn_hedge import BAD_CONFIG_ERRORS, Experiment, load_experiment
from .storage.response_creator import (
    JSONResponseFormatter,
    ResponseTemplate,
    make_response,
)

log = logging.getLogger(__name__)

EVALUATE_FLAGS = (
    ("--stats", "stats", "pnl_stats.csv и pnl_per_task.csv"),
    ("--variance", "variance", "variance_aggregate.csv"),
    ("--histograms", "histograms", "histograms.csv"),
    ("--delta-slices", "delta_slices", "delta_slices.csv"),
    ("--embeddings", "embeddings", "embeddings.csv"),
    ("--implied-vols", "implied_vols", "implied_vols.csv"),
    ("--baseline", "baseline", "строки BS в variance_aggregate.csv"),
)


def build_parser() -> argparse.ArgumentParser:

    """Парсер командной строки с командами эксперимента."""

    parser = argparse.ArgumentParser(
        prog="pnn_hedge",
        description="Глубокое хеджирование семейства моделей одной сетью.",
    )
    parser.add_argument("--config", default=None, help="путь к JSON конфигурации")
    parser.add_argument("--out", default=None, help="выходная директория")
    parser.add_argument("--seed", type=int, default=None, help="глобальное зерно")
    parser.add_argument("--threads", type=int, default=1, help="потоки моделирования")
    parser.add_argument("--verbose", action="store_true", help="журнал уровня DEBUG")

    commands = parser.add_subparsers(dest="command", required=True)
    simulate = commands.add_parser("simulate", help="моделирование наборов траекторий")
    simulate.add_argument(
        "--export-csv",
        dest="export_csv",
        action="store_true",
        help="выгрузить цены задач в datasets/task_NNNN.csv",
    )
    train = commands.add_parser("train", help="обучение сети")
    train.add_argument("--resume", action="store_true", help="продолжить с чекпоинта")
    commands.add_parser("recalibrate", help="перекалибровка на новой задаче")
    evaluate = commands.add_parser("evaluate", help="файлы оценки")
    for flag, dest, help_text in EVALUATE_FLAGS:
        evaluate.add_argument(flag, dest=dest, action="store_true", help=help_text)
    evaluate.add_argument("--all", dest="all", action="store_true", help="все файлы")
    commands.add_parser("report", help="полный прогон эксперимента")
    return parser


def evaluate_flags(args: argparse.Namespace) -> EvaluateFlags:
    if args.all:
        return EvaluateFlags.everything()
    return EvaluateFlags(*(getattr(args, dest) for _, dest, _ in EVALUATE_FLAGS))


def run(args: argparse.Namespace) -> int:

    """Выполнение команды, печать JSON ответа.

    Returns:
        int: код выхода.
    """

    try:
        if args.threads < 1:
            raise ValueError(f"Число потоков должно быть >= 1: {args.threads}")
        config = load_experiment(args.config, output_dir=args.out, seed=args.seed)
    except (*BAD_CONFIG_ERRORS, TypeError) as exc:
        log.error(f"Не удалось загрузить конфигурацию: {exc}")
        response = ResponseTemplate(StatusType._BAD_CONFIG, (), str(exc))
        print(make_response(response, JSONResponseFormatter))
        return StatusType._BAD_CONFIG.code

    experiment = Experiment(config, threads=args.threads)
    if args.command == "simulate":
        print(experiment.simulate(export_csv=args.export_csv))
    elif args.command == "train":
        print(experiment.train(resume=args.resume))
    elif args.command == "recalibrate":
        print(experiment.recalibrate())
    elif args.command == "evaluate":
        print(experiment.evaluate(evaluate_flags(args)))
    else:
        print(experiment.report())
    return experiment.last_status.code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
