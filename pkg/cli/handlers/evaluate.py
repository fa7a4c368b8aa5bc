"""
Підкоманда evaluate
"""

import argparse

from services.experiment_service import run_evaluate
from utils.logger import setup_logger

from .common import add_experiment_arguments, load_experiment, registry_from

logger = setup_logger()


async def evaluate(args: argparse.Namespace) -> int:
    """Звіт ціноутворення та посмішка замороженої політики"""

    experiment = load_experiment(args)
    summary = await run_evaluate(
        args.checkpoint,
        experiment,
        args.deterministic,
        registry_from(args),
        dump_paths=args.dump_paths,
        history_of=args.history,
    )
    logger.info(f"✅ Артефакти оцінки у {summary.run_dir}: {', '.join(sorted(summary.artifacts))}")
    return 0


def register(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("evaluate", help="оцінка чекпоінта без навчання")
    add_experiment_arguments(parser)
    parser.add_argument("--checkpoint", required=True, help="файл .npz")
    parser.add_argument("--deterministic", action="store_true", help="дія = середнє політики, без дослідження")
    parser.add_argument("--dump-paths", action="store_true", help="записати paths.bin зі спотами та волатильностями")
    parser.add_argument("--history", type=int, metavar="EXPERIMENT_ID", help="вивантажити історію навчання запуску з реєстру")
    parser.set_defaults(handler=evaluate)
