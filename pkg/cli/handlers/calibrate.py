"""
Підкоманди calibrate-vanilla та calibrate-bermudan
"""

import argparse

from services.experiment_service import run_calibrate_bermudan, run_calibrate_vanilla
from utils.logger import setup_logger

from .common import add_experiment_arguments, load_experiment, registry_from

logger = setup_logger()


async def calibrate_vanilla(args: argparse.Namespace) -> int:
    """Калібрування посмішки локальної волатильності"""

    experiment = load_experiment(args)
    summary = await run_calibrate_vanilla(experiment, registry_from(args))
    logger.info(f"✅ Артефакти у {summary.run_dir}: {', '.join(sorted(summary.artifacts))}")
    return 0


async def calibrate_bermudan(args: argparse.Namespace) -> int:
    """Мінімізація бермудської ціни шляхозалежною волатильністю"""

    experiment = load_experiment(args)
    summary = await run_calibrate_bermudan(experiment, registry_from(args))
    logger.info(f"✅ Артефакти у {summary.run_dir}: {', '.join(sorted(summary.artifacts))}")
    return 0


def register(subparsers: argparse._SubParsersAction):
    vanilla = subparsers.add_parser("calibrate-vanilla", help="калібрування до сітки колів")
    add_experiment_arguments(vanilla)
    vanilla.set_defaults(handler=calibrate_vanilla)

    bermudan = subparsers.add_parser("calibrate-bermudan", help="бермудський експеримент з локалізацією")
    add_experiment_arguments(bermudan)
    bermudan.set_defaults(handler=calibrate_bermudan)
