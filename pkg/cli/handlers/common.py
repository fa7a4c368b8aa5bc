"""
Спільні прапорці експериментів
"""

import argparse
from typing import Optional

from config import config
from engine.dynamics import ActionVariant
from engine.state import StateMode
from services.exploration_service import InterpolationMode
from services.experiment_service import Overrides, apply_overrides
from services.registry_service import RegistryService
from services.schemas import ExperimentConfig


def add_experiment_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="JSON-файл експерименту")
    parser.add_argument("--seed", type=int, help="зерно генератора (u64)")
    parser.add_argument("--scale", type=int, help="ділить n та B (n_p не змінюється)")
    parser.add_argument("--out", help="тека артефактів")
    parser.add_argument("--state-mode", choices=[m.value for m in StateMode])
    parser.add_argument("--action-variant", choices=[v.value for v in ActionVariant])
    parser.add_argument("--interp", choices=[m.value for m in InterpolationMode])
    parser.add_argument("--shaping", choices=["on", "off"])
    parser.add_argument("--registry", default=config.DATABASE_PATH, help="SQLite-реєстр запусків")
    parser.add_argument("--no-registry", action="store_true", help="не писати у реєстр")


def overrides_from(args: argparse.Namespace) -> Overrides:
    return Overrides(
        seed=args.seed,
        scale=args.scale,
        out=args.out,
        state_mode=StateMode(args.state_mode) if args.state_mode else None,
        action_variant=ActionVariant(args.action_variant) if args.action_variant else None,
        interpolation=InterpolationMode(args.interp) if args.interp else None,
        shaping=None if args.shaping is None else args.shaping == "on",
    )


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Файл + прапорці; помилки валідації стають ConfigError до будь-яких обчислень"""
    return apply_overrides(ExperimentConfig.load(args.config), overrides_from(args))


def registry_from(args: argparse.Namespace) -> Optional[RegistryService]:
    if args.no_registry:
        return None
    return RegistryService(args.registry)
