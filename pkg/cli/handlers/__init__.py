"""
Налаштування підкоманд
"""

import argparse

from . import calibrate, evaluate, surface


def setup_commands(subparsers: argparse._SubParsersAction):
    """Реєстрація всіх підкоманд"""
    calibrate.register(subparsers)
    evaluate.register(subparsers)
    surface.register(subparsers)
