#!/usr/bin/env python3
"""
Головний файл MARLVol: калібрування моделей як кооперативна гра траєкторій
"""

import argparse
import asyncio
import sys
from typing import List, Optional

from cli.handlers import setup_commands
from utils.errors import MarlVolError
from utils.logger import setup_logger

# Налаштування логування
logger = setup_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marlvol", description="MARLVol calibration engine")
    subparsers = parser.add_subparsers(dest="command", required=True)
    setup_commands(subparsers)
    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """Головна функція запуску; повертає код виходу"""

    args = build_parser().parse_args(argv)
    logger.info(f"🚀 MARLVol: {args.command}")
    try:
        return await args.handler(args)
    except MarlVolError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("⏹️ Зупинено користувачем")
        return 130


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
